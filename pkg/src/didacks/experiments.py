"""Declarative fit experiments and their tabular reports."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from .fit import ErrorStats, FitProblem, FitResult, fit_errors, make_bases, phi_at_origin, solve_fit
from .geometry import PointConfig, ring_grid
from .kernel import FieldProbe, Geometry
from .oracle import test_function

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["label", "probe", "grids"],
    "properties": {
        "label": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "geometry": {"enum": [g.value for g in Geometry]},
        "probe": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
        },
        "grids": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["n_theta", "radius"],
                "properties": {
                    "n_theta": {"type": "integer", "minimum": 2},
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                    "center": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                },
            },
        },
        "kinds": {
            "type": "array",
            "items": {"enum": ["monopole", "dipole"]},
            "minItems": 1,
            "uniqueItems": True,
            "contains": {"const": "monopole"},
        },
        "constant": {"type": "boolean"},
        "normalize": {"type": "boolean"},
        "precision": {"enum": ["double", "extended"]},
        "domain_radius": {"type": "number", "exclusiveMinimum": 0},
        "eval_radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "eval_n_theta": {"type": "integer", "minimum": 2},
        "eval_center": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "eigen": {"type": "boolean"},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string"}, "table": {"type": "string"}},
        },
        "cases": {"type": "array", "items": {"type": "object"}},
    },
}

DEFAULTS: dict[str, Any] = {
    "geometry": Geometry.INTERIOR.value,
    "kinds": ["monopole"],
    "constant": False,
    "normalize": False,
    "precision": "double",
    "domain_radius": 1.0,
    "eval_radii": [1.0, 0.5, 0.25],
    "eval_n_theta": 36,
    "eval_center": [0.0, 0.0, 0.0],
    "eigen": True,
}


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _validate(doc: dict, where: str) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        key = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: invalid value at '{key}': {exc.message}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment document (defaults filled in).

    ``cases`` holds per-case overrides that are deep-merged onto the rest
    of the document; :meth:`expand` yields one single-case config each.
    """

    doc: dict

    @classmethod
    def from_dict(cls, doc: dict, where: str = "config") -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError(f"{where}: top level must be a JSON object")
        _validate(doc, where)
        full = _merge(DEFAULTS, doc)
        cfg = cls(full)
        for i, case in enumerate(cfg.expand()):
            _validate(case.doc, f"{where}: cases[{i}]")
            case._check()
        return cfg

    @classmethod
    def from_json(cls, text: str, where: str = "config") -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{where}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(doc, where)

    @classmethod
    def load(cls, path_or_name: str | Path) -> "ExperimentConfig":
        """Read a JSON file, or a bundled config by name."""
        p = Path(path_or_name)
        if p.is_file():
            return cls.from_json(p.read_text(encoding="utf-8"), str(p))
        name = str(path_or_name)
        if name in bundled_names():
            res = resources.files("didacks.configs").joinpath(f"{name}.json")
            return cls.from_json(res.read_text(encoding="utf-8"), name)
        raise ConfigError(f"no config file or bundled config named {name!r}")

    def to_json(self) -> str:
        return json.dumps(self.doc, indent=2, sort_keys=True) + "\n"

    def expand(self) -> list["ExperimentConfig"]:
        base = {k: v for k, v in self.doc.items() if k != "cases"}
        cases = self.doc.get("cases") or []
        if not cases:
            return [ExperimentConfig(base)]
        return [ExperimentConfig(_merge(base, c)) for c in cases]

    def with_precision(self, precision: str) -> "ExperimentConfig":
        doc = copy.deepcopy(self.doc)
        doc["precision"] = precision
        for c in doc.get("cases") or []:
            c.pop("precision", None)
        return ExperimentConfig.from_dict(doc)

    def __getattr__(self, name):
        doc = object.__getattribute__(self, "doc")
        if name in doc:
            return doc[name]
        raise AttributeError(name)

    def _check(self) -> None:
        geometry = Geometry(self.doc["geometry"])
        if self.doc["constant"] and geometry is not Geometry.INTERIOR:
            raise ConfigError(f"{self.doc['label']}: the constant basis is only admissible for interior_II")
        try:
            self.probe_function()
        except ValueError as exc:
            raise ConfigError(f"{self.doc['label']}: probe: {exc}") from None

    def probe_function(self):
        spec = self.doc["probe"]
        return test_function(spec["name"], **spec.get("params", {}))


# ---------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class ReportRow:
    label: str
    geometry: str
    probe: str
    r_p: tuple[float, ...]
    n_bases: int
    precision: str
    normalized: bool
    phi_origin: float
    stats: tuple[ErrorStats, ...]
    collocation: float
    gradient_residual: float
    condition_number: float
    raw_condition_number: float
    lambda_min: float
    source_mean: float
    source_std: float
    seconds: float
    flags: tuple[str, ...] = field(default=())
    result: FitResult | None = field(default=None, compare=False, repr=False)

    def stats_at(self, radius: float) -> ErrorStats:
        for s in self.stats:
            if math.isclose(s.eval_radius, radius, rel_tol=1e-12):
                return s
        raise KeyError(f"no statistics at R_E = {radius}")


def _scaled_probe(tf, a: float, center=(0.0, 0.0, 0.0)) -> FieldProbe:
    """Probe in unit-sphere coordinates for a problem posed at radius ``a``."""
    if a == 1.0:
        return tf.probe()
    value, grad = tf.value, tf.gradient

    def v(x, y, z):
        return value(x * a, y * a, z * a)

    def g(x, y, z):
        gx, gy, gz = grad(x * a, y * a, z * a)
        return gx * a, gy * a, gz * a

    return FieldProbe(v, g, name=tf.name)


def _grid(n_theta: int, radius: float, center) -> PointConfig:
    g = ring_grid(n_theta, radius)
    c = np.asarray(center, dtype=np.float64)
    if np.any(c != 0.0):
        return PointConfig(radius, g.points + c, n_theta)
    return g


def run_case(cfg: ExperimentConfig) -> ReportRow:
    """Solve one (already expanded) experiment case."""
    doc = cfg.doc
    start = time.perf_counter()
    a = float(doc["domain_radius"])
    geometry = Geometry(doc["geometry"])
    tf = cfg.probe_function()
    probe = _scaled_probe(tf, a)
    grids = [_grid(g["n_theta"], g["radius"] / a, np.asarray(g.get("center", [0, 0, 0])) / a) for g in doc["grids"]]
    bases = make_bases(grids, geometry, dipoles="dipole" in doc["kinds"], constant=doc["constant"])
    problem = FitProblem(bases, probe, normalize=doc["normalize"], precision=doc["precision"])
    result = solve_fit(problem, eigen=doc["eigen"])
    flags = []
    if result.indefinite:
        flags.append("indefinite")
    if not doc["eigen"]:
        flags.append("no_eigen")
    if geometry is Geometry.INTERIOR:
        phi0 = phi_at_origin(result)
    else:
        phi0 = float("nan")
        flags.append("origin_outside_domain")
    stats = []
    center = np.asarray(doc["eval_center"], dtype=np.float64) / a
    for r_e in doc["eval_radii"]:
        grid = _grid(doc["eval_n_theta"], r_e / a, center)
        errors = fit_errors(result, probe, grid.points)
        ref = np.asarray(probe.value(*grid.points.T), dtype=np.float64)
        stats.append(ErrorStats.from_errors(errors, r_e, reference=ref))
    return ReportRow(
        label=doc["label"],
        geometry=geometry.value,
        probe=_probe_label(doc["probe"]),
        r_p=tuple(float(g["radius"]) for g in doc["grids"]),
        n_bases=len(bases),
        precision=result.precision,
        normalized=bool(doc["normalize"]),
        phi_origin=phi0,
        stats=tuple(stats),
        collocation=result.collocation_residual,
        gradient_residual=float("nan") if result.gradient_residual is None else result.gradient_residual,
        condition_number=result.condition_number,
        raw_condition_number=float("nan") if result.raw_condition_number is None else result.raw_condition_number,
        lambda_min=result.lambda_min,
        source_mean=result.source_mean,
        source_std=result.source_std,
        seconds=time.perf_counter() - start,
        flags=tuple(flags),
        result=result,
    )


def _probe_label(spec: dict) -> str:
    params = spec.get("params") or {}
    if not params:
        return spec["name"]
    inner = ";".join(f"{k}={params[k]}" for k in sorted(params))
    return f"{spec['name']}({inner})"


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[ReportRow]:
    """Run every case of ``config`` in order (optionally in worker processes)."""
    cases = config.expand()
    if jobs > 1 and len(cases) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_case, cases))
        return rows
    return [run_case(c) for c in cases]


# ---------------------------------------------------------------------------
# reports


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6e}"


def _radii(rows: Sequence[ReportRow]) -> list[float]:
    seen: list[float] = []
    for r in rows:
        for s in r.stats:
            if not any(math.isclose(s.eval_radius, t, rel_tol=1e-12) for t in seen):
                seen.append(s.eval_radius)
    return seen


def csv_header(rows: Sequence[ReportRow]) -> list[str]:
    head = ["case", "f", "geometry", "R_P", "n_bases", "precision", "normalized", "phi_origin"]
    for r_e in _radii(rows):
        tag = f"{r_e:g}"
        head += [f"std_RE={tag}", f"max_RE={tag}", f"mean_RE={tag}", f"rms_RE={tag}", f"rel_rms_RE={tag}"]
    head += ["coll_check", "gradient_check", "C#", "C#_raw", "lambda_min", "q_mean", "q_std", "flags"]
    return head


def csv_rows(rows: Sequence[ReportRow]) -> list[list[str]]:
    radii = _radii(rows)
    out = []
    for r in rows:
        line = [
            r.label,
            r.probe,
            r.geometry,
            " ".join(f"{x:g}" for x in r.r_p),
            str(r.n_bases),
            r.precision,
            "yes" if r.normalized else "no",
            _fmt(r.phi_origin),
        ]
        for r_e in radii:
            try:
                s = r.stats_at(r_e)
                line += [_fmt(s.std), _fmt(s.max_magnitude), _fmt(s.mean), _fmt(s.rms), _fmt(s.relative_rms)]
            except KeyError:
                line += [""] * 5
        line += [
            _fmt(r.collocation),
            _fmt(r.gradient_residual),
            _fmt(r.condition_number),
            _fmt(r.raw_condition_number),
            _fmt(r.lambda_min),
            _fmt(r.source_mean),
            _fmt(r.source_std),
            ";".join(r.flags),
        ]
        out.append(line)
    return out


def to_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(rows))
    w.writerows(csv_rows(rows))
    return buf.getvalue()


def to_table(rows: Sequence[ReportRow]) -> str:
    """Aligned plain-text rendering of the report (short number format)."""
    radii = _radii(rows)
    head = ["case", "f", "R_P", "phi(0)"]
    for r_e in radii:
        head += [f"std@{r_e:g}", f"max@{r_e:g}"]
    head += ["coll", "C#", "q_mean", "q_std", "flags"]

    def short(x):
        return _fmt(x) if not isinstance(x, float) or not math.isfinite(x) else f"{x:.3e}"

    body = []
    for r in rows:
        line = [r.label, r.probe, ",".join(f"{x:g}" for x in r.r_p), short(r.phi_origin)]
        for r_e in radii:
            try:
                s = r.stats_at(r_e)
                line += [short(s.std), short(s.max_magnitude)]
            except KeyError:
                line += ["", ""]
        line += [short(r.collocation), short(r.condition_number), short(r.source_mean), short(r.source_std), ",".join(r.flags)]
        body.append(line)
    widths = [max(len(str(x)) for x in col) for col in zip(head, *body)]
    fmt_line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt_line(head), fmt_line(["-" * w for w in widths])]
    lines += [fmt_line(b) for b in body]
    return "\n".join(lines) + "\n"


def bundled_names() -> list[str]:
    root = resources.files("didacks.configs")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))
