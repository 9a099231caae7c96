"""Test functions and quadrature checks of the inner-product identities.

Nothing in here uses the closed forms of :mod:`didacks.kernel` to compute
an answer; integrals are done by Gauss-Legendre quadrature and radial
derivatives by finite differences, so agreement with the kernel is an
independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import precision
from .dual import Dual, deriv_of
from .geometry import as_vec3
from .kernel import Basis, FieldProbe, Geometry, Kind, rhs_entry

# ---------------------------------------------------------------------------
# test functions


def _dual_gradient(value: Callable) -> Callable:
    def gradient(x, y, z):
        return (
            deriv_of(value(Dual(x, 1.0), y, z)),
            deriv_of(value(x, Dual(y, 1.0), z)),
            deriv_of(value(x, y, Dual(z, 1.0))),
        )

    return gradient


@dataclass(frozen=True)
class TestFunction:
    """A closed-form function with its gradient.

    ``domain`` names where it is harmonic and admissible: ``"entire"``
    (harmonic polynomials), ``"exterior"`` (decays, singular only inside
    the unit sphere), ``"halfspace"`` (decays, singular only below z = 0),
    ``"interior"`` (singular only outside the unit ball) or ``"none"``.
    """

    __test__ = False  # not a pytest class

    name: str
    value: Callable
    domain: str = "entire"
    params: dict = field(default_factory=dict)

    @property
    def gradient(self) -> Callable:
        return _dual_gradient(self.value)

    def __call__(self, x, y, z):
        return self.value(x, y, z)

    def probe(self) -> FieldProbe:
        return FieldProbe(self.value, self.gradient, name=self.name)

    def admissible(self, geometry: Geometry | str) -> bool:
        geometry = Geometry(geometry)
        if geometry is Geometry.INTERIOR:
            return self.domain in ("entire", "interior")
        if geometry is Geometry.EXTERIOR:
            return self.domain == "exterior"
        return self.domain == "halfspace"


def _f1(x, y, z):
    return (x * x + y * y) * 0.5 - z * z


def _f2(x, y, z):
    r2 = x * x + y * y + z * z
    z2 = z * z
    p3 = (z * z2 * 5.0 - z * r2 * 3.0) * 0.5
    p5 = (z * z2 * z2 * 63.0 - z * z2 * r2 * 70.0 + z * r2 * r2 * 15.0) * 0.125
    return z * 1.5 - p3 * 0.875 + p5 * 0.6875


def _power_xy(m: int):
    # (x + i y)^m, real and imaginary parts by repeated multiplication
    def parts(x, y):
        re, im = x * 0.0 + 1.0, x * 0.0
        for _ in range(m):
            re, im = re * x - im * y, re * y + im * x
        return re, im

    return parts


def h1(m: int) -> TestFunction:
    """rho^M sin(M theta) = Im (x + i y)^M."""
    parts = _power_xy(int(m))
    return TestFunction(f"H1{m}", lambda x, y, z: parts(x, y)[1] + z * 0.0, params={"M": int(m)})


def h2(m: int) -> TestFunction:
    """rho^M cos(M theta) = Re (x + i y)^M."""
    parts = _power_xy(int(m))
    return TestFunction(f"H2{m}", lambda x, y, z: parts(x, y)[0] + z * 0.0, params={"M": int(m)})


def point_source(q: float, source) -> TestFunction:
    """q / |X - X'| for a fixed source point."""
    s = as_vec3(source)
    r = float(np.linalg.norm(s))
    domain = "interior" if r > 1.0 else "exterior" if r < 1.0 else "none"

    def value(x, y, z):
        dx, dy, dz = x - s[0], y - s[1], z - s[2]
        return q / precision.sqrt(dx * dx + dy * dy + dz * dz)

    return TestFunction("point_source", value, domain, {"q": float(q), "source": s.tolist()})


def halfspace_source(q: float, source) -> TestFunction:
    """q / |X - X'| with X' below the plane, admissible in the half-space."""
    s = as_vec3(source)
    if not s[2] < 0.0:
        raise ValueError(f"half-space source must have z' < 0, got {s}")
    base = point_source(q, s)
    return TestFunction("point_source", base.value, "halfspace", base.params)


def constant(c: float) -> TestFunction:
    return TestFunction("constant", lambda x, y, z: x * 0.0 + c, params={"value": float(c)})


def _inverse_r(x, y, z):
    return 1.0 / precision.sqrt(x * x + y * y + z * z)


def _r2(x, y, z):
    return x * x + y * y + z * z


_FIXED = {
    "F1": TestFunction("F1", _f1),
    "F2": TestFunction("F2", _f2),
    "F3": TestFunction("F3", lambda x, y, z: _f1(x, y, z) + 1.0),
    "x": TestFunction("x", lambda x, y, z: x + 0.0 * y),
    "y": TestFunction("y", lambda x, y, z: y + 0.0 * x),
    "z": TestFunction("z", lambda x, y, z: z + 0.0 * x),
    "x2_minus_z2": TestFunction("x2_minus_z2", lambda x, y, z: x * x - z * z),
    "inverse_r": TestFunction("inverse_r", _inverse_r, "exterior"),
    "r2": TestFunction("r2", _r2, "none"),
}

REGISTRY_NAMES = tuple(sorted(_FIXED)) + ("H1", "H2", "point_source", "constant")


def test_function(name: str, **params) -> TestFunction:
    """Look up a test function by name.

    Parametrized names: ``H1``/``H2`` (``M``), ``point_source`` (``q``,
    ``source``, optional ``halfspace``) and ``constant`` (``value``).
    """
    params = dict(params)
    if name in _FIXED:
        if params:
            raise ValueError(f"test function {name!r} takes no parameters, got {sorted(params)}")
        return _FIXED[name]
    builders = {
        "H1": lambda p: h1(p.pop("M")),
        "H2": lambda p: h2(p.pop("M")),
        "point_source": lambda p: (halfspace_source if p.pop("halfspace", False) else point_source)(
            p.pop("q"), p.pop("source")
        ),
        "constant": lambda p: constant(p.pop("value")),
    }
    if name not in builders:
        raise ValueError(f"unknown test function {name!r}; known: {', '.join(REGISTRY_NAMES)}")
    try:
        tf = builders[name](params)
    except KeyError as exc:
        raise ValueError(f"test function {name!r} is missing parameter {exc.args[0]!r}") from None
    if params:
        raise ValueError(f"unexpected parameters for {name!r}: {sorted(params)}")
    return tf


def laplacian(f: Callable, points, h: float = 1e-3) -> np.ndarray:
    """Central second-difference Laplacian at each row of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    x, y, z = pts.T
    f0 = np.asarray(f(x, y, z), dtype=np.float64)
    total = -6.0 * f0
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        total = total + f(x + step[0], y + step[1], z + step[2]) + f(x - step[0], y - step[1], z - step[2])
    return total / (h * h)


# ---------------------------------------------------------------------------
# functions from bases


def basis_function(b: Basis) -> Callable:
    """Generic-arithmetic callable for one basis (including its norm factor)."""
    k = b.norm_factor
    if b.kind is Kind.CONSTANT:
        return lambda x, y, z: x * 0.0 + k
    s = b.source
    if b.kind is Kind.MONOPOLE:

        def mono(x, y, z):
            dx, dy, dz = x - s[0], y - s[1], z - s[2]
            return k / precision.sqrt(dx * dx + dy * dy + dz * dz)

        return mono
    d = b.direction

    def dipole(x, y, z):
        dx, dy, dz = x - s[0], y - s[1], z - s[2]
        r2 = dx * dx + dy * dy + dz * dz
        return k * (d[0] * dx + d[1] * dy + d[2] * dz) / (r2 * precision.sqrt(r2))

    return dipole


def _callable(f) -> Callable:
    if isinstance(f, Basis):
        return basis_function(f)
    if isinstance(f, FieldProbe):
        return f.value
    if callable(f):
        return f
    raise TypeError(f"cannot integrate object of type {type(f).__name__}")


def _gradient(f) -> Callable:
    if isinstance(f, FieldProbe) and f.gradient is not None:
        return f.gradient
    return _dual_gradient(_callable(f))


def combination(coefficients, functions: Sequence) -> Callable:
    """sum_k c_k f_k as one callable."""
    fs = [_callable(f) for f in functions]
    cs = [float(c) for c in coefficients]

    def value(x, y, z):
        total = x * 0.0
        for c, f in zip(cs, fs):
            total = total + c * f(x, y, z)
        return total

    return value


def difference(f, g) -> Callable:
    ff, gg = _callable(f), _callable(g)
    return lambda x, y, z: ff(x, y, z) - gg(x, y, z)


# ---------------------------------------------------------------------------
# quadrature


class QuadratureError(ArithmeticError):
    """Successive refinements disagree by more than the tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    n_polar: int = 64
    n_azimuth: int = 128
    n_radial: int = 64
    step: float = 2e-3
    tol: float = 1e-9

    def __post_init__(self):
        for name in ("n_polar", "n_azimuth", "n_radial"):
            v = getattr(self, name)
            if int(v) != v or v < 8:
                raise ValueError(f"{name} must be an integer >= 8, got {v!r}")
        if not 0.0 < self.step < 0.1:
            raise ValueError(f"step must be in (0, 0.1), got {self.step!r}")

    @classmethod
    def parse(cls, text: str) -> "QuadratureSpec":
        """From ``"n_polar,n_azimuth,n_radial"``."""
        try:
            a, b, c = (int(t) for t in text.split(","))
        except ValueError:
            raise ValueError(f"expected three comma-separated integers, got {text!r}") from None
        return cls(a, b, c)

    def sphere(self):
        """Unit directions (n, 3) and weights summing to 4 pi."""
        u, wu = np.polynomial.legendre.leggauss(self.n_polar)
        phi = 2.0 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth
        st = np.sqrt(1.0 - u * u)
        dirs = np.stack(
            [
                np.outer(st, np.cos(phi)).ravel(),
                np.outer(st, np.sin(phi)).ravel(),
                np.repeat(u, self.n_azimuth),
            ],
            axis=1,
        )
        w = np.repeat(wu, self.n_azimuth) * (2.0 * np.pi / self.n_azimuth)
        return dirs, w

    def radial(self, a: float = 0.0, b: float = 1.0):
        t, w = np.polynomial.legendre.leggauss(self.n_radial)
        return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def _on_sphere(f: Callable, dirs: np.ndarray, r: float) -> np.ndarray:
    p = dirs * r
    return np.asarray(f(p[:, 0], p[:, 1], p[:, 2]), dtype=np.float64) + np.zeros(len(p))


def surface_ip_sigma(f, g, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """(1/4 pi) times the integral of f g over the unit sphere."""
    dirs, w = spec.sphere()
    ff, gg = _callable(f), _callable(g)
    return float(w @ (_on_sphere(ff, dirs, 1.0) * _on_sphere(gg, dirs, 1.0))) / (4.0 * np.pi)


_MAX_HALVINGS = 4


def _radial_flux(f, g, spec: QuadratureSpec) -> float:
    """(1/4 pi) integral of d/dr (r f g) at r = 1, Richardson-checked."""
    dirs, w = spec.sphere()
    ff, gg = _callable(f), _callable(g)

    def mean_at(r):
        return float(w @ (r * _on_sphere(ff, dirs, r) * _on_sphere(gg, dirs, r))) / (4.0 * np.pi)

    cache: dict[float, float] = {}

    def m(r):
        if r not in cache:
            cache[r] = mean_at(r)
        return cache[r]

    def five_point(h):
        return (-m(1 + 2 * h) + 8 * m(1 + h) - 8 * m(1 - h) + m(1 - 2 * h)) / (12 * h)

    def richardson(h):
        return (64.0 * five_point(h / 2) - five_point(h)) / 63.0

    # high-degree integrands need a finer step; halve a few times before giving up
    h = spec.step
    coarse = richardson(h)
    for _ in range(_MAX_HALVINGS):
        h /= 2
        fine = richardson(h)
        if abs(coarse - fine) <= spec.tol * max(1.0, abs(fine)):
            return fine
        coarse = fine
    raise QuadratureError(f"radial derivative not converged down to step {h:.1e}: last two {coarse!r} vs {fine!r}")


def surface_ip_II(f, g, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Interior inner product from its surface definition."""
    return _radial_flux(f, g, spec)


def surface_ip_I(f, g, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Exterior inner product, -(1/4 pi) integral of d/dr (r f g) at r = 1."""
    return -_radial_flux(f, g, spec)


def dirichlet_volume(f, g, weight: str = "1", spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Integral of weight * grad f . grad g over the unit ball, weight "1" or "1/r"."""
    if weight not in ("1", "1/r"):
        raise ValueError(f"weight must be '1' or '1/r', got {weight!r}")
    dirs, w = spec.sphere()
    r, wr = spec.radial()
    power = 2 if weight == "1" else 1
    gf, gg = _gradient(f), _gradient(g)
    total = 0.0
    for ri, wi in zip(r, wr):
        p = dirs * ri
        a = gf(p[:, 0], p[:, 1], p[:, 2])
        b = gg(p[:, 0], p[:, 1], p[:, 2])
        dot = sum(np.asarray(ai, dtype=np.float64) * np.asarray(bi, dtype=np.float64) for ai, bi in zip(a, b))
        total += wi * ri**power * float(w @ (dot + np.zeros(len(p))))
    return total


def halfspace_dirichlet(f, g, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Integral of grad f . grad g over z > 0.

    Spherical coordinates about the origin on the upper hemisphere; the
    radius is split at 1 and the infinite part mapped by r = 1/t.
    """
    u, wu = np.polynomial.legendre.leggauss(spec.n_polar)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    phi = 2.0 * np.pi * np.arange(spec.n_azimuth) / spec.n_azimuth
    st = np.sqrt(1.0 - u * u)
    dirs = np.stack(
        [np.outer(st, np.cos(phi)).ravel(), np.outer(st, np.sin(phi)).ravel(), np.repeat(u, spec.n_azimuth)],
        axis=1,
    )
    w = np.repeat(wu, spec.n_azimuth) * (2.0 * np.pi / spec.n_azimuth)
    gf, gg = _gradient(f), _gradient(g)

    def shell(r):
        p = dirs * r
        a = gf(p[:, 0], p[:, 1], p[:, 2])
        b = gg(p[:, 0], p[:, 1], p[:, 2])
        dot = sum(np.asarray(ai, dtype=np.float64) * np.asarray(bi, dtype=np.float64) for ai, bi in zip(a, b))
        return float(w @ (dot + np.zeros(len(p))))

    total = 0.0
    for panel in ((0.0, 0.5), (0.5, 1.0)):
        r, wr = spec.radial(*panel)
        total += sum(wi * ri * ri * shell(ri) for ri, wi in zip(r, wr))
        # r = 1/t maps t in panel onto r in [1, inf): r^2 dr = t^-4 dt
        t, wt = spec.radial(*panel)
        total += sum(wi / ti**4 * shell(1.0 / ti) for ti, wi in zip(t, wt))
    return total


def origin_value(f) -> float:
    ff = _callable(f)
    return float(precision.to_float(ff(np.zeros(1), np.zeros(1), np.zeros(1)))[0])


# ---------------------------------------------------------------------------
# identity battery


SURFACE_TOL = 1e-8
VOLUME_TOL = 1e-6

IDENTITIES = (
    "Eq15",
    "Eq17",
    "Eq19",
    "Eq20",
    "Eq18_inequality",
    "replication_interior",
    "replication_exterior",
    "replication_halfspace",
    "pythagorean",
    "constant_basis",
)


@dataclass(frozen=True)
class IdentityReport:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    detail: str = ""

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    @property
    def scaled_residual(self) -> float:
        return abs(self.residual) / max(1.0, abs(self.lhs), abs(self.rhs))

    @property
    def passed(self) -> bool:
        return self.scaled_residual <= self.tolerance


class InadmissibleFunctionError(ValueError):
    pass


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise InadmissibleFunctionError(message)


def _label(f) -> str:
    if isinstance(f, (TestFunction, FieldProbe)):
        return f.name
    if isinstance(f, Basis):
        return f"{f.kind.value}@{np.array2string(f.interp, precision=3) if f.interp is not None else 'origin'}"
    return getattr(f, "__name__", "f")


def check_identity(
    name: str,
    f,
    g=None,
    spec: QuadratureSpec = QuadratureSpec(),
    *,
    basis: Basis | Sequence[Basis] | None = None,
) -> IdentityReport:
    """Evaluate both sides of a named identity by quadrature.

    ``f`` and ``g`` are test functions, probes, bases or plain callables;
    identities about a basis function take it through ``basis=``.
    """
    if name not in IDENTITIES:
        raise ValueError(f"unknown identity {name!r}; known: {', '.join(IDENTITIES)}")
    if isinstance(f, TestFunction) and name not in ("replication_exterior", "replication_halfspace"):
        _require(f.domain in ("entire", "interior"), f"{f.name} is not admissible in the interior geometry")
    g = f if g is None else g
    detail = f"f={_label(f)}, g={_label(g)}"

    if name == "Eq15":
        lhs = surface_ip_II(f, g, spec)
        rhs = dirichlet_volume(f, g, "1", spec) / (2 * np.pi) + surface_ip_sigma(f, g, spec)
        return IdentityReport(name, lhs, rhs, VOLUME_TOL, detail)
    if name == "Eq17":
        lhs = surface_ip_II(f, g, spec)
        rhs = dirichlet_volume(f, g, "1/r", spec) / (2 * np.pi) + origin_value(f) * origin_value(g)
        return IdentityReport(name, lhs, rhs, VOLUME_TOL, detail)
    if name == "Eq20":
        lhs = dirichlet_volume(f, g, "1", spec)
        rhs = (
            dirichlet_volume(f, g, "1/r", spec)
            - 2 * np.pi * surface_ip_sigma(f, g, spec)
            + 2 * np.pi * origin_value(f) * origin_value(g)
        )
        return IdentityReport(name, lhs, rhs, VOLUME_TOL, detail)
    if name == "Eq18_inequality":
        d_r = dirichlet_volume(f, f, "1/r", spec)
        d_1 = dirichlet_volume(f, f, "1", spec)
        sig = surface_ip_sigma(f, f, spec)
        f0 = origin_value(f)
        margin = min(d_r - d_1, sig - f0 * f0)
        # reported as lhs = min(margin, 0) so a violation shows as a residual
        return IdentityReport(name, min(margin, 0.0), 0.0, VOLUME_TOL, f"{detail}, margin={margin:.3e}")

    if name == "pythagorean":
        return _pythagorean(f, basis, spec, detail)
    b = _single_basis(basis, name)
    if name == "Eq19":
        _require(b.geometry is Geometry.INTERIOR and b.kind is Kind.MONOPOLE, "Eq19 needs an interior monopole")
        p = float(np.linalg.norm(b.interp))
        pf = float(_callable(f)(*b.interp))
        lhs = dirichlet_volume(f, b, "1/r", spec) * b.norm_factor**-1
        rhs = 2 * np.pi * p * pf - 2 * np.pi * p * origin_value(f)
        return IdentityReport(name, lhs, rhs, VOLUME_TOL, f"{detail}, basis={_label(b)}")
    if name == "replication_interior":
        _require(b.geometry is Geometry.INTERIOR, "replication_interior needs an interior basis")
        lhs = surface_ip_II(b, f, spec)
        rhs = rhs_entry(b, _as_probe(f))
        return IdentityReport(name, lhs, rhs, SURFACE_TOL, f"{detail}, basis={_label(b)}")
    if name == "replication_exterior":
        _require(b.geometry is Geometry.EXTERIOR, "replication_exterior needs an exterior basis")
        _require(
            not isinstance(f, TestFunction) or f.domain == "exterior",
            f"{_label(f)} does not decay outside the unit sphere",
        )
        lhs = surface_ip_I(b, f, spec)
        rhs = rhs_entry(b, _as_probe(f))
        return IdentityReport(name, lhs, rhs, SURFACE_TOL, f"{detail}, basis={_label(b)}")
    if name == "replication_halfspace":
        _require(b.geometry is Geometry.HALFSPACE, "replication_halfspace needs a half-space basis")
        _require(
            not isinstance(f, TestFunction) or f.domain == "halfspace",
            f"{_label(f)} does not decay in the half-space",
        )
        lhs = halfspace_dirichlet(b, f, spec) / (2 * np.pi)
        rhs = rhs_entry(b, _as_probe(f))
        return IdentityReport(name, lhs, rhs, VOLUME_TOL, f"{detail}, basis={_label(b)}")
    if name == "constant_basis":
        _require(b.kind is Kind.CONSTANT, "constant_basis needs the constant basis")
        lhs = surface_ip_II(b, f, spec)
        rhs = origin_value(f) * b.norm_factor
        return IdentityReport(name, lhs, rhs, SURFACE_TOL, detail)
    raise AssertionError(name)  # every name is handled above


def _pythagorean(f, basis, spec: QuadratureSpec, detail: str) -> IdentityReport:
    """|f - phi|^2 = |f|^2 - q.A for the least-squares fit phi."""
    from .fit import FitProblem, solve_fit

    bases = [basis] if isinstance(basis, Basis) else list(basis)
    result = solve_fit(FitProblem(bases, _as_probe(f)), eigen=False)
    resid = difference(f, combination(result.coefficients_float, bases))
    lhs = surface_ip_II(resid, resid, spec)
    norm_f = surface_ip_II(f, f, spec)
    rhs = norm_f - result.fit_norm_sq
    # scale by |f|^2: both sides are small differences of O(|f|^2) numbers
    return IdentityReport(
        "pythagorean", lhs / norm_f, rhs / norm_f, 1e-6, f"{detail}, n_bases={len(bases)}, |f|^2={norm_f:.6g}"
    )


def _single_basis(basis, name: str) -> Basis:
    if isinstance(basis, Basis):
        return basis
    if basis is not None and len(basis) == 1:
        return basis[0]
    raise ValueError(f"identity {name} needs exactly one basis")


def _as_probe(f) -> FieldProbe:
    if isinstance(f, FieldProbe):
        return f
    if isinstance(f, TestFunction):
        return f.probe()
    if isinstance(f, Basis):
        fn = basis_function(f)
        return FieldProbe(fn, _dual_gradient(fn), name=_label(f))
    fn = _callable(f)
    return FieldProbe(fn, _dual_gradient(fn))


def battery_functions() -> list[TestFunction]:
    """The documented identity test set."""
    names = ("F1", "F2", "x", "y", "z", "x2_minus_z2")
    return [test_function(n) for n in names] + [h1(2), h2(3)]


def battery_bases() -> list[Basis]:
    return [
        Basis.monopole(Geometry.INTERIOR, source=(0.0, 0.0, 2.0)),
        Basis.monopole(Geometry.INTERIOR, interp=(0.3, -0.2, 0.4)),
    ]


def run_battery(spec: QuadratureSpec = QuadratureSpec(), only: str | None = None) -> list[IdentityReport]:
    """Every identity over the documented test-function set."""
    if only is not None and only not in IDENTITIES:
        raise ValueError(f"unknown identity {only!r}; known: {', '.join(IDENTITIES)}")
    wanted = (lambda n: n == only) if only else (lambda n: True)
    fs = battery_functions()
    bases = battery_bases()
    out: list[IdentityReport] = []
    pairs = [(fs[0], fs[1]), (fs[2], fs[2]), (fs[5], fs[0]), (fs[6], fs[6]), (fs[1], fs[1])]
    for nm in ("Eq15", "Eq17", "Eq20"):
        if wanted(nm):
            out.extend(check_identity(nm, a, b, spec) for a, b in pairs)
    if wanted("Eq18_inequality"):
        out.extend(check_identity("Eq18_inequality", f, spec=spec) for f in fs)
    for nm in ("Eq19", "replication_interior"):
        if wanted(nm):
            out.extend(check_identity(nm, f, spec=spec, basis=b) for f in fs for b in bases)
    if wanted("replication_interior"):
        # Gram entries: a basis replicated against another basis
        out.append(check_identity("replication_interior", bases[1], spec=spec, basis=bases[0]))
        dip = Basis.dipole(Geometry.INTERIOR, (0.0, 0.6, 0.8), interp=(0.2, 0.1, -0.3))
        out.append(check_identity("replication_interior", test_function("F2"), spec=spec, basis=dip))
    if wanted("constant_basis"):
        out.extend(check_identity("constant_basis", f, spec=spec, basis=Basis.constant()) for f in fs[:2])
        out.append(check_identity("constant_basis", test_function("constant", value=1.0), spec=spec, basis=Basis.constant()))
        out.append(check_identity("constant_basis", bases[0], spec=spec, basis=Basis.constant()))
    if wanted("replication_exterior"):
        ext = Basis.monopole(Geometry.EXTERIOR, source=(0.0, 0.0, 0.5))
        ext2 = Basis.monopole(Geometry.EXTERIOR, source=(0.2, -0.3, 0.1))
        for f in (test_function("inverse_r"), point_source(1.0, (0.1, 0.2, -0.3))):
            out.extend(check_identity("replication_exterior", f, spec=spec, basis=b) for b in (ext, ext2))
    if wanted("replication_halfspace"):
        hb = Basis.monopole(Geometry.HALFSPACE, source=(0.0, 0.0, -1.0))
        f = halfspace_source(1.0, (0.3, 0.2, -0.8))
        out.append(check_identity("replication_halfspace", f, spec=spec, basis=hb))
    if wanted("pythagorean"):
        from .geometry import ring_grid
        from .kernel import point_bases

        bases_p = point_bases(ring_grid(5, 0.6).points, Geometry.INTERIOR)
        out.extend(check_identity("pythagorean", f, spec=spec, basis=bases_p) for f in (fs[0], fs[1]))
    return out
