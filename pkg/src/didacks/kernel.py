"""Closed-form inner products for point-source bases.

Three field geometries are supported:

``interior_II``
    field region the closed unit ball, sources outside it; inner product
    (f, g) = (1/4pi) ∮ d/dr (r f g) dσ at r = 1.
``exterior_I``
    field region outside the unit sphere, sources inside it; same surface
    form with the opposite sign.
``halfspace``
    field region z >= 0, sources below the plane; inner product
    (1/2pi) times the Dirichlet integral over the half-space.

For a monopole 1/|X - X'| the inner product with any admissible ``f`` is
``|P| f(P)`` (spherical, P = X'/|X'|^2) or ``f(M)`` (half-space, M the
mirror image of the source), so every Gram and right-hand-side entry has a
closed form.  Dipole components are source-coordinate derivatives of the
monopole forms; they are evaluated by exact forward-mode differentiation.

All closed forms are written in generic arithmetic and accept float64,
:class:`~didacks.precision.DoubleDouble` or dual-number coordinates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import precision
from .dual import Dual, deriv_of
from .geometry import as_vec3, kelvin_map, mirror_map
from .precision import Backend, DOUBLE, get_backend

# Scale applied to every replication closed form.  Exists only so the
# identity battery can be shown to catch a corrupted kernel.
_REPLICATION_SCALE = 1.0

_DOMAIN_SLACK = 1e-12


class Geometry(str, enum.Enum):
    INTERIOR = "interior_II"
    EXTERIOR = "exterior_I"
    HALFSPACE = "halfspace"

    @property
    def spherical(self) -> bool:
        return self is not Geometry.HALFSPACE


class Kind(str, enum.Enum):
    CONSTANT = "constant"
    MONOPOLE = "monopole"
    DIPOLE = "dipole_component"


class DomainError(ValueError):
    """A point or basis lies outside the region its geometry admits."""


class MissingGradientError(ValueError):
    pass


def _check_interp(geometry: Geometry, p: np.ndarray) -> None:
    if geometry is Geometry.INTERIOR:
        r = float(np.linalg.norm(p))
        if not 0.0 < r < 1.0:
            raise DomainError(f"interior_II interpolation point must satisfy 0 < |P| < 1, got |P| = {r}")
    elif geometry is Geometry.EXTERIOR:
        r = float(np.linalg.norm(p))
        if not r > 1.0:
            raise DomainError(f"exterior_I interpolation point must satisfy |P| > 1, got |P| = {r}")
    elif not p[2] > 0.0:
        raise DomainError(f"halfspace source must lie strictly below z = 0, got mirror point {p}")


@dataclass(frozen=True, eq=False)
class Basis:
    """One basis function.

    ``interp`` is the defining coordinate for point bases: the source is
    recovered from it in the working precision (Kelvin inversion for the
    spherical geometries, reflection for the half-space).
    """

    kind: Kind
    geometry: Geometry
    interp: np.ndarray | None = None
    direction: np.ndarray | None = None
    norm_factor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        if self.kind is Kind.CONSTANT:
            if self.geometry is not Geometry.INTERIOR:
                raise DomainError("the constant basis is only admissible in the interior_II geometry")
            if self.interp is not None:
                raise ValueError("the constant basis has no interpolation point")
        else:
            if self.interp is None:
                raise ValueError(f"{self.kind.value} basis needs a location")
            p = as_vec3(self.interp)
            _check_interp(self.geometry, p)
            p.setflags(write=False)
            object.__setattr__(self, "interp", p)
        if self.kind is Kind.DIPOLE:
            if self.direction is None:
                raise ValueError("dipole component needs a direction")
            d = as_vec3(self.direction)
            n = float(np.linalg.norm(d))
            if n == 0.0:
                raise ValueError("dipole direction must be nonzero")
            d = d / n
            d.setflags(write=False)
            object.__setattr__(self, "direction", d)
        elif self.direction is not None:
            raise ValueError("only dipole components carry a direction")
        if not (np.isfinite(self.norm_factor) and self.norm_factor > 0):
            raise ValueError(f"norm_factor must be positive, got {self.norm_factor}")

    @property
    def source(self) -> np.ndarray | None:
        if self.interp is None:
            return None
        if self.geometry.spherical:
            return kelvin_map(self.interp)
        return mirror_map(self.interp)

    @classmethod
    def constant(cls) -> "Basis":
        return cls(Kind.CONSTANT, Geometry.INTERIOR)

    @classmethod
    def monopole(cls, geometry, *, interp=None, source=None) -> "Basis":
        return cls(Kind.MONOPOLE, Geometry(geometry), _locate(geometry, interp, source))

    @classmethod
    def dipole(cls, geometry, direction, *, interp=None, source=None) -> "Basis":
        return cls(Kind.DIPOLE, Geometry(geometry), _locate(geometry, interp, source), direction)

    def __repr__(self) -> str:
        parts = [self.kind.value, self.geometry.value]
        if self.interp is not None:
            parts.append(f"interp={np.array2string(self.interp, precision=6)}")
        if self.direction is not None:
            parts.append(f"direction={np.array2string(self.direction, precision=3)}")
        if self.norm_factor != 1.0:
            parts.append(f"norm_factor={self.norm_factor:.6g}")
        return f"Basis({', '.join(parts)})"


def _locate(geometry, interp, source) -> np.ndarray:
    if (interp is None) == (source is None):
        raise ValueError("give exactly one of interp= or source=")
    if interp is not None:
        return as_vec3(interp)
    source = as_vec3(source)
    if Geometry(geometry).spherical:
        return kelvin_map(source)
    if not source[2] < 0.0:
        raise DomainError(f"halfspace source must satisfy z' < 0, got {source}")
    return mirror_map(source)


@dataclass(frozen=True)
class FieldProbe:
    """A function to be fitted, with optional gradient.

    ``value(x, y, z)`` and ``gradient(x, y, z)`` receive coordinate arrays.
    Written with plain arithmetic (and :func:`didacks.precision.sqrt`) they
    also run in extended precision; numpy-only callables still work in
    double precision.
    """

    value: Callable
    gradient: Callable | None = None
    name: str = "f"
    origin_value: float | None = None

    def __call__(self, point) -> float:
        x = as_vec3(point)
        return float(precision.to_float(self.value(x[0], x[1], x[2])))

    def grad(self, point) -> np.ndarray:
        if self.gradient is None:
            raise MissingGradientError(f"probe {self.name!r} has no gradient")
        x = as_vec3(point)
        return np.array([float(precision.to_float(g)) for g in self.gradient(x[0], x[1], x[2])])

    @property
    def value_at_origin(self) -> float:
        if self.origin_value is not None:
            return float(self.origin_value)
        return self((0.0, 0.0, 0.0))

    def at(self, x, y, z):
        """Evaluate at coordinates that may carry one dual layer.

        Dual coordinates are handled by the chain rule through ``gradient``
        so probes need not be written for dual arithmetic.
        """
        comps = (x, y, z)
        if not any(isinstance(c, Dual) for c in comps):
            return self.value(x, y, z)
        level = max(c.level for c in comps if isinstance(c, Dual))
        if any(isinstance(c, Dual) and isinstance(c.value, Dual) for c in comps):
            raise NotImplementedError("right-hand sides need first derivatives only")
        if self.gradient is None:
            raise MissingGradientError(f"dipole bases need the gradient of probe {self.name!r}")
        base = [c.value if isinstance(c, Dual) else c for c in comps]
        tang = [c.deriv if isinstance(c, Dual) else 0.0 for c in comps]
        g = self.gradient(*base)
        return Dual(self.value(*base), g[0] * tang[0] + g[1] * tang[1] + g[2] * tang[2], level)


# ---------------------------------------------------------------------------
# closed forms on coordinate tuples


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _kelvin(s):
    r2 = _dot(s, s)
    return (s[0] / r2, s[1] / r2, s[2] / r2)


def _mirror(s):
    return (s[0], s[1], -s[2])


def _dist(a, b):
    d = (a[0] - b[0], a[1] - b[1], a[2] - b[2])
    return precision.sqrt(_dot(d, d))


def _point_pair(geometry: Geometry, sa, sb):
    """Inner product of two monopoles with sources ``sa`` and ``sb``."""
    if geometry.spherical:
        pa = _kelvin(sa)
        return _REPLICATION_SCALE * precision.sqrt(_dot(pa, pa)) / _dist(pa, sb)
    return _REPLICATION_SCALE / _dist(_mirror(sa), sb)


def _constant_point(s):
    """(1, 1/|X - X'|) in the interior geometry: the monopole at the origin."""
    return _REPLICATION_SCALE / precision.sqrt(_dot(s, s))


def _pair_form(geometry: Geometry, const_a: bool, const_b: bool, sa, sb):
    if const_a and const_b:
        return 1.0
    if const_a:
        return _constant_point(sb)
    if const_b:
        return _constant_point(sa)
    return _point_pair(geometry, sa, sb)


# ---------------------------------------------------------------------------
# vectorized groups


@dataclass
class _Group:
    kind: Kind
    index: np.ndarray
    interp: np.ndarray | None
    direction: np.ndarray | None
    norm: np.ndarray


def _groups(bases: Sequence[Basis]) -> list[_Group]:
    out = []
    for kind in Kind:
        idx = np.array([i for i, b in enumerate(bases) if b.kind is kind], dtype=int)
        if idx.size == 0:
            continue
        interp = None if kind is Kind.CONSTANT else np.array([bases[i].interp for i in idx])
        direction = np.array([bases[i].direction for i in idx]) if kind is Kind.DIPOLE else None
        norm = np.array([bases[i].norm_factor for i in idx])
        out.append(_Group(kind, idx, interp, direction, norm))
    return out


def _geometry_of(bases: Sequence[Basis]) -> Geometry:
    geoms = {b.geometry for b in bases}
    if len(geoms) != 1:
        raise ValueError(f"all bases must share one geometry, got {sorted(g.value for g in geoms)}")
    return geoms.pop()


def _working_sources(group: _Group, geometry: Geometry, backend: Backend, shape, level: int):
    """Source coordinates in working precision, dual-seeded for dipoles."""
    if group.kind is Kind.CONSTANT:
        return None
    p = [backend.asarray(group.interp[:, i]).reshape(shape) for i in range(3)]
    s = _kelvin(p) if geometry.spherical else _mirror(p)
    if group.kind is Kind.DIPOLE:
        d = [group.direction[:, i].reshape(shape) for i in range(3)]
        s = tuple(Dual(si, di, level) for si, di in zip(s, d))
    return s


def _strip(value, dip_a: bool, dip_b: bool):
    if dip_b:
        value = deriv_of(value, 2)
    if dip_a:
        value = deriv_of(value, 1)
    return value


def _broadcast(value, backend: Backend, shape):
    if isinstance(value, (int, float)):
        return backend.asarray(np.full(shape, float(value)))
    return value + backend.zeros(shape)


def gram_block(bases_a: Sequence[Basis], bases_b: Sequence[Basis], backend: str | Backend = DOUBLE):
    """Matrix of inner products (a_i, b_j) in the working precision."""
    backend = get_backend(backend)
    geometry = _geometry_of(list(bases_a) + list(bases_b))
    shape = (len(bases_a), len(bases_b))
    out = backend.zeros(shape)
    for ga in _groups(bases_a):
        sa = _working_sources(ga, geometry, backend, (-1, 1), level=1)
        for gb in _groups(bases_b):
            sb = _working_sources(gb, geometry, backend, (1, -1), level=2)
            raw = _pair_form(geometry, ga.kind is Kind.CONSTANT, gb.kind is Kind.CONSTANT, sa, sb)
            block = _strip(raw, ga.kind is Kind.DIPOLE, gb.kind is Kind.DIPOLE)
            block = _broadcast(block, backend, (len(ga.index), len(gb.index)))
            # scale one factor at a time: a float64 product of the two would
            # not be an exact congruence and would perturb tiny eigenvalues
            block = block * ga.norm[:, None] * gb.norm[None, :]
            for row, i in enumerate(ga.index):
                out[i, gb.index] = block[row]
    return out


def rhs_vector(bases: Sequence[Basis], probe: FieldProbe, backend: str | Backend = DOUBLE):
    """Vector of inner products (b_k, f) in the working precision."""
    backend = get_backend(backend)
    geometry = _geometry_of(bases)
    out = backend.zeros(len(bases))
    for g in _groups(bases):
        n = len(g.index)
        if g.kind is Kind.CONSTANT:
            zero = backend.zeros(n)
            vals = probe.at(zero, zero, zero) + zero
        else:
            s = _working_sources(g, geometry, backend, (-1,), level=1)
            if geometry.spherical:
                p = _kelvin(s)
                vals = _REPLICATION_SCALE * precision.sqrt(_dot(p, p)) * probe.at(*p)
            else:
                vals = _REPLICATION_SCALE * probe.at(*_mirror(s))
            if g.kind is Kind.DIPOLE:
                vals = deriv_of(vals, 1)
        out[g.index] = _broadcast(vals, backend, (n,)) * g.norm
    return out


def basis_matrix(bases: Sequence[Basis], points, backend: str | Backend = DOUBLE, *, check_domain=True):
    """Values b_k(x_i) as an (n_points, n_bases) working-precision matrix."""
    backend = get_backend(backend)
    geometry = _geometry_of(bases)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if check_domain:
        check_field_points(geometry, pts)
    x = [backend.asarray(pts[:, i]).reshape(-1, 1) for i in range(3)]
    out = backend.zeros((len(pts), len(bases)))
    for g in _groups(bases):
        if g.kind is Kind.CONSTANT:
            block = backend.asarray(np.ones((len(pts), len(g.index))))
        else:
            s = _working_sources(g, geometry, backend, (1, -1), level=1)
            block = 1.0 / _dist(x, s)
            if g.kind is Kind.DIPOLE:
                block = deriv_of(block, 1)
        block = block * g.norm[None, :]
        for col, j in enumerate(g.index):
            out[:, j] = block[:, col]
    return out


def check_field_points(geometry: Geometry, pts: np.ndarray) -> None:
    geometry = Geometry(geometry)
    pts = np.atleast_2d(pts)
    if geometry is Geometry.INTERIOR:
        bad = np.linalg.norm(pts, axis=1) > 1.0 + _DOMAIN_SLACK
        what = "|x| <= 1"
    elif geometry is Geometry.EXTERIOR:
        bad = np.linalg.norm(pts, axis=1) < 1.0 - _DOMAIN_SLACK
        what = "|x| >= 1"
    else:
        bad = pts[:, 2] < -_DOMAIN_SLACK
        what = "z >= 0"
    if np.any(bad):
        raise DomainError(f"field point {pts[np.argmax(bad)]} outside the {geometry.value} domain ({what})")


# ---------------------------------------------------------------------------
# scalar operations


def gram_entry(a: Basis, b: Basis, backend: str | Backend = DOUBLE) -> float:
    """Inner product of two bases of the same geometry."""
    if a.geometry is not b.geometry:
        raise ValueError(f"geometry mismatch: {a.geometry.value} vs {b.geometry.value}")
    return precision.to_float(gram_block([a], [b], backend)[0, 0])


def rhs_entry(a: Basis, probe: FieldProbe, backend: str | Backend = DOUBLE) -> float:
    """Inner product of a basis with the probe, via the replication property."""
    return precision.to_float(rhs_vector([a], probe, backend)[0])


def basis_norm(a: Basis) -> float:
    return float(np.sqrt(gram_entry(replace(a, norm_factor=1.0), replace(a, norm_factor=1.0))))


def normalized(a: Basis) -> Basis:
    """Copy of ``a`` scaled to unit norm."""
    return replace(a, norm_factor=1.0 / basis_norm(a))


def evaluate_basis(a: Basis, x) -> float:
    return precision.to_float(basis_matrix([a], [as_vec3(x)])[0, 0])


def point_bases(points, geometry, *, dipoles: bool = False, constant: bool = False) -> list[Basis]:
    """Monopole (and optionally x/y/z dipole) bases at each interpolation point.

    Dipoles always come with the monopole at the same location; the
    optional constant basis is appended last.
    """
    geometry = Geometry(geometry)
    out = [Basis.monopole(geometry, interp=p) for p in np.atleast_2d(points)]
    if dipoles:
        for p in np.atleast_2d(points):
            out.extend(Basis.dipole(geometry, e, interp=p) for e in np.eye(3))
    if constant:
        out.append(Basis.constant())
    return out
