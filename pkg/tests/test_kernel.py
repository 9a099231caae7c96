import math

import mpmath
import numpy as np
import pytest

from didacks import kernel
from didacks.kernel import (
    Basis,
    DomainError,
    FieldProbe,
    Geometry,
    MissingGradientError,
    basis_matrix,
    basis_norm,
    evaluate_basis,
    gram_block,
    gram_entry,
    normalized,
    point_bases,
    rhs_entry,
    rhs_vector,
)
from didacks.oracle import test_function as make_function
from didacks.precision import EXTENDED

I, E, H = Geometry.INTERIOR, Geometry.EXTERIOR, Geometry.HALFSPACE
F1 = make_function("F1").probe()
F2 = make_function("F2").probe()


def mono(geom, p):
    return Basis.monopole(geom, interp=p)


# --- documented values -------------------------------------------------------


def test_gram_examples():
    a = mono(I, (0, 0, 0.5))
    b = mono(I, (0.5, 0, 0))
    assert gram_entry(a, a) == pytest.approx(1 / 3, rel=1e-15)
    assert gram_entry(a, b) == pytest.approx(0.5 / math.sqrt(4.25), rel=1e-15)
    assert gram_entry(b, a) == pytest.approx(0.2425356, abs=5e-8)
    assert gram_entry(Basis.constant(), Basis.constant()) == 1.0
    assert gram_entry(a, Basis.constant()) == pytest.approx(0.5, rel=1e-15)


def test_rhs_examples():
    a = mono(I, (0, 0, 0.5))
    assert rhs_entry(a, F1) == pytest.approx(-0.125, rel=1e-15)
    assert rhs_entry(Basis.constant(), F1) == 0.0
    ext = Basis.monopole(E, source=(0, 0, 0.5))
    assert ext.interp.tolist() == [0.0, 0.0, 2.0]
    assert rhs_entry(ext, make_function("inverse_r").probe()) == pytest.approx(1.0, rel=1e-15)


def test_norm_examples():
    assert basis_norm(mono(I, (0, 0, 0.5))) == pytest.approx(math.sqrt(1 / 3), rel=1e-15)
    assert basis_norm(Basis.constant()) == 1.0
    assert basis_norm(mono(I, (0, 0, 1e-8))) < 1e-7


def test_evaluate_examples():
    assert evaluate_basis(mono(I, (0, 0, 0.5)), (0, 0, 0)) == 0.5
    assert evaluate_basis(Basis.constant(), (0.3, -0.2, 0.1)) == 1.0
    dip = Basis.dipole(I, (0, 0, 1), source=(0, 0, 2))
    assert evaluate_basis(dip, (0, 0, 0)) == pytest.approx(-0.25, rel=1e-15)


def test_source_from_interp_and_halfspace_mirror():
    assert mono(I, (0, 0, 0.5)).source.tolist() == [0.0, 0.0, 2.0]
    hb = Basis.monopole(H, source=(0.1, 0.2, -0.7))
    assert hb.interp.tolist() == [0.1, 0.2, 0.7]
    assert hb.source.tolist() == [0.1, 0.2, -0.7]
    # halfspace: 1 / |M_a - X'_b|
    hb2 = Basis.monopole(H, source=(0.0, 0.0, -0.3))
    want = 1.0 / np.linalg.norm(hb.interp - hb2.source)
    assert gram_entry(hb, hb2) == pytest.approx(want, rel=1e-15)


# --- properties ----------------------------------------------------------------


def _sample_bases(geom, rng, n=4):
    out = []
    for _ in range(n):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        if geom is I:
            p = u * rng.uniform(0.1, 0.9)
        elif geom is E:
            p = u * rng.uniform(1.2, 4.0)
        else:
            p = np.array([u[0], u[1], abs(u[2]) + 0.2])
        out.append(mono(geom, p))
        out.append(Basis.dipole(geom, rng.normal(size=3), interp=p))
    if geom is I:
        out.append(Basis.constant())
    return out


@pytest.mark.parametrize("geom", [I, E, H])
def test_gram_symmetry_all_kinds(geom):
    bases = _sample_bases(geom, np.random.default_rng(7))
    g = gram_block(bases, bases)
    np.testing.assert_allclose(g, g.T, rtol=1e-12, atol=0)


def test_kelvin_identity_encoded_by_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(50):
        pa, pb = (rng.normal(size=3) for _ in range(2))
        pa *= rng.uniform(0.05, 0.95) / np.linalg.norm(pa)
        pb *= rng.uniform(0.05, 0.95) / np.linalg.norm(pb)
        lhs = np.linalg.norm(pa) / np.linalg.norm(pa - pb / (pb @ pb))
        rhs = np.linalg.norm(pb) / np.linalg.norm(pb - pa / (pa @ pa))
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert gram_entry(mono(I, pa), mono(I, pb)) == pytest.approx(lhs, rel=1e-13)


@pytest.mark.parametrize("geom", [I, E, H])
def test_normalized_self_entry_is_one(geom):
    for b in _sample_bases(geom, np.random.default_rng(11)):
        assert gram_entry(normalized(b), normalized(b)) == pytest.approx(1.0, abs=1e-12)


def _richardson(fun, h=1e-3):
    def central(step):
        return (fun(step) - fun(-step)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


@pytest.mark.parametrize("geom", [I, E, H])
def test_dipole_entries_match_finite_differences(geom):
    rng = np.random.default_rng(5)
    sample = [b for b in _sample_bases(geom, rng, n=3) if b.kind is kernel.Kind.MONOPOLE]
    other = sample[1]
    probe = F2 if geom is not E else make_function("point_source", q=1.0, source=(0.1, 0.2, -0.3)).probe()
    if geom is H:
        probe = make_function("point_source", q=1.0, source=(0.1, 0.0, -0.6), halfspace=True).probe()
    for base in (sample[0], sample[2]):
        s = base.source
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        dip = Basis.dipole(geom, d, source=s)

        def shifted(t):
            return Basis.monopole(geom, source=s + t * d)

        fd = _richardson(lambda t: gram_entry(shifted(t), other))
        assert gram_entry(dip, other) == pytest.approx(fd, rel=1e-6)
        fd = _richardson(lambda t: rhs_entry(shifted(t), probe))
        assert rhs_entry(dip, probe) == pytest.approx(fd, rel=1e-6)
        # dipole-dipole by nested differences
        s2, d2 = other.source, rng.normal(size=3)
        d2 /= np.linalg.norm(d2)
        dip2 = Basis.dipole(geom, d2, source=s2)
        fd = _richardson(
            lambda t: _richardson(
                lambda u: gram_entry(shifted(t), Basis.monopole(geom, source=s2 + u * d2)), 1e-2
            ),
            1e-2,
        )
        assert gram_entry(dip, dip2) == pytest.approx(fd, rel=1e-6)


def test_constant_dipole_entry_matches_finite_difference():
    p = np.array([0.2, -0.3, 0.4])
    d = np.array([0.0, 1.0, 0.0])
    s = mono(I, p).source
    dip = Basis.dipole(I, d, source=s)
    fd = _richardson(lambda t: gram_entry(Basis.monopole(I, source=s + t * d), Basis.constant()))
    assert gram_entry(dip, Basis.constant()) == pytest.approx(fd, rel=1e-6)


def test_limit_toward_constant_basis():
    # the monopole value is ~ 1/|X'| = P, so the basis divided by P tends to 1
    b = mono(I, (0, 0, 1e-6))
    for x in [(0, 0, 0), (0.3, 0.4, 0.5), (0, 0, -1)]:
        assert evaluate_basis(b, x) / 1e-6 == pytest.approx(1.0, abs=1e-5)


def test_replication_scale_hook(monkeypatch):
    a = mono(I, (0, 0, 0.5))
    monkeypatch.setattr(kernel, "_REPLICATION_SCALE", 2.0)
    assert rhs_entry(a, F1) == pytest.approx(-0.25)


def test_extended_entries_against_mpmath():
    mpmath.mp.dps = 40
    pa = np.array([0.1, 0.2, 0.3])
    pb = np.array([-0.4, 0.05, 0.6])
    g = gram_block([mono(I, pa)], [mono(I, pb)], EXTENDED)
    got = mpmath.mpf(float(g.hi[0, 0])) + mpmath.mpf(float(g.lo[0, 0]))
    A = [mpmath.mpf(float(v)) for v in pa]
    B = [mpmath.mpf(float(v)) for v in pb]
    nb2 = sum(v * v for v in B)
    src = [v / nb2 for v in B]
    want = mpmath.sqrt(sum(v * v for v in A)) / mpmath.sqrt(sum((a - s) ** 2 for a, s in zip(A, src)))
    assert abs((got - want) / want) < 1e-30


def test_vectorized_block_matches_scalar_entries():
    bases = point_bases([(0, 0, 0.5), (0.3, 0.1, 0.2)], I, dipoles=True, constant=True)
    assert [b.kind.value for b in bases[:2]] == ["monopole", "monopole"]
    assert bases[-1].kind is kernel.Kind.CONSTANT and len(bases) == 9
    g = gram_block(bases, bases)
    for i in range(len(bases)):
        for j in range(len(bases)):
            assert g[i, j] == gram_entry(bases[i], bases[j])
    rhs = rhs_vector(bases, F2)
    assert rhs[3] == rhs_entry(bases[3], F2)
    m = basis_matrix(bases, [(0.1, 0.1, 0.1)])
    assert m[0, 0] == evaluate_basis(bases[0], (0.1, 0.1, 0.1))


# --- errors --------------------------------------------------------------------


@pytest.mark.parametrize(
    "geom, p",
    [(I, (0, 0, 0)), (I, (0, 0, 1.0)), (I, (0, 2, 0)), (E, (0, 0, 1.0)), (E, (0.1, 0, 0)), (H, (0, 0, 0))],
)
def test_domain_errors(geom, p):
    with pytest.raises(DomainError):
        mono(geom, p)


def test_construction_errors():
    with pytest.raises(DomainError, match="constant"):
        Basis(kernel.Kind.CONSTANT, E)
    with pytest.raises(ValueError, match="exactly one"):
        Basis.monopole(I)
    with pytest.raises(ValueError, match="nonzero"):
        Basis.dipole(I, (0, 0, 0), interp=(0, 0, 0.5))
    with pytest.raises(DomainError):
        Basis.monopole(H, source=(0, 0, 1.0))
    with pytest.raises(ValueError, match="geometry"):
        gram_entry(mono(I, (0, 0, 0.5)), mono(E, (0, 0, 2.0)))
    with pytest.raises(ValueError, match="norm_factor"):
        Basis(kernel.Kind.MONOPOLE, I, np.array([0, 0, 0.5]), norm_factor=-1.0)


def test_field_points_outside_domain_rejected():
    with pytest.raises(DomainError, match="outside"):
        basis_matrix([mono(I, (0, 0, 0.5))], [(0, 0, 1.5)])
    with pytest.raises(DomainError):
        basis_matrix([mono(E, (0, 0, 2.0))], [(0, 0, 0.5)])


def test_dipole_rhs_needs_gradient():
    probe = FieldProbe(lambda x, y, z: x + 0 * y, name="nograd")
    dip = Basis.dipole(I, (1, 0, 0), interp=(0, 0, 0.5))
    with pytest.raises(MissingGradientError):
        rhs_entry(dip, probe)
    with pytest.raises(MissingGradientError):
        probe.grad((0, 0, 0))
