import numpy as np
import pytest

from dtph import DescriptorSystem
from dtph.errors import DimensionError, PoleProximity
from dtph.transfer import (TransferFunction, check_realness, grid_points, is_proper, properness,
                           verify_kyp_resolvent_identity, verify_moebius_relation)
from helpers import contraction_system, embed_index_one, random_standard, rherm, rmat

E2 = [[0.0, 1.0], [0.0, 0.0]]


def _continuous(rng, n=3, m=2, cplx=False):
    return DescriptorSystem.standard(rmat(rng, (n, n), cplx) - 2.5 * np.eye(n), rmat(rng, (n, m), cplx),
                                     rmat(rng, (m, n), cplx), rmat(rng, (m, m), cplx), "continuous")


def test_constant_examples():
    for z in (2.0, -3 + 1j, 10j):
        assert np.allclose(TransferFunction(DescriptorSystem(1, 0.5, 0, 1, 0))(z), 0)
        assert np.allclose(TransferFunction(DescriptorSystem(1, 0.5, 0, 1, 1))(z), 1)
        assert np.allclose(TransferFunction(DescriptorSystem(np.eye(2), 0 * np.eye(2), np.zeros((2, 2)),
                                                             np.zeros((2, 2)), [[1, 2], [3, 4]]))(z), [[1, 2], [3, 4]])


@pytest.mark.parametrize("cplx", [False, True])
def test_matches_direct_formula_and_caches(rng, cplx):
    s = embed_index_one(rng, random_standard(rng, 3, 2, cplx))
    tf = TransferFunction(s)
    z = 1.7 - 0.4j
    ref = s.C @ np.linalg.solve(z * s.E - s.A, s.B) + s.D
    assert np.allclose(tf(z), ref)
    assert tf.residual(z) < 1e-9
    assert complex(z) in tf.cache
    assert not tf(z).flags.writeable


def test_pole_proximity():
    tf = TransferFunction(DescriptorSystem(1, 0.5, 1, 1, 0))
    with pytest.raises(PoleProximity):
        tf(0.5)


def test_properness_examples(rng):
    assert is_proper(embed_index_one(rng, random_standard(rng, 2, 1)))
    improper = DescriptorSystem(E2, np.eye(2), [[0.0], [1.0]], [[1.0, 0.0]], 0)
    assert not is_proper(improper)
    r = properness(improper)
    assert r.index == 2 and r.markov_norms[0] > 0
    assert is_proper(DescriptorSystem(E2, np.eye(2), [[1.0], [0.0]], [[1.0, 0.0]], 0))


def test_realness_examples():
    assert check_realness(DescriptorSystem(1, 0.5, 0, 1, 0), "positive").holds_on_grid
    assert check_realness(DescriptorSystem(1, 0.5, 0, 1, 1), "bounded").holds_on_grid
    r = check_realness(DescriptorSystem(1, 0.5, 0, 1, 2), "bounded")
    assert not r.holds_on_grid and r.margin == pytest.approx(-3.0)
    assert r.to_dict()["kind"] == "bounded"
    with pytest.raises(DimensionError):
        check_realness(DescriptorSystem(1, 0.5, 0, 1, 0), "positive", points=[0.5])
    with pytest.raises(ValueError):
        check_realness(DescriptorSystem(1, 0.5, 0, 1, 0), "real")


def test_exterior_pole_fails():
    r = check_realness(DescriptorSystem(1, 2.0, 0.1, 0.1, 0), "bounded")
    assert not r.holds_on_grid
    assert r.exterior_eigenvalues and r.exterior_eigenvalues[0].is_pole
    # cancelled exterior eigenvalue: B = 0
    r = check_realness(DescriptorSystem(1, 2.0, 0, 1, 0.5), "bounded")
    assert r.holds_on_grid and not r.exterior_eigenvalues[0].is_pole


def test_improper_never_bounded_real():
    s = DescriptorSystem(E2, np.eye(2), [[0.0], [1.0]], [[1.0, 0.0]], 0)
    r = check_realness(s, "bounded")
    assert not r.holds_on_grid and not r.proper


def test_contraction_bounded_real_parallel(rng):
    s, _ = contraction_system(rng, 3, 2, norm=0.9)
    a = check_realness(s, "bounded", jobs=1)
    b = check_realness(s, "bounded", jobs=4)
    assert a.holds_on_grid and b.holds_on_grid
    assert a.margin == pytest.approx(b.margin)


def test_grid_points():
    pts = grid_points((1.5, 3.0), 8)
    assert len(pts) == 16
    assert np.allclose(sorted(set(np.round(np.abs(pts), 12))), [1.5, 3.0])


@pytest.mark.parametrize("cplx", [False, True])
def test_kyp_resolvent_identity(rng, cplx):
    for _ in range(5):
        s = embed_index_one(rng, random_standard(rng, 3, 2, cplx))
        X = rherm(rng, 5, cplx)
        for z in (2.0, 1.3 - 0.7j, np.exp(0.4j)):
            assert verify_kyp_resolvent_identity(s, X, z) < 1e-9
        assert verify_kyp_resolvent_identity(s, np.zeros((5, 5)), 2.0) == 0.0


def test_moebius_relation(rng):
    c = _continuous(rng)
    assert verify_moebius_relation(c, 1.0, 3.0) < 1e-8
    assert verify_moebius_relation(c, 1 + 1j, -0.5 + 2j) < 1e-8
    # z -> infinity maps to alpha
    assert verify_moebius_relation(c, 2.0, 1e6) < 1e-5
    b0 = c.replace(B=np.zeros((3, 2)))
    assert verify_moebius_relation(b0, 1.0, 3.0) < 1e-12
    with pytest.raises(DimensionError):
        verify_moebius_relation(c, 1.0, -1.0)
