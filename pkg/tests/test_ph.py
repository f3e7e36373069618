import numpy as np
import pytest

from dtph import DescriptorSystem
from dtph.errors import InvalidWeight
from dtph.kyp import build_lmi, check_passivity
from dtph.ph import classify_stability, is_ph, to_ph, transformed_blocks, weighted_norm
from helpers import contraction_system, embed_index_one, rmat, with_radius

FORCED_ZERO = DescriptorSystem(1, 0.5, 0.5, 0, 1)


def _tf(sys, z):
    return sys.C @ np.linalg.solve(z * sys.E - sys.A, sys.B) + sys.D


def test_weighted_norm_trivial():
    assert weighted_norm(np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)), np.zeros((1, 1)), np.eye(2)) == pytest.approx(1.0)


def test_weighted_norm_example_exceeds_one(rng):
    for x in (1e-3, 1.0, 7.0):
        assert weighted_norm(0.5, 0.5, 0, 1, [[x]]) > 1


@pytest.mark.parametrize("cplx", [False, True])
def test_weighted_norm_pull_back(rng, cplx):
    for _ in range(5):
        s, X = contraction_system(rng, 3, 2, cplx, norm=0.7)
        assert weighted_norm(s.A, s.B, s.C, s.D, X) == pytest.approx(0.7, rel=1e-9)
        At, Bt, Ct, Dt = transformed_blocks(s.A, s.B, s.C, s.D, X)
        assert np.linalg.norm(np.block([[At, Bt], [Ct, Dt]]), 2) == pytest.approx(0.7, rel=1e-9)


def test_weight_validation():
    with pytest.raises(InvalidWeight):
        weighted_norm(1, 1, 1, 1, [[-1.0]])
    with pytest.raises(InvalidWeight):
        weighted_norm(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), 0, [[1.0, 1.0], [0.0, 1.0]])


def test_is_ph_examples():
    v = is_ph(FORCED_ZERO)
    assert not v.is_ph
    v = is_ph(DescriptorSystem(1, 0.5, 0, 0, 0))
    assert v.is_ph
    assert v.representation.norm_value <= 1 + 1e-8


@pytest.mark.parametrize("cplx", [False, True])
def test_observable_passive_is_ph(rng, cplx):
    for _ in range(4):
        s, _ = contraction_system(rng, 3, 1, cplx, norm=0.9)
        v = is_ph(s)
        assert v.is_ph
        rep = v.representation
        assert rep.norm_value <= 1 + 1e-8
        assert np.linalg.eigvalsh(rep.X - s.A.conj().T @ rep.X @ s.A)[0] >= -1e-8


def test_to_ph_identity_and_transfer(rng):
    s, _ = contraction_system(rng, 2, 1, norm=0.8, X=np.eye(2))
    rep = to_ph(s, np.eye(2))
    for a, b in zip((rep.A, rep.B, rep.C, rep.D), (s.A, s.B, s.C, s.D)):
        assert np.allclose(a, b)
    s, _ = contraction_system(rng, 2, 1, norm=0.8, X=np.diag([4.0, 1.0]))
    rep = to_ph(s, np.diag([4.0, 1.0]))
    assert rep.norm_value <= 1 + 1e-9
    assert np.allclose(_tf(s, 3.0), _tf(rep.as_system(), 3.0), atol=1e-9)
    assert rep.hamiltonian([1.0, 0.0]) == pytest.approx(2.0)
    with pytest.raises(InvalidWeight):
        to_ph(DescriptorSystem(1, 2.0, 1, 1, 0), [[1.0]])


def test_descriptor_ph_uses_reduced_state(rng):
    base, _ = contraction_system(rng, 2, 1, norm=0.8)
    s = embed_index_one(rng, base)
    v = is_ph(s)
    assert v.is_ph and v.notes
    assert v.representation.X.shape == (2, 2)
    assert np.allclose(_tf(s, 2.5), _tf(v.representation.as_system(), 2.5), atol=1e-9)


def test_stability_examples():
    r = classify_stability(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert not r.stable and r.defective_unit_eigenvalues and r.agrees
    r = classify_stability(np.diag([0.5, 0.25]))
    assert r.asymptotically_stable and r.stable
    r = classify_stability(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert r.stable and not r.asymptotically_stable and r.lmi_stable
    assert r.to_dict()["spectral_radius"] == pytest.approx(1.0)


def test_stability_matches_lmi_on_random(rng):
    for k in range(20):
        rad = [0.5, 0.99, 1.01, 1.5][k % 4]
        A = with_radius(rng, rmat(rng, (3, 3)), rad)
        r = classify_stability(A)
        assert r.stable == (rad < 1)
        assert r.agrees


def test_ph_implies_stable_and_lyapunov(rng):
    for _ in range(5):
        s, X = contraction_system(rng, 3, 2, norm=1.0)
        assert classify_stability(s.A).stable
        assert np.linalg.eigvalsh(X - s.A.T @ X @ s.A)[0] >= -1e-10
        assert check_passivity(s, "scattering").passive
        assert np.linalg.eigvalsh(build_lmi(s, "d-sKYP").W(X))[0] >= -1e-10
