import numpy as np
import pytest

from dtph.drazin import (check_consistency, core_nilpotent_split, drazin_axiom_residual, drazin_inverse,
                         drazin_pair, solve_dae, solve_from_initial_state)
from dtph.errors import InconsistentInitialState, InsufficientInput
from dtph.pencil import reduce_system
from dtph.sim import simulate
from helpers import embed_index_one, random_standard, rmat

E2 = np.array([[0.0, 1.0], [0.0, 0.0]])


def test_drazin_examples():
    assert np.allclose(drazin_inverse(np.eye(3)), np.eye(3))
    assert np.allclose(drazin_inverse(E2), 0)
    assert np.allclose(drazin_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


@pytest.mark.parametrize("cplx", [False, True])
def test_drazin_axioms_random(rng, cplx):
    for nil in ([1], [2], [3, 1]):
        r = 3
        q = sum(nil)
        N = np.zeros((q, q))
        o = 0
        for k in nil:
            N[o:o + k, o:o + k] = np.eye(k, k=1)
            o += k
        J = rmat(rng, (r, r), cplx) + 3 * np.eye(r)
        T = rmat(rng, (r + q, r + q), cplx) + 2 * np.eye(r + q)
        M = T @ np.block([[J, np.zeros((r, q))], [np.zeros((q, r)), N]]) @ np.linalg.inv(T)
        MD, nu = drazin_inverse(M, return_index=True)
        assert nu == max(nil)
        assert drazin_axiom_residual(M, MD, nu) < 1e-9 * (1 + np.linalg.norm(M)) * (1 + np.linalg.norm(MD)) ** 2
        sp = core_nilpotent_split(M)
        assert sp.rank_core == r


def test_pair_commutes(rng):
    s = embed_index_one(rng, random_standard(rng, 3, 1))
    dp = drazin_pair(s.E, s.A)
    assert np.linalg.norm(dp.E_hat @ dp.A_hat - dp.A_hat @ dp.E_hat) < 1e-10 * (1 + np.linalg.norm(dp.A_hat))
    assert dp.nu == 1


def test_standard_recursion(rng):
    A = rmat(rng, (3, 3)) * 0.3
    f = rng.standard_normal((6, 3))
    x0 = rng.standard_normal(3)
    ok, v = check_consistency(np.eye(3), A, x0, f)
    assert ok and np.allclose(v, x0)
    x = solve_dae(np.eye(3), A, f, v, 5)
    ref = [x0]
    for k in range(5):
        ref.append(A @ ref[-1] + f[k])
    assert np.allclose(x, ref)


def test_index_two_is_anticipative(rng):
    f = rng.standard_normal((8, 2))
    x = solve_dae(E2, np.eye(2), f, np.zeros(2), 4)
    g = f.copy()
    g[2] += 1.0
    y = solve_dae(E2, np.eye(2), g, np.zeros(2), 4)
    # x_1 depends on f_2
    assert not np.allclose(x[1], y[1])
    # the explicit solution satisfies the equations
    for k in range(4):
        assert np.allclose(E2 @ x[k + 1], x[k] + f[k])
    with pytest.raises(InsufficientInput):
        solve_dae(E2, np.eye(2), f[:4], np.zeros(2), 4)


def test_index_one_is_causal(rng):
    s = embed_index_one(rng, random_standard(rng, 3, 1))
    f = rng.standard_normal((10, 5))
    x = solve_dae(s.E, s.A, f, np.zeros(5), 6)
    g = f.copy()
    g[4] += 1.0
    y = solve_dae(s.E, s.A, g, np.zeros(5), 6)
    # f_4 enters x_4 through the algebraic part but never an earlier state
    assert np.allclose(x[:4], y[:4])
    assert not np.allclose(x[4], y[4])


def test_matches_forward_simulation(rng):
    s = embed_index_one(rng, random_standard(rng, 3, 2))
    red = reduce_system(s)
    u = rng.standard_normal((12, 2))
    x0 = red.full_state(rng.standard_normal(3), u[0])
    tr = simulate(s, u, x0)
    f = (s.B @ u.T).T
    x = solve_from_initial_state(s.E, s.A, f, x0, 11)
    assert np.allclose(x, tr.x, atol=1e-9)


def test_consistency_detection(rng):
    s = embed_index_one(rng, random_standard(rng, 3, 1))
    red = reduce_system(s)
    u = rng.standard_normal((3, 1))
    f = (s.B @ u.T).T
    x0 = red.full_state(rng.standard_normal(3), u[0])
    assert check_consistency(s.E, s.A, x0, f)[0]
    bad = x0 + red.sef.V[:, -1]
    assert not check_consistency(s.E, s.A, bad, f)[0]
    with pytest.raises(InconsistentInitialState):
        solve_from_initial_state(s.E, s.A, f, bad, 2)
