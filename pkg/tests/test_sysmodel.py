import json

import numpy as np
import pytest

from dtph import DescriptorSystem
from dtph.errors import DimensionError, InvalidMatrix, IrregularPencil
from dtph.sysmodel import (check_c1, check_c2, check_o1, check_o2, load_system, save_system,
                           validate)
from helpers import embed_index_one, random_standard, rmat


def _kalman_oracle(A, B):
    n = A.shape[0]
    K = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
    return np.linalg.matrix_rank(K) == n


def test_scalar_example_is_valid():
    s = DescriptorSystem(1, 0.5, 0, 1, 0)
    rep = validate(s)
    assert rep.valid and not rep.zero_E
    assert (s.n, s.m) == (1, 1)


def test_dimension_error_reported():
    s = DescriptorSystem(np.eye(2), np.eye(2), np.ones((3, 1)), np.ones((1, 2)), 0)
    rep = validate(s)
    assert not rep.valid
    assert any("B" in e for e in rep.dimension_errors)
    with pytest.raises(DimensionError):
        s.require_valid()


def test_nonfinite_and_zero_E():
    s = DescriptorSystem(0, 1, np.inf, 1, 0)
    rep = validate(s, check_assumption=True)
    assert rep.nonfinite == ["B"]
    assert rep.zero_E and rep.assumption_violations == ["E = 0"]
    assert validate(DescriptorSystem(0, 1, 1, 1, 0)).assumption_violations == []


def test_one_dimensional_conventions():
    s = DescriptorSystem(np.eye(2), np.eye(2), [1.0, 2.0], [3.0, 4.0], 0)
    assert s.B.shape == (2, 1) and s.C.shape == (1, 2)
    assert not s.B.flags.writeable
    with pytest.raises(ValueError):
        DescriptorSystem(1, 1, 1, 1, 1, time_domain="sampled")


def test_c1_fails_for_zero_input():
    r = check_c1(DescriptorSystem(1, 0.5, 0, 1, 0))
    assert not r.holds
    assert (0.5, 0) in [(w.real, rk) for w, rk in r.witnesses]
    assert r.to_dict()["property"] == "C1"


def test_o1_fails_for_zero_output():
    assert not check_o1(DescriptorSystem(1, 0.5, 0.5, 0, 1)).holds
    assert check_c1(DescriptorSystem(1, 0.5, 0.5, 0, 1)).holds


def test_c1_full_rank_input():
    r = check_c1(DescriptorSystem(np.eye(3), np.zeros((3, 3)), np.eye(3), np.eye(3), np.eye(3)))
    assert r.holds
    # spectrum {0} plus one resolvent point
    assert len(r.witnesses) == 2


def test_rank_tests_reject_singular_pencil():
    s = DescriptorSystem(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]), np.zeros((2, 1)), np.zeros((1, 2)), 0)
    with pytest.raises(IrregularPencil):
        check_c1(s)
    r = check_c2(s)
    assert not r.holds and r.notes


def test_c2_examples():
    E = np.diag([1.0, 0.0])
    B = np.zeros((2, 1))
    C = np.zeros((1, 2))
    assert check_c2(DescriptorSystem(E, np.eye(2), B, C, 0)).holds
    assert check_o2(DescriptorSystem(E, np.eye(2), B, C, 0)).holds
    assert check_c2(DescriptorSystem(np.eye(2), np.eye(2), B, C, 0)).holds
    assert not check_c2(DescriptorSystem(E, np.diag([1.0, 0.0]), B, C, 0)).holds


@pytest.mark.parametrize("cplx", [False, True])
def test_c1_matches_kalman_for_standard_systems(rng, cplx):
    for trial in range(20):
        s = random_standard(rng, 4, 1, cplx)
        if trial % 2:
            # make it uncontrollable: block-triangular with zero input on the second block
            A = s.A.copy()
            A[2:, :2] = 0
            B = s.B.copy()
            B[2:] = 0
            s = s.replace(A=A, B=B)
        assert check_c1(s).holds == _kalman_oracle(s.A, s.B)
        assert check_o1(s).holds == _kalman_oracle(s.A.conj().T, s.C.conj().T)


def test_c1_o1_invariant_under_equivalence(rng):
    for _ in range(10):
        base = random_standard(rng, 3, 1)
        if rng.random() < 0.5:
            base = base.replace(B=np.zeros((3, 1)))
        s = embed_index_one(rng, base)
        while True:
            S, T = rmat(rng, (5, 5)), rmat(rng, (5, 5))
            if np.linalg.cond(S) < 1e3 and np.linalg.cond(T) < 1e3:
                break
        t = DescriptorSystem(S @ s.E @ T, S @ s.A @ T, S @ s.B, s.C @ T, s.D)
        assert check_c1(s).holds == check_c1(t).holds
        assert check_o1(s).holds == check_o1(t).holds


def test_json_round_trip(tmp_path, rng):
    s = random_standard(rng, 3, 2, cplx=True)
    p = tmp_path / "s.json"
    save_system(s, p, note="x")
    t = load_system(p)
    assert t.content_hash() == s.content_hash()
    assert t.meta["note"] == "x"
    raw = json.loads(p.read_text())
    assert isinstance(raw["A"][0][0], list)


def test_json_defaults_and_unknown_keys(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"A": [[0.5]], "B": [[1]], "C": [[1]], "D": [[0]], "colour": "red"}))
    with pytest.warns(UserWarning, match="colour"):
        s = load_system(p)
    assert s.is_standard and s.time_domain == "discrete"


def test_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"A": [[1]],\n "B": [[1]] "C": 1}')
    with pytest.raises(InvalidMatrix, match="line 2"):
        load_system(p)
    p.write_text(json.dumps({"A": [[1, 2], [3]], "B": [[1]], "C": [[1]], "D": [[0]]}))
    with pytest.raises(InvalidMatrix, match="rows"):
        load_system(p)
    p.write_text(json.dumps({"A": [[1]], "B": [[1]], "C": [[1]]}))
    with pytest.raises(InvalidMatrix, match="missing"):
        load_system(p)
    p.write_text(json.dumps({"A": [["x"]], "B": [[1]], "C": [[1]], "D": [[0]]}))
    with pytest.raises(InvalidMatrix):
        load_system(p)


def test_hash_distinguishes_time_domain():
    a = DescriptorSystem(1, 0.5, 1, 1, 0)
    b = a.replace(time_domain="continuous")
    assert a.content_hash() != b.content_hash()
    assert a.content_hash() == DescriptorSystem(1.0, 0.5, 1, 1, 0).content_hash()
