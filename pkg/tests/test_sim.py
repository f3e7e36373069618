import csv

import numpy as np
import pytest

from dtph import DescriptorSystem
from dtph.errors import DimensionError, InconsistentInitialState, IndexTooHigh
from dtph.pencil import reduce_system
from dtph.sim import SupplyRate, audit_dissipation, simulate, supply, write_csv
from helpers import contraction_system, embed_index_one, random_standard


def test_integrator_constant_input():
    s = DescriptorSystem(np.eye(2), np.zeros((2, 2)), np.eye(2), np.eye(2), np.zeros((2, 2)))
    tr = simulate(s, np.tile([1.0, 2.0], (5, 1)), np.zeros(2))
    assert np.allclose(tr.x[1:], [1.0, 2.0])


def test_scalar_decay():
    tr = simulate(DescriptorSystem(1, 0.5, 0.5, 0, 1), np.zeros(6), [1.0])
    assert np.allclose(tr.x[:, 0], 2.0 ** -np.arange(6))
    assert np.allclose(tr.y, 0)


@pytest.mark.parametrize("cplx", [False, True])
def test_descriptor_residuals(rng, cplx):
    s = embed_index_one(rng, random_standard(rng, 3, 2, cplx))
    red = reduce_system(s)
    u = rng.standard_normal((15, 2))
    x0 = red.full_state(rng.standard_normal(3), u[0])
    tr = simulate(s, u, x0)
    assert tr.residuals(s).max() < 1e-9


def test_inconsistent_and_projection(rng):
    s = embed_index_one(rng, random_standard(rng, 3, 1))
    red = reduce_system(s)
    u = rng.standard_normal((4, 1))
    x0 = red.full_state(rng.standard_normal(3), u[0]) + red.sef.V[:, -1]
    with pytest.raises(InconsistentInitialState):
        simulate(s, u, x0)
    tr = simulate(s, u, x0, project=True)
    assert tr.residuals(s).max() < 1e-9
    assert np.allclose(red.reduced_state(tr.x[0]), red.reduced_state(x0))


def test_rejects_index_two_and_bad_inputs():
    s = DescriptorSystem([[0.0, 1.0], [0.0, 0.0]], np.eye(2), [[1.0], [0.0]], [[0.0, 1.0]], 0)
    with pytest.raises(IndexTooHigh):
        simulate(s, np.zeros(3), np.zeros(2))
    with pytest.raises(DimensionError):
        simulate(DescriptorSystem(1, 0.5, 1, 1, 0), np.zeros((3, 2)), [0.0])


def test_supply_values():
    assert supply(SupplyRate.impedance(1), [1.0], [1.0]) == 2.0
    assert supply(SupplyRate.scattering(1), [1.0], [1.0]) == 0.0
    assert supply(SupplyRate.scattering(2), [0.6, 0.8], [1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    g = SupplyRate.general(-np.eye(1), np.zeros((1, 1)), np.eye(1))
    assert supply(g, [2.0], [1.0]) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        SupplyRate.general([[0.0, 1.0], [0.0, 0.0]], np.zeros((2, 2)), np.eye(2))


def test_zero_storage_algebraic_system(rng):
    s = DescriptorSystem(0, 1, -1, 1, -1)
    u = rng.standard_normal(8)
    tr = simulate(s, u, [u[0]])
    assert np.allclose(tr.y, 0)
    assert audit_dissipation(tr, SupplyRate.impedance(1), [[0.0]], s.E).dissipative


@pytest.mark.parametrize("cplx", [False, True])
def test_contraction_is_dissipative(rng, cplx):
    s, X = contraction_system(rng, 3, 2, cplx)
    u = rng.standard_normal((30, 2))
    tr = simulate(s, u, rng.standard_normal(3))
    a = audit_dissipation(tr, SupplyRate.scattering(2), X, s.E)
    assert a.dissipative and a.verdict == "dissipative-on-trajectory"


def test_growth_violates():
    s = DescriptorSystem(np.eye(1), 2.0, 0, 0, 0)
    tr = simulate(s, np.zeros(3), [1.0])
    a = audit_dissipation(tr, SupplyRate.impedance(1), np.eye(1), s.E)
    assert not a.dissipative and a.violations[0] == 0
    assert a.verdict == "violated(0)"


def test_csv_output(tmp_path):
    s = DescriptorSystem(1, 0.5, 0.5, 1, 0)
    tr = simulate(s, np.ones(3), [1.0])
    a = audit_dissipation(tr, SupplyRate.impedance(1), np.eye(1), s.E)
    p = tmp_path / "t.csv"
    write_csv(p, tr, a)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["k", "x0", "u0", "y0", "V", "s"]
    assert len(rows) == 4
