"""Trajectory simulation of index-one descriptor systems and dissipation audits."""
import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionError, IndexTooHigh, InconsistentInitialState
from .matcore import herm
from .pencil import analyze_pencil, reduce_system


@dataclass(frozen=True)
class Trajectory:
    """States, inputs and outputs for ``k = 0 .. K-1`` (one row per step)."""

    x: np.ndarray
    u: np.ndarray
    y: np.ndarray

    @property
    def K(self):
        return self.u.shape[0]

    def residuals(self, sys):
        """Per-step relative residuals of the state and output equations."""
        E, A, B, C, D = sys.matrices()
        out = []
        for k in range(self.K):
            scale = 1.0 + np.linalg.norm(self.x[k]) + np.linalg.norm(self.u[k])
            ry = np.linalg.norm(self.y[k] - C @ self.x[k] - D @ self.u[k])
            rx = 0.0
            if k + 1 < self.K:
                rx = np.linalg.norm(E @ self.x[k + 1] - A @ self.x[k] - B @ self.u[k])
            out.append(max(rx, ry) / scale)
        return np.array(out)


def _inputs(u, m):
    u = np.asarray(u)
    if u.ndim == 1:
        u = u.reshape(-1, 1) if m == 1 else u.reshape(1, -1)
    if u.ndim != 2 or u.shape[1] != m:
        raise DimensionError(f"inputs must have {m} columns, got shape {u.shape}")
    return u


def simulate(sys, u, x0, project=False, tol=1e-9, reduced=None):
    """Simulate ``E x_{k+1} = A x_k + B u_k``, ``y_k = C x_k + D u_k``.

    The recursion runs on the reduced standard system; the algebraic part of
    the state is rebuilt from the constraint at every step. An initial state
    violating the constraint raises :class:`InconsistentInitialState` unless
    ``project`` is set, in which case its algebraic part is recomputed while
    the dynamic part is kept.

    Examples
    --------
    >>> from dtph import DescriptorSystem
    >>> t = simulate(DescriptorSystem(1, 0.5, 0.5, 0, 1), np.zeros(4), [1.0])
    >>> t.x[:, 0]
    array([1.   , 0.5  , 0.25 , 0.125])
    """
    sys.require_valid()
    pa = analyze_pencil(sys.E, sys.A, require_regular=True)
    if pa.index > 1:
        raise IndexTooHigh(f"simulation needs index <= 1, pencil has index {pa.index}")
    red = reduced or reduce_system(sys)
    u = _inputs(u, sys.m)
    K = u.shape[0]
    x0 = np.asarray(x0).reshape(sys.n)
    if K == 0:
        return Trajectory(np.zeros((0, sys.n)), u, np.zeros((0, sys.m)))
    res = red.constraint_residual(x0, u[0])
    if res > tol * (1 + np.linalg.norm(x0) + np.linalg.norm(u[0])):
        if not project:
            raise InconsistentInitialState(f"x0 violates the algebraic constraint (residual {res:.3g})")
    xhat0 = red.reduced_state(x0)
    dtype = np.result_type(red.A.dtype, red.B.dtype, u.dtype, xhat0.dtype, np.float64)
    forcing = (red.B @ u[: K - 1].T).T.astype(dtype)
    xh = _kernels.affine_recursion(
        np.ascontiguousarray(red.A, dtype=dtype), np.ascontiguousarray(xhat0, dtype=dtype),
        np.ascontiguousarray(forcing.reshape(K - 1, red.r)))
    x = np.array([red.full_state(xh[k], u[k]) for k in range(K)])
    if not project:
        x[0] = x0
    y = (sys.C @ x.T + sys.D @ u.T).T
    if not np.iscomplexobj(sys.C) and not np.iscomplexobj(x):
        y = y.real
    return Trajectory(x, u, y)


@dataclass(frozen=True)
class SupplyRate:
    """Quadratic supply ``y^H Q y + 2 Re(y^H S u) + u^H R u``."""

    kind: str
    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray

    @classmethod
    def impedance(cls, m):
        z = np.zeros((m, m))
        return cls("impedance", z, np.eye(m), z)

    @classmethod
    def scattering(cls, m):
        return cls("scattering", -np.eye(m), np.zeros((m, m)), np.eye(m))

    @classmethod
    def general(cls, Q, S, R):
        Q, S, R = (np.atleast_2d(np.asarray(a)) for a in (Q, S, R))
        for name, W in (("Q", Q), ("R", R)):
            if not np.allclose(W, herm(W), atol=1e-12):
                raise ValueError(f"{name} must be Hermitian")
        return cls("general", Q, S, R)

    @classmethod
    def of(cls, kind, m):
        if kind == "impedance":
            return cls.impedance(m)
        if kind == "scattering":
            return cls.scattering(m)
        raise ValueError(f"unknown supply kind {kind!r}")


def supply(sr, u, y):
    """Value of the supply rate at one sample (always real)."""
    u = np.atleast_1d(np.asarray(u))
    y = np.atleast_1d(np.asarray(y))
    m = sr.Q.shape[0]
    if u.shape != (m,) or y.shape != (m,):
        raise DimensionError(f"u and y must have length {m}")
    if sr.kind == "impedance":
        return float(2.0 * np.real(np.vdot(y, u)))
    if sr.kind == "scattering":
        return float(np.real(np.vdot(u, u) - np.vdot(y, y)))
    val = np.vdot(y, sr.Q @ y) + 2.0 * np.real(np.vdot(y, sr.S @ u)) + np.vdot(u, sr.R @ u)
    return float(np.real(val))


@dataclass(frozen=True)
class DissipationAudit:
    V: np.ndarray
    dV: np.ndarray
    s: np.ndarray
    slack: np.ndarray
    violations: list
    max_violation: float
    dissipative: bool
    conservative: bool
    strict: bool

    @property
    def verdict(self):
        return "dissipative-on-trajectory" if self.dissipative else f"violated({self.violations[0]})"


def audit_dissipation(traj, sr, X, E, rel_slack=1e-8):
    """Check ``V(E x_{k+1}) - V(E x_k) <= s(u_k, y_k)`` with ``V(z) = z^H X z``.

    The slack at step ``k`` is ``rel_slack (1 + |X|) (1 + |x_k| + |x_{k+1}| + |u_k|)^2``.
    """
    X = np.atleast_2d(np.asarray(X))
    E = np.atleast_2d(np.asarray(E))
    K = traj.K
    nx = np.linalg.norm(X, 2) if X.size else 0.0
    V = np.array([float(np.real(np.vdot(E @ traj.x[k], X @ (E @ traj.x[k])))) for k in range(K)])
    steps = max(K - 1, 0)
    dV = V[1:] - V[:-1] if K else np.zeros(0)
    s = np.array([supply(sr, traj.u[k], traj.y[k]) for k in range(K)])
    slack = np.array([
        rel_slack * (1 + nx) * (1 + np.linalg.norm(traj.x[k]) + np.linalg.norm(traj.x[k + 1])
                                + np.linalg.norm(traj.u[k])) ** 2
        for k in range(steps)
    ])
    excess = dV - s[:steps]
    viol = [int(k) for k in np.nonzero(excess > slack)[0]]
    return DissipationAudit(
        V, dV, s, slack, viol, float(np.max(excess, initial=-np.inf)),
        not viol, bool(np.all(np.abs(excess) <= slack)), bool(np.all(excess < -slack)),
    )


def write_csv(path, traj, audit=None):
    """Write ``k, x.., u.., y.., V, s`` rows; complex entries use Python's ``a+bj`` notation."""
    n = traj.x.shape[1]
    m = traj.u.shape[1]
    header = ["k"] + [f"x{i}" for i in range(n)] + [f"u{i}" for i in range(m)] + [f"y{i}" for i in range(m)]
    header += ["V", "s"]

    def fmt(v):
        v = complex(v)
        return repr(v.real) if v.imag == 0 else repr(v)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(traj.K):
            row = [k] + [fmt(v) for v in traj.x[k]] + [fmt(v) for v in traj.u[k]] + [fmt(v) for v in traj.y[k]]
            if audit is not None:
                row += [repr(float(audit.V[k])), repr(float(audit.s[k]))]
            else:
                row += ["", ""]
            w.writerow(row)
