"""Drazin inverses and the explicit solution formula for discrete-time DAEs of any index.

The pencil ``(E, A)`` is first made commuting by multiplying with
``(lam E - A)^{-1}``; afterwards ``E_hat`` and ``A_hat`` commute and
``lam E_hat - A_hat = I``, which is all the solution formula needs.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InconsistentInitialState, InsufficientInput, NumericalFailure
from .matcore import asmatrix, herm, null_space, range_basis, solve

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CoreNilpotentSplit:
    """``T^{-1} M T = diag(core, nil)`` with ``core`` invertible and ``nil`` nilpotent."""

    T: np.ndarray
    core: np.ndarray
    nil: np.ndarray
    index: int
    gap: float

    @property
    def rank_core(self):
        return self.core.shape[0]


def core_nilpotent_split(M, tol=1e-10):
    """Split ``M`` into its invertible and nilpotent parts.

    The ranges of ``M^k`` and the kernels of ``M^k`` are built by repeated
    range and preimage extraction until their dimensions stop changing; the
    number of steps is the Drazin index. Raises :class:`NumericalFailure` when
    a rank decision is ambiguous, i.e. the smallest kept singular value is not
    at least 1e3 times the largest discarded one (or machine noise).
    """
    M = asmatrix(M, "M", square=True)
    n = M.shape[0]
    if n == 0:
        return CoreNilpotentSplit(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0)), 0, np.inf)
    scale = max(np.linalg.norm(M, 2), 1e-300)
    gap = np.inf
    R = np.eye(n, dtype=M.dtype)
    nu = 0
    while True:
        MR = M @ R
        if MR.shape[1] == 0:
            break
        s = np.linalg.svd(MR, compute_uv=False)
        keep = s > tol * scale
        if keep.any() and (~keep).any():
            g = s[keep].min() / max(s[~keep].max(), _EPS * scale)
            gap = min(gap, g)
            if g < 1e3:
                raise NumericalFailure(f"ambiguous core/nilpotent split (gap {g:.3g})")
        Rn = range_basis(MR, tol, scale)
        if Rn.shape[1] == R.shape[1]:
            break
        R = Rn
        nu += 1
    # kernel of M^nu via preimages
    K = np.zeros((n, 0), dtype=M.dtype)
    for _ in range(nu):
        P = np.eye(n) - K @ herm(K)
        K = null_space(P @ M, tol, scale)
    if R.shape[1] + K.shape[1] != n:
        raise NumericalFailure(
            f"core ({R.shape[1]}) and nilpotent ({K.shape[1]}) dimensions do not add up to {n}")
    T = np.hstack([R, K])
    Ti = np.linalg.inv(T)
    blk = Ti @ M @ T
    r = R.shape[1]
    return CoreNilpotentSplit(T, blk[:r, :r], blk[r:, r:], nu, gap)


def drazin_inverse(M, tol=1e-10, return_index=False):
    """Drazin inverse ``M^D`` of a square matrix.

    Examples
    --------
    >>> drazin_inverse(np.diag([2.0, 0.0]))
    array([[0.5, 0. ],
           [0. , 0. ]])
    """
    M = asmatrix(M, "M", square=True)
    sp = core_nilpotent_split(M, tol)
    n = M.shape[0]
    r = sp.rank_core
    mid = np.zeros((n, n), dtype=np.result_type(M.dtype, sp.T.dtype))
    if r:
        mid[:r, :r] = np.linalg.inv(sp.core)
    MD = sp.T @ mid @ np.linalg.inv(sp.T)
    if not np.iscomplexobj(M):
        MD = MD.real
    MD[np.abs(MD) < _EPS * (1 + np.abs(MD).max(initial=0.0))] = 0.0
    err = drazin_axiom_residual(M, MD, sp.index)
    if err > 1e-7 * (1 + np.linalg.norm(M)) * (1 + np.linalg.norm(MD)) ** 2:
        raise NumericalFailure(f"Drazin axioms violated (residual {err:.3g})")
    return (MD, sp.index) if return_index else MD


def drazin_axiom_residual(M, MD, nu):
    """Largest residual of the three defining identities."""
    Mp = np.linalg.matrix_power(M, nu)
    r1 = np.linalg.norm(M @ MD - MD @ M)
    r2 = np.linalg.norm(MD @ M @ MD - MD)
    r3 = np.linalg.norm(MD @ Mp @ M - Mp)
    return max(r1, r2, r3)


@dataclass(frozen=True)
class DrazinPair:
    E_hat: np.ndarray
    A_hat: np.ndarray
    ED: np.ndarray
    AD: np.ndarray
    nu: int
    lam: complex
    resolvent: np.ndarray  # (lam E - A)

    def transform(self, f):
        """Map forcing terms ``f`` (rows) to the commuting coordinates."""
        f = np.asarray(f)
        return np.linalg.solve(self.resolvent, f.T).T


def drazin_pair(E, A, lam=None, tol=1e-10):
    """Commuting coefficients ``((lam E - A)^{-1} E, (lam E - A)^{-1} A)`` and their Drazin inverses."""
    from .pencil import analyze_pencil

    E = asmatrix(E, "E", square=True)
    A = asmatrix(A, "A", square=True)
    if lam is None:
        lam = analyze_pencil(E, A, tol_rank=tol, require_regular=True).resolvent_point
    R = lam * E - A
    if not np.iscomplexobj(R) or not np.any(np.imag(R)):
        R = np.real(R)
    Eh = solve(R, E)
    Ah = solve(R, A)
    ED, nu = drazin_inverse(Eh, tol, return_index=True)
    AD = drazin_inverse(Ah, tol)
    return DrazinPair(Eh, Ah, ED, AD, nu, lam, R)


def _forcing(f, n):
    f = np.asarray(f)
    if f.ndim == 1:
        f = f.reshape(-1, 1) if n == 1 else f.reshape(1, -1)
    return f


def _anticipation(dp, fh, k):
    """``(I - E^D E) sum_{i<nu} (A^D E)^i A^D fh_{k+i}`` in the commuting coordinates."""
    n = dp.E_hat.shape[0]
    P = np.eye(n) - dp.ED @ dp.E_hat
    acc = np.zeros(n, dtype=np.result_type(fh.dtype, dp.AD.dtype))
    G = dp.AD
    for i in range(dp.nu):
        acc = acc + G @ fh[k + i]
        G = dp.AD @ dp.E_hat @ G
    return P @ acc


def solve_dae(E, A, f, v, K, pair=None):
    """States ``x_0 .. x_K`` of ``E x_{k+1} = A x_k + f_k`` from the explicit formula.

    ``f`` holds one forcing vector per row and must provide indices
    ``0 .. K + nu - 1`` (``0 .. K`` for ``nu = 0``); ``v`` is the free
    parameter of the formula. Use :func:`check_consistency` to obtain ``v``
    from an initial state.
    """
    E = asmatrix(E, "E", square=True)
    A = asmatrix(A, "A", square=True)
    n = E.shape[0]
    dp = pair or drazin_pair(E, A)
    f = _forcing(f, n)
    need = K + max(dp.nu, 1)
    if f.shape[0] < need:
        raise InsufficientInput(
            f"forcing has {f.shape[0]} terms, index {dp.nu} needs {need} for horizon {K}", dp.nu)
    fh = dp.transform(f)
    G = dp.ED @ dp.A_hat
    forced = (dp.ED @ fh[:K].T).T
    c0 = dp.ED @ dp.E_hat @ np.asarray(v)
    dtype = np.result_type(G.dtype, forced.dtype, c0.dtype)
    causal = _kernels.affine_recursion(
        np.ascontiguousarray(G, dtype=dtype), np.ascontiguousarray(c0, dtype=dtype),
        np.ascontiguousarray(forced.reshape(K, n), dtype=dtype))
    out = np.array([causal[k] - _anticipation(dp, fh, k) for k in range(K + 1)])
    if not (np.iscomplexobj(E) or np.iscomplexobj(A) or np.iscomplexobj(f) or np.iscomplexobj(v)):
        out = out.real
    return out


def check_consistency(E, A, x0, f, tol=1e-8, pair=None):
    """Decide whether ``x0`` starts a solution for the forcing ``f``.

    Returns ``(consistent, v)`` with ``v`` the minimal-norm parameter of the
    solution formula (a least-squares solution when inconsistent).
    """
    E = asmatrix(E, "E", square=True)
    A = asmatrix(A, "A", square=True)
    n = E.shape[0]
    dp = pair or drazin_pair(E, A)
    x0 = np.asarray(x0).reshape(n)
    if dp.nu == 0:
        return True, x0.copy()
    f = _forcing(f, n)
    if f.shape[0] < dp.nu:
        raise InsufficientInput(f"consistency check needs {dp.nu} forcing terms", dp.nu)
    fh = dp.transform(f)
    rhs = x0 + _anticipation(dp, fh, 0)
    P = dp.ED @ dp.E_hat
    v, *_ = np.linalg.lstsq(P, rhs, rcond=None)
    res = np.linalg.norm(P @ v - rhs)
    ok = res <= tol * (1 + np.linalg.norm(x0) + np.linalg.norm(fh[: dp.nu]))
    if not (np.iscomplexobj(P) or np.iscomplexobj(rhs)):
        v = v.real
    return bool(ok), v


def solve_from_initial_state(E, A, f, x0, K, tol=1e-8):
    """Convenience wrapper: consistency check then :func:`solve_dae`."""
    dp = drazin_pair(E, A)
    ok, v = check_consistency(E, A, x0, f, tol, pair=dp)
    if not ok:
        raise InconsistentInitialState("initial state is not consistent with the forcing")
    return solve_dae(E, A, f, v, K, pair=dp)
