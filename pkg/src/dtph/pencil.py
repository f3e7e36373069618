"""Structure of the pencil ``lam E - A``.

This module covers regularity, index, finite spectrum, the SVD-based
semi-explicit form and the index-one reduction to a standard state-space
system.
"""
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import IndexTooHigh, IrregularPencil, NumericalFailure
from .matcore import asmatrix, eigvals_general, herm, null_space, range_basis, svd

COND_MAX = 1e8
_SEED = 0x5EED
_CACHE_SIZE = 512
_CACHE = OrderedDict()  # analyses are pure functions of (E, A, tol, seed)
_CACHE_LOCK = threading.Lock()


def _wong_index(E, A, tol):
    """Index from the Wong sequence ``W_{i+1} = E^{-1}(A W_i)``, ``W_0 = {0}``."""
    n = E.shape[0]
    scale = max(np.linalg.norm(E, 2), np.linalg.norm(A, 2), 1e-300)
    W = np.zeros((n, 0), dtype=np.result_type(E.dtype, A.dtype))
    dims = [0]
    for i in range(n + 1):
        if W.shape[1]:
            Q = range_basis(A @ W, tol, scale)
        else:
            Q = np.zeros((n, 0))
        P = np.eye(n) - Q @ herm(Q)
        Wn = null_space(P @ E, tol, scale)
        dims.append(Wn.shape[1])
        if Wn.shape[1] == W.shape[1]:
            return i, dims[:-1]
        W = Wn
    raise NumericalFailure("Wong sequence did not stabilize")


@dataclass(frozen=True)
class PencilAnalysis:
    regular: bool
    index: object  # int, or None when irregular
    finite_spectrum: np.ndarray
    completely_causal: bool
    resolvent_point: complex = None
    sigma_at_resolvent: float = 0.0
    wong_dims: tuple = ()
    notes: tuple = ()

    @property
    def distinct_spectrum(self):
        """Finite eigenvalues with numerically coincident ones merged."""
        lam = np.asarray(self.finite_spectrum)
        out = []
        scale = 1.0 + (np.abs(lam).max() if lam.size else 0.0)
        used = np.zeros(lam.size, bool)
        for i in range(lam.size):
            if used[i]:
                continue
            grp = (~used) & (np.abs(lam - lam[i]) <= 1e-5 * scale)
            used |= grp
            out.append(complex(np.mean(lam[grp])))
        return out

    def to_dict(self):
        return {
            "regular": self.regular,
            "index": self.index,
            "completely_causal": self.completely_causal,
            "finite_spectrum": [[float(z.real), float(z.imag)] for z in np.asarray(self.finite_spectrum, complex)],
            "notes": list(self.notes),
        }


def _samples(E, A, seed):
    n = E.shape[0]
    rng = np.random.default_rng(seed)
    ne = np.linalg.norm(E, 2)
    na = np.linalg.norm(A, 2)
    ratio = na / ne if ne > 0 else 1.0
    radius = np.clip(ratio, 1e-3, 1e3) * rng.uniform(1.1, 2.3)
    phase = rng.uniform(0, 2 * np.pi)
    circle = radius * np.exp(1j * (phase + 2 * np.pi * np.arange(n + 1) / (n + 1)))
    reals = radius * np.array([1.0, -1.0, 0.5, -0.5, 0.25, -0.75, 1.5])
    return circle, reals


def _smin(E, A, lam):
    M = lam * E - A
    s = np.linalg.svd(M, compute_uv=False)
    scale = abs(lam) * np.linalg.norm(E, 2) + np.linalg.norm(A, 2)
    return s[-1], max(scale, 1e-300)


def analyze_pencil(E, A, tol_rank=1e-10, require_regular=False, seed=_SEED):
    """Regularity, index, finite spectrum and causality of ``(E, A)``.

    Regularity is decided by the smallest singular value of ``lam E - A`` at
    ``n + 1`` points on a circle of random radius: a nonzero determinant
    polynomial of degree at most ``n`` cannot vanish at all of them.

    Examples
    --------
    >>> analyze_pencil([[0.0, 1.0], [0.0, 0.0]], np.eye(2)).index
    2
    """
    E = asmatrix(E, "E", square=True)
    A = asmatrix(A, "A", square=True)
    if A.shape != E.shape:
        raise ValueError("E and A must have the same shape")
    key = (E.dtype.str, A.dtype.str, E.shape, E.tobytes(), A.tobytes(), float(tol_rank), seed)
    with _CACHE_LOCK:
        pa = _CACHE.get(key)
        if pa is not None:
            _CACHE.move_to_end(key)
    if pa is None:
        pa = _analyze(E, A, tol_rank, seed)
        with _CACHE_LOCK:
            _CACHE[key] = pa
            if len(_CACHE) > _CACHE_SIZE:
                _CACHE.popitem(last=False)
    if require_regular and not pa.regular:
        raise IrregularPencil("pencil (E, A) is singular: det(lam E - A) vanishes identically")
    return pa


def _analyze(E, A, tol_rank, seed):
    n = E.shape[0]
    if n == 0:
        return PencilAnalysis(True, 0, np.zeros(0, complex), True, 1.0, np.inf, (0,))
    notes = []
    real = not (np.iscomplexobj(E) or np.iscomplexobj(A))
    best = None
    for attempt in range(2):
        circle, reals = _samples(E, A, seed + attempt)
        cands = list(circle) + (list(reals) if real else [])
        vals = []
        for lam in cands:
            s, sc = _smin(E, A, lam)
            vals.append((s / sc, lam))
        rel_best = max(v for v, _ in vals)
        regular = rel_best > tol_rank
        marginal = tol_rank < rel_best <= 10 * tol_rank
        if not marginal:
            break
        notes.append("regularity marginal on first sample set; resampled")
    if not regular:
        return PencilAnalysis(False, None, np.zeros(0, complex), False, None, rel_best, (), tuple(notes))
    # prefer a real resolvent point for real data when it is well conditioned
    if real:
        rv = [(v, lam) for v, lam in vals if np.isreal(lam)]
        rbest = max(rv, key=lambda t: t[0])
        best = rbest if rbest[0] >= 0.1 * rel_best else max(vals, key=lambda t: t[0])
    else:
        best = max(vals, key=lambda t: t[0])
    lam0 = best[1]
    if np.isreal(lam0):
        lam0 = float(np.real(lam0))
    index, dims = _wong_index(E, A, tol_rank)

    from .drazin import core_nilpotent_split

    R = lam0 * E - A
    M = np.linalg.solve(R, E)
    try:
        sp = core_nilpotent_split(M, tol_rank)
        if sp.index != index:
            notes.append(f"Wong index {index} differs from Drazin index {sp.index}")
    except NumericalFailure as exc:
        sp = None
        notes.append(str(exc))

    if index <= 1:
        spec = _spectrum_index_one(E, A, tol_rank)
    elif sp is not None:
        spec = lam0 - 1.0 / eigvals_general(sp.core) if sp.rank_core else np.zeros(0)
    else:
        spec = np.zeros(0)
    spec = np.array(spec, dtype=complex)
    spec.setflags(write=False)
    return PencilAnalysis(True, int(index), spec, index <= 1, lam0, best[0], tuple(dims), tuple(notes))


def _spectrum_index_one(E, A, tol):
    sef = _svd_blocks(E, A, tol)
    r = sef["r"]
    if r == 0:
        return np.zeros(0, complex)
    sig = sef["sigma"]
    A11, A12, A21, A22 = sef["A11"], sef["A12"], sef["A21"], sef["A22"]
    S = A11 - A12 @ np.linalg.solve(A22, A21) if A22.size else A11
    d = 1.0 / np.sqrt(sig)
    return eigvals_general(d[:, None] * S * d[None, :])


def _svd_blocks(E, A, tol):
    n = E.shape[0]
    if np.array_equal(E, np.eye(n)):
        U = np.eye(n)
        V = np.eye(n)
        sig = np.ones(n)
        r = n
    else:
        d = svd(E)
        r = d.rank(tol)
        U = herm(d.U)
        V = d.V
        sig = d.singular_values[:r]
    T = U @ A @ V
    return {
        "U": U, "V": V, "sigma": sig, "r": r,
        "A11": T[:r, :r], "A12": T[:r, r:], "A21": T[r:, :r], "A22": T[r:, r:],
    }


@dataclass(frozen=True)
class SemiExplicitForm:
    """``U E V = diag(Sigma_E, 0)`` and the matching blocks of ``U A V``, ``U B`` and ``C V``."""

    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    r: int
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    a22_cond: float
    index_exceeds_one: bool

    @property
    def n(self):
        return self.U.shape[0]


def semi_explicit(sys, tol_rank=1e-10):
    """SVD-based semi-explicit coordinates of a regular descriptor system."""
    sys.require_valid()
    analyze_pencil(sys.E, sys.A, tol_rank=tol_rank, require_regular=True)
    b = _svd_blocks(sys.E, sys.A, tol_rank)
    r = b["r"]
    UB = b["U"] @ sys.B
    CV = sys.C @ b["V"]
    A22 = b["A22"]
    if A22.size:
        s = np.linalg.svd(A22, compute_uv=False)
        cnd = s[0] / s[-1] if s[-1] > 0 else np.inf
        scale = max(np.linalg.norm(sys.A, 2), 1e-300)
        singular = s[-1] <= tol_rank * scale
    else:
        cnd, singular = 1.0, False
    return SemiExplicitForm(
        b["U"], b["V"], b["sigma"], r, b["A11"], b["A12"], b["A21"], A22,
        UB[:r], UB[r:], CV[:, :r], CV[:, r:], float(cnd), bool(singular),
    )


@dataclass(frozen=True)
class ReducedStandardSystem:
    """Standard system ``(I, A, B, C, D)`` equivalent to an index-one descriptor system.

    The reduced state is ``xhat = Sigma_E^{1/2} x1`` where ``x1`` collects the
    first ``r`` semi-explicit coordinates; the remaining ones follow from the
    algebraic constraint ``x2 = -A22^{-1} (A21 x1 + B2 u)``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    sef: SemiExplicitForm
    a22_cond: float
    warnings: tuple = ()

    @property
    def r(self):
        return self.A.shape[0]

    def as_system(self, time_domain="discrete"):
        from .sysmodel import DescriptorSystem

        return DescriptorSystem(np.eye(self.r), self.A, self.B, self.C, self.D, time_domain)

    def _K(self):
        s = self.sef
        if s.A22.size == 0:
            return np.zeros((0, s.r)), np.zeros((0, self.D.shape[0]))
        return np.linalg.solve(s.A22, s.A21), np.linalg.solve(s.A22, s.B2)

    def full_state(self, xhat, u):
        """Original coordinates ``x`` from the reduced state and the input."""
        s = self.sef
        x1 = np.asarray(xhat) / np.sqrt(s.sigma)
        K1, K2 = self._K()
        x2 = -(K1 @ x1 + K2 @ np.asarray(u))
        return s.V @ np.concatenate([x1, x2])

    def reduced_state(self, x):
        s = self.sef
        xb = herm(s.V) @ np.asarray(x)
        return np.sqrt(s.sigma) * xb[: s.r]

    def constraint_residual(self, x, u):
        """Violation of the algebraic equation ``A21 x1 + A22 x2 + B2 u = 0``."""
        s = self.sef
        xb = herm(s.V) @ np.asarray(x)
        if s.A22.size == 0:
            return 0.0
        res = s.A21 @ xb[: s.r] + s.A22 @ xb[s.r:] + s.B2 @ np.asarray(u)
        return float(np.linalg.norm(res))

    def lift_storage(self, Xr):
        """Weight ``X`` on the original state with ``V(Ex) = xhat^H Xr xhat`` along solutions."""
        s = self.sef
        d = 1.0 / np.sqrt(s.sigma)
        n = s.n
        Xs = np.zeros((n, n), dtype=np.result_type(np.asarray(Xr).dtype, s.U.dtype))
        Xs[: s.r, : s.r] = d[:, None] * np.asarray(Xr) * d[None, :]
        X = herm(s.U) @ Xs @ s.U
        return 0.5 * (X + herm(X))

    def consistent_subspace(self):
        """Orthonormal basis of all ``(x, u)`` obeying the algebraic constraint."""
        s = self.sef
        n, m = s.n, self.D.shape[0]
        if s.A22.size == 0:
            return np.eye(n + m)
        row = np.hstack([np.hstack([s.A21, s.A22]) @ herm(s.V), s.B2])
        return null_space(row, 1e-12, 1.0) if row.size else np.eye(n + m)


def reduce_to_standard(sef, D, cond_max=COND_MAX):
    """Eliminate the algebraic part of an index-one semi-explicit form.

    Raises :class:`IndexTooHigh` when ``A22`` is singular. A warning is
    attached (and emitted) when its condition number exceeds ``cond_max``.
    """
    if sef.index_exceeds_one:
        raise IndexTooHigh(f"A22 is singular (cond = {sef.a22_cond:.3g}); index exceeds one")
    D = asmatrix(D, "D", square=True)
    d = 1.0 / np.sqrt(sef.sigma)
    if sef.A22.size:
        K1 = np.linalg.solve(sef.A22, sef.A21)
        K2 = np.linalg.solve(sef.A22, sef.B2)
        S = sef.A11 - sef.A12 @ K1
        Bs = sef.B1 - sef.A12 @ K2
        Cs = sef.C1 - sef.C2 @ K1
        Ds = D - sef.C2 @ K2
    else:
        S, Bs, Cs, Ds = sef.A11, sef.B1, sef.C1, D
    Ar = d[:, None] * S * d[None, :]
    Br = d[:, None] * Bs
    Cr = Cs * d[None, :]
    warn = ()
    if sef.a22_cond > cond_max:
        msg = f"A22 is ill-conditioned (cond = {sef.a22_cond:.3g} > {cond_max:.3g})"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        warn = (msg,)
    return ReducedStandardSystem(Ar, Br, Cr, Ds, sef, sef.a22_cond, warn)


def reduce_system(sys, tol_rank=1e-10, cond_max=COND_MAX):
    """``semi_explicit`` followed by ``reduce_to_standard``."""
    return reduce_to_standard(semi_explicit(sys, tol_rank), sys.D, cond_max)


def weierstrass_oracle(E, A, lam0=None):
    """Small-n test oracle: ``(S, T, J, N)`` with ``S E T = diag(I, N)``, ``S A T = diag(J, I)``.

    Built from the core-nilpotent split of ``(lam0 E - A)^{-1} E``; not meant
    for production use.
    """
    from .drazin import core_nilpotent_split

    E = asmatrix(E, square=True)
    A = asmatrix(A, square=True)
    if lam0 is None:
        lam0 = analyze_pencil(E, A, require_regular=True).resolvent_point
    R = lam0 * E - A
    M = np.linalg.solve(R, E)
    sp = core_nilpotent_split(M)
    r = sp.rank_core
    n = E.shape[0]
    Ti = np.linalg.inv(sp.T)
    Mc, Mn = sp.core, sp.nil
    # M = T diag(Mc, Mn) T^{-1}; I - lam0 M + ... gives A-side blocks
    Sl = np.zeros((n, n), dtype=complex)
    Sl[:r, :r] = np.linalg.inv(Mc)
    Sl[r:, r:] = np.linalg.inv(lam0 * Mn - np.eye(n - r))
    S = Sl @ Ti @ np.linalg.inv(R)
    J = lam0 * np.eye(r) - np.linalg.inv(Mc) if r else np.zeros((0, 0))
    N = Sl[r:, r:] @ Mn
    return S, sp.T, J, N


def finite_part(E, A, tol_rank=1e-10):
    """Square matrix whose eigenvalues are the finite spectrum of ``(E, A)``.

    For index at most one this is the reduced matrix of the semi-explicit
    form; otherwise it is the finite block of a Weierstrass-type splitting.
    """
    from .drazin import core_nilpotent_split

    E = asmatrix(E, "E", square=True)
    A = asmatrix(A, "A", square=True)
    pa = analyze_pencil(E, A, tol_rank=tol_rank, require_regular=True)
    if pa.index <= 1:
        b = _svd_blocks(E, A, tol_rank)
        r = b["r"]
        if r == 0:
            return np.zeros((0, 0)), pa
        S = b["A11"] - b["A12"] @ np.linalg.solve(b["A22"], b["A21"]) if b["A22"].size else b["A11"]
        d = 1.0 / np.sqrt(b["sigma"])
        return d[:, None] * S * d[None, :], pa
    lam0 = pa.resolvent_point
    sp = core_nilpotent_split(np.linalg.solve(lam0 * E - A, E), tol_rank)
    r = sp.rank_core
    if r == 0:
        return np.zeros((0, 0)), pa
    return lam0 * np.eye(r) - np.linalg.inv(sp.core), pa
