"""KYP-type linear matrix inequalities and their feasibility.

Every LMI here has the form ``W(X) >= 0`` with ``W`` affine in a Hermitian
``X``, together with a sign condition on ``X``. Feasibility is decided by a
log-det barrier path-following method (see ``_kernels.barrier_maximize``)
applied to eigenvalue-shift problems, and every witness is re-verified by an
independent eigenvalue computation.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionError, IndexTooHigh, TimeDomainMismatch
from .matcore import eigvalsh, herm, range_basis, symmetrize

TOL_LMI = 1e-8
TOL_STRICT = 1e-6
RHO_AFFINE = 1e3
RHO_HOMOGENEOUS = 1.0
DELTA_COARSE = 1e-8
DELTA_FINE = 1e-10

KINDS = ("d-iKYP", "d-sKYP", "gen-lyapunov", "c-iKYP", "c-sKYP")


def _blocks_d_ikyp(E, A, B, C, D):
    m = D.shape[0]

    def W(X):
        AX = herm(A) @ X
        return np.block([
            [-AX @ A + herm(E) @ X @ E, herm(C) - AX @ B],
            [C - herm(B) @ X @ A, D + herm(D) - herm(B) @ X @ B],
        ])
    return W


def _blocks_d_skyp(E, A, B, C, D):
    m = D.shape[0]

    def W(X):
        AX = herm(A) @ X
        return np.block([
            [-AX @ A + herm(E) @ X @ E - herm(C) @ C, -AX @ B - herm(C) @ D],
            [-herm(D) @ C - herm(B) @ X @ A, np.eye(m) - herm(D) @ D - herm(B) @ X @ B],
        ])
    return W


def _blocks_gen_lyap(E, A):
    def W(X):
        return -herm(A) @ X @ A + herm(E) @ X @ E
    return W


def _blocks_c_ikyp(A, B, C, D):
    def W(X):
        return np.block([
            [-herm(A) @ X - X @ A, herm(C) - X @ B],
            [C - herm(B) @ X, D + herm(D)],
        ])
    return W


def _blocks_c_skyp(A, B, C, D):
    m = D.shape[0]

    def W(X):
        return np.block([
            [-herm(A) @ X - X @ A - herm(C) @ C, -X @ B - herm(C) @ D],
            [-herm(B) @ X - herm(D) @ C, np.eye(m) - herm(D) @ D],
        ])
    return W


def hermitian_basis(n, complex_field):
    """Frobenius-orthonormal basis of the (real) space of Hermitian n x n matrices."""
    out = []
    dt = complex if complex_field else float
    for i in range(n):
        H = np.zeros((n, n), dt)
        H[i, i] = 1.0
        out.append(H)
    r = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            H = np.zeros((n, n), dt)
            H[i, j] = H[j, i] = r
            out.append(H)
            if complex_field:
                H = np.zeros((n, n), dt)
                H[i, j] = -1j * r
                H[j, i] = 1j * r
                out.append(H)
    return out


@dataclass(frozen=True, eq=False)
class LmiProblem:
    """``W(X) >= 0`` with ``W`` affine in Hermitian ``X`` and a sign constraint on ``X``.

    ``constraint`` is ``"psd"`` (X >= 0), ``"pd"`` (X > 0) or ``"pd_on_im_E"``
    (X >= 0 and Z^H X Z > 0 for an orthonormal basis Z of im E).
    """

    kind: str
    n: int
    block_map: object = field(repr=False)
    complex_field: bool = False
    constraint: str = "psd"
    Z: np.ndarray = field(default=None, repr=False)
    homogeneous: bool = False

    def W(self, X):
        return symmetrize(self.block_map(np.asarray(X)))

    def with_constraint(self, constraint, Z=None):
        return LmiProblem(self.kind, self.n, self.block_map, self.complex_field, constraint,
                          self.Z if Z is None else Z, self.homogeneous)

    def affine_data(self):
        """``(W0, [W(H_k) - W0], [H_k])`` over an orthonormal Hermitian basis."""
        zero = np.zeros((self.n, self.n), complex if self.complex_field else float)
        W0 = self.W(zero)
        basis = hermitian_basis(self.n, self.complex_field)
        return W0, [self.W(H) - W0 for H in basis], basis


def build_lmi(sys, kind):
    """Assemble the LMI of the requested kind for ``sys``.

    Examples
    --------
    >>> from dtph import DescriptorSystem
    >>> p = build_lmi(DescriptorSystem(1, 0.5, 0.5, 0, 1), "d-sKYP")
    >>> p.W(np.array([[4.0]]))
    array([[ 3., -1.],
           [-1., -1.]])
    """
    if kind not in KINDS:
        raise ValueError(f"unknown LMI kind {kind!r}; expected one of {KINDS}")
    sys.require_valid()
    E, A, B, C, D = sys.matrices()
    cf = sys.is_complex
    if kind.startswith("c-"):
        if sys.time_domain != "continuous":
            raise TimeDomainMismatch(f"{kind} needs a continuous-time system")
        if not sys.is_standard:
            raise DimensionError(f"{kind} is defined for E = I only")
        fn = _blocks_c_ikyp(A, B, C, D) if kind == "c-iKYP" else _blocks_c_skyp(A, B, C, D)
        return LmiProblem(kind, sys.n, fn, cf)
    if sys.time_domain != "discrete":
        raise TimeDomainMismatch(f"{kind} needs a discrete-time system")
    if kind == "d-iKYP":
        return LmiProblem(kind, sys.n, _blocks_d_ikyp(E, A, B, C, D), cf)
    if kind == "d-sKYP":
        return LmiProblem(kind, sys.n, _blocks_d_skyp(E, A, B, C, D), cf)
    Z = range_basis(E) if sys.n else np.zeros((0, 0))
    return LmiProblem(kind, sys.n, _blocks_gen_lyap(E, A), cf, "pd_on_im_E", Z, True)


def lyapunov_lmi(E, A):
    """Generalized Lyapunov LMI ``-A^H X A + E^H X E >= 0`` (X >= 0, definite on im E)."""
    E = np.atleast_2d(np.asarray(E))
    A = np.atleast_2d(np.asarray(A))
    cf = np.iscomplexobj(E) or np.iscomplexobj(A)
    Z = range_basis(E) if E.size else np.zeros((0, 0))
    return LmiProblem("gen-lyapunov", E.shape[0], _blocks_gen_lyap(E, A), cf, "pd_on_im_E", Z, True)


@dataclass
class LmiCertificate:
    status: str  # feasible | infeasible | marginal
    X: np.ndarray
    min_eig_W: float
    min_eig_X: float
    t_star: float
    mode: str
    constraint: str
    rho: float
    forced_zero: bool = False
    infeasibility_note: str = ""
    details: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status == "feasible"

    def to_dict(self):
        X = self.X
        enc = None
        if X is not None:
            enc = ([[[float(v.real), float(v.imag)] for v in row] for row in X]
                   if np.iscomplexobj(X) else [[float(v) for v in row] for row in X])
        return {
            "status": self.status, "X": enc, "min_eig_W": _f(self.min_eig_W),
            "min_eig_X": _f(self.min_eig_X), "t_star": _f(self.t_star), "mode": self.mode,
            "constraint": self.constraint, "rho": self.rho, "forced_zero": self.forced_zero,
            "note": self.infeasibility_note,
            "details": {k: _f(v) if isinstance(v, float) else v for k, v in self.details.items()},
        }


def _f(v):
    v = float(v)
    return v if np.isfinite(v) else str(v)


def _embed(H, complex_field):
    if not complex_field:
        return np.real(H)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


class _Assembly:
    """Block-diagonal real-symmetric data for ``barrier_maximize``."""

    def __init__(self, nvar):
        self.nvar = nvar
        self.blocks = []  # (F0, [F_i])

    def add(self, F0, Fi):
        self.blocks.append((F0, Fi))

    def arrays(self):
        sizes = [b[0].shape[0] for b in self.blocks]
        offs = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        N = int(offs[-1])
        F0 = np.zeros((N, N))
        Fi = np.zeros((self.nvar, N, N))
        for (b0, bi), lo, hi in zip(self.blocks, offs[:-1], offs[1:]):
            F0[lo:hi, lo:hi] = b0
            for i, f in enumerate(bi):
                if f is not None:
                    Fi[i, lo:hi, lo:hi] = f
        return F0, Fi, offs


class _Solver:
    """Shared affine data and the shift problems used for all decisions."""

    def __init__(self, problem, rho, tol_lmi, tol_strict):
        self.p = problem
        self.rho = rho
        self.tol_lmi = tol_lmi
        self.tol_strict = tol_strict
        W0, Wk, basis = problem.affine_data()
        cf = problem.complex_field
        self.cf = cf
        self.basis = basis
        self.W0 = _embed(W0, cf)
        self.Wk = [_embed(w, cf) for w in Wk]
        self.Hk = [_embed(h, cf) for h in basis]
        self.tr = np.array([np.real(np.trace(h)) for h in basis])
        self.Zk = None
        if problem.constraint == "pd_on_im_E" and problem.Z is not None:
            Z = problem.Z
            self.Zk = [_embed(herm(Z) @ h @ Z, cf) for h in basis]
        scale = 1.0 + np.linalg.norm(self.W0) + max((np.linalg.norm(w) for w in self.Wk), default=0.0)
        self.gap_tol = 1e-13 * scale

    def X_of(self, x):
        n = self.p.n
        X = np.zeros((n, n), complex if self.cf else float)
        for xi, h in zip(x, self.basis):
            X = X + xi * h
        return X

    def _run(self, asm, c, y0):
        F0, Fi, offs = asm.arrays()
        y, status, gap = _kernels.barrier_maximize(
            F0, Fi, offs, np.asarray(c, float), np.asarray(y0, float), self.gap_tol, 600)
        return y, status, gap

    def _trace_block(self, asm, extra):
        asm.add(np.array([[self.rho]]), [np.array([[-t]]) for t in self.tr] + [None] * extra)

    def shift(self, x0):
        """max t  s.t.  W(X) >= t I, X >= t I, tr X <= rho."""
        p = len(self.basis)
        asm = _Assembly(p + 1)
        NW = self.W0.shape[0]
        asm.add(self.W0, self.Wk + [-np.eye(NW)])
        if p:
            NX = self.Hk[0].shape[0]
            asm.add(np.zeros((NX, NX)), self.Hk + [-np.eye(NX)])
            self._trace_block(asm, 1)
        X0 = self.X_of(x0)
        t0 = min(self._eigW(X0), eigvalsh(X0)[0] if p else np.inf, 0.0) - 1.0
        y, status, gap = self._run(asm, np.r_[np.zeros(p), 1.0], np.r_[x0, t0])
        return y[:p], float(y[p]), status

    def relaxed(self, x0, delta, objective):
        """Maximise ``objective`` subject to W(X) >= -delta I and X >= -delta I (tr X <= rho).

        ``objective`` is ``"trace"`` or ``"eigmin"`` (smallest eigenvalue of X,
        or of Z^H X Z for the im-E constraint).
        """
        p = len(self.basis)
        NW = self.W0.shape[0]
        extra = 1 if objective == "eigmin" else 0
        asm = _Assembly(p + extra)
        pad = [None] * extra
        asm.add(self.W0 + delta * np.eye(NW), self.Wk + pad)
        NX = self.Hk[0].shape[0]
        X0 = self.X_of(x0)
        if objective == "trace":
            asm.add(delta * np.eye(NX), self.Hk)
            self._trace_block(asm, 0)
            c = self.tr.copy()
            y0 = np.asarray(x0, float)
        else:
            if self.Zk is not None:
                asm.add(delta * np.eye(NX), self.Hk + [None])
                NZ = self.Zk[0].shape[0]
                asm.add(np.zeros((NZ, NZ)), self.Zk + [-np.eye(NZ)])
                u0 = eigvalsh(herm(self.p.Z) @ X0 @ self.p.Z)[0] - 1.0
            else:
                asm.add(np.zeros((NX, NX)), self.Hk + [-np.eye(NX)])
                u0 = eigvalsh(X0)[0] - 1.0
            self._trace_block(asm, 1)
            c = np.r_[np.zeros(p), 1.0]
            y0 = np.r_[x0, u0]
        y, status, gap = self._run(asm, c, y0)
        return y[:p], float(np.dot(c, y)), status

    def _eigW(self, X):
        return eigvalsh(self.p.W(X))[0]


def _verify(problem, X):
    W = problem.W(X)
    mw = float(eigvalsh(W)[0]) if W.size else np.inf
    mx = float(eigvalsh(X)[0]) if X.size else np.inf
    return mw, mx


def solve_feasibility(problem, mode="semidefinite", tol_lmi=TOL_LMI, tol_strict=TOL_STRICT, rho=None):
    """Decide feasibility of an :class:`LmiProblem`.

    ``semidefinite`` mode asks for ``W(X) >= 0``; ``strict`` mode asks for a
    margin of at least ``tol_strict``. For ``pd`` and ``pd_on_im_E``
    constraints the definiteness of ``X`` is decided by comparing two
    relaxation levels: a definite solution survives as the relaxation shrinks,
    a singular limit does not.
    """
    if mode not in ("semidefinite", "strict"):
        raise ValueError("mode must be 'semidefinite' or 'strict'")
    if rho is None:
        rho = RHO_HOMOGENEOUS if problem.homogeneous else RHO_AFFINE
    n = problem.n
    cons = problem.constraint
    empty = np.zeros((n, n), complex if problem.complex_field else float)
    if n == 0:
        mw, _ = _verify(problem, empty)
        thr = tol_strict if mode == "strict" else -tol_lmi
        ok = mw >= thr
        st = "feasible" if ok else ("marginal" if mw >= -tol_lmi else "infeasible")
        return LmiCertificate(st, empty, mw, np.inf, mw, mode, cons, rho, False,
                              "" if ok else "constant LMI block is not positive semidefinite")

    S = _Solver(problem, rho, tol_lmi, tol_strict)
    x0 = np.zeros(len(S.basis))
    x0[:n] = rho / (2.0 * n)
    x1, t1, st1 = S.shift(x0)
    X1 = S.X_of(x1)
    mw, mx = _verify(problem, X1)
    details = {"t_phase1": t1, "solver_status_phase1": int(st1)}

    def cert(status, X, note="", forced=False, t=t1):
        w, x = _verify(problem, X)
        return LmiCertificate(status, X, w, x, t, mode, cons, rho, forced, note, details)

    if mode == "strict":
        if t1 >= tol_strict and min(mw, mx) >= tol_strict * 0.5:
            status = "feasible"
        elif t1 >= -tol_lmi:
            status = "marginal"
        else:
            status = "infeasible"
        if cons == "psd" or status != "feasible":
            note = "" if status == "feasible" else f"best margin {t1:.3g} below {tol_strict:g}"
            return cert(status, X1, note)
    elif t1 < -tol_lmi:
        return cert("infeasible", X1, f"max over X of eigmin(W(X)), eigmin(X) is {t1:.3g} < -{tol_lmi:g}")

    if cons == "psd":
        if min(mw, mx) < -tol_lmi:
            return cert("marginal", X1, "re-verification of the witness failed")
        # forced-zero detection
        xa, ta, _ = S.relaxed(x1, DELTA_COARSE, "trace")
        xb, tb, _ = S.relaxed(x1, DELTA_FINE, "trace")
        details.update(trace_coarse=ta, trace_fine=tb)
        forced = tb <= 0.5 * ta or tb <= 10 * n * DELTA_FINE
        if forced:
            return cert("feasible", np.zeros_like(X1), "only X = 0 is feasible", True)
        return cert("feasible", X1)

    # definite constraint: compare the best definiteness margin at two relaxation levels
    if t1 <= -DELTA_FINE / 2:
        return cert("marginal", X1, f"semidefinite margin {t1:.3g} too close to zero to test definiteness")
    xa, sa, _ = S.relaxed(x1, DELTA_COARSE, "eigmin")
    xb, sb, _ = S.relaxed(x1, DELTA_FINE, "eigmin")
    Xb = S.X_of(xb)
    details.update(eigmin_coarse=sa, eigmin_fine=sb)
    trX = float(np.real(np.trace(Xb)))
    w, x = _verify(problem, Xb)
    definite = sb >= tol_strict * max(trX, 0.0) / n and sb >= 0.5 * sa and sb > 0
    if definite and w >= -tol_lmi and x >= -tol_lmi:
        return cert("feasible", Xb)
    if definite:
        return cert("marginal", Xb, "definite witness failed re-verification")
    note = "no definite solution: " + (
        "the definiteness margin vanishes with the relaxation" if sb < 0.5 * sa
        else f"definiteness margin {sb:.3g} below threshold")
    # the semidefinite problem is feasible, only definiteness fails
    return cert("infeasible", S.X_of(x1), note)


def is_feasible(sys, kind, mode="semidefinite", constraint=None, **kw):
    p = build_lmi(sys, kind)
    if constraint is not None:
        p = p.with_constraint(constraint)
    return solve_feasibility(p, mode, **kw)


@dataclass
class LyapunovClassification:
    stable_and_causal: bool
    X: np.ndarray
    certificate: LmiCertificate
    spectral_agrees: object = None


def gen_lyapunov_classify(E, A, tol_lmi=TOL_LMI, tol_strict=TOL_STRICT):
    """Stability together with complete causality, via the generalized Lyapunov LMI.

    A solution positive definite on ``im E`` exists exactly when the pencil is
    completely causal and stable. The verdict is compared with the spectral
    test on the finite spectrum.
    """
    from .pencil import analyze_pencil
    from .ph import classify_stability

    pa = analyze_pencil(E, A, require_regular=True)
    cert = solve_feasibility(lyapunov_lmi(E, A), "semidefinite", tol_lmi, tol_strict)
    ok = cert.feasible
    st = classify_stability(E, A, lmi_crosscheck=False)
    spectral = (st.stable and pa.completely_causal) == ok
    return LyapunovClassification(ok, cert.X, cert, spectral)


@dataclass
class PassivityVerdict:
    passive: bool
    kind: str
    certificate: LmiCertificate
    X_reduced: np.ndarray
    X: np.ndarray
    reduced: object
    subspace_min_eig: float = np.inf
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"passive": self.passive, "kind": self.kind, "certificate": self.certificate.to_dict(),
                "subspace_min_eig": _f(self.subspace_min_eig), "notes": list(self.notes)}


def check_passivity(sys, kind, allow_zero_E=False, tol_lmi=TOL_LMI, tol_strict=TOL_STRICT, tol_rank=1e-10,
                    cond_max=1e8):
    """Impedance or scattering passivity of an index-one descriptor system.

    The system is reduced to a standard one and the matching KYP LMI is solved
    there. A feasible reduced storage is lifted back and re-checked on the
    subspace of ``(x, u)`` that satisfy the algebraic constraint.
    """
    from .pencil import analyze_pencil, reduce_system

    if kind not in ("impedance", "scattering"):
        raise ValueError("kind must be 'impedance' or 'scattering'")
    sys.require_valid()
    notes = []
    if not np.any(sys.E) and sys.n:
        if not allow_zero_E:
            raise DimensionError("E = 0 violates the standing assumption; pass allow_zero_E=True")
        notes.append("E = 0: purely algebraic system")
    pa = analyze_pencil(sys.E, sys.A, tol_rank=tol_rank, require_regular=True)
    if pa.index > 1:
        raise IndexTooHigh(
            f"index {pa.index} > 1: KYP feasibility does not characterize passivity for such systems")
    red = reduce_system(sys, tol_rank, cond_max)
    notes.extend(red.warnings)
    lk = "d-iKYP" if kind == "impedance" else "d-sKYP"
    rs = red.as_system()
    cert = solve_feasibility(build_lmi(rs, lk), "semidefinite", tol_lmi, tol_strict)
    Xr = cert.X
    X = red.lift_storage(Xr) if Xr is not None else None
    smin = np.inf
    if cert.feasible:
        Sb = red.consistent_subspace()
        Wd = build_lmi(sys, lk).W(X)
        M = herm(Sb) @ Wd @ Sb
        smin = float(eigvalsh(M)[0]) if M.size else np.inf
        scale = 1.0 + np.linalg.norm(X)
        if smin < -tol_lmi * scale:
            notes.append(f"lifted storage fails on the constraint subspace (eigmin {smin:.3g})")
            return PassivityVerdict(False, kind, cert, Xr, X, red, smin, notes)
    return PassivityVerdict(cert.feasible, kind, cert, Xr, X, red, smin, notes)
