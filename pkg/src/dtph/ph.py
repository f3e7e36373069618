"""Scattering port-Hamiltonian structure: weighted norms, representations and stability."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, IndexTooHigh, InvalidWeight
from .kyp import TOL_LMI, TOL_STRICT, build_lmi, lyapunov_lmi, solve_feasibility
from .matcore import (asmatrix, eig_general, eigvalsh, herm, inv_sqrt_pd, matrix_sqrt_psd,
                      spectral_norm)
from .pencil import analyze_pencil, finite_part, reduce_system


def _check_weight(X, tol_strict=TOL_STRICT):
    X = asmatrix(X, "X", square=True)
    if not np.allclose(X, herm(X), atol=1e-10 * (1 + np.abs(X).max(initial=0.0))):
        raise InvalidWeight("X is not Hermitian")
    n = X.shape[0]
    if n == 0:
        return X
    w = eigvalsh(X)
    tr = float(np.sum(w))
    if not (tr > 0 and w[0] >= tol_strict * tr / n):
        raise InvalidWeight(f"X is not positive definite (eigmin {w[0]:.3g}, trace {tr:.3g})")
    return 0.5 * (X + herm(X))


def transformed_blocks(A, B, C, D, X):
    """``(X^{1/2} A X^{-1/2}, X^{1/2} B, C X^{-1/2}, D)``."""
    A, B, C, D = (np.atleast_2d(np.asarray(M)) for M in (A, B, C, D))
    X = _check_weight(X)
    if X.shape[0] == 0:
        return A, B, C, D
    Xh = matrix_sqrt_psd(X)
    Xhi = inv_sqrt_pd(X)
    return Xh @ A @ Xhi, Xh @ B, C @ Xhi, D


def weighted_norm(A, B, C, D, X):
    """X-weighted spectral norm of ``[[A, B], [C, D]]``.

    Examples
    --------
    >>> weighted_norm(np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)), np.zeros((1, 1)), np.eye(2))
    1.0
    """
    At, Bt, Ct, Dt = transformed_blocks(A, B, C, D, X)
    return spectral_norm(np.block([[At, Bt], [Ct, Dt]]))


@dataclass(frozen=True)
class PhRepresentation:
    """Positive definite weight ``X`` and the coordinates ``X^{1/2} x`` of a standard system."""

    X: np.ndarray
    X_half: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    norm_value: float
    notes: tuple = ()

    def hamiltonian(self, x):
        """``(1/2) x^H X x`` on the (reduced) state."""
        x = np.asarray(x)
        return 0.5 * float(np.real(np.vdot(x, self.X @ x)))

    def as_system(self):
        from .sysmodel import DescriptorSystem

        return DescriptorSystem.standard(self.A, self.B, self.C, self.D)

    def to_dict(self):
        def enc(M):
            if np.iscomplexobj(M):
                return [[[float(v.real), float(v.imag)] for v in row] for row in M]
            return [[float(v) for v in row] for row in M]
        return {"X": enc(self.X), "A": enc(self.A), "B": enc(self.B), "C": enc(self.C),
                "D": enc(self.D), "norm_value": self.norm_value, "notes": list(self.notes)}


def _standard_data(sys):
    if sys.is_standard:
        return sys.A, sys.B, sys.C, sys.D, ()
    red = reduce_system(sys)
    return red.A, red.B, red.C, red.D, ("weight acts on the reduced state",)


def to_ph(sys, X, tol_lmi=TOL_LMI):
    """pH coordinates for a weight ``X`` solving the scattering KYP inequality.

    For a descriptor system ``X`` refers to the reduced standard system.
    """
    A, B, C, D, notes = _standard_data(sys)
    X = _check_weight(X)
    from .sysmodel import DescriptorSystem

    W = build_lmi(DescriptorSystem.standard(A, B, C, D), "d-sKYP").W(X)
    mw = float(eigvalsh(W)[0]) if W.size else np.inf
    if mw < -tol_lmi * (1 + np.linalg.norm(X)):
        raise InvalidWeight(f"X does not solve the scattering KYP inequality (eigmin {mw:.3g})")
    Xh = matrix_sqrt_psd(X) if X.size else X
    At, Bt, Ct, Dt = transformed_blocks(A, B, C, D, X)
    nv = spectral_norm(np.block([[At, Bt], [Ct, Dt]]))
    return PhRepresentation(X, Xh, At, Bt, Ct, Dt, nv, notes)


@dataclass
class PhVerdict:
    is_ph: bool
    representation: PhRepresentation
    certificate: object
    notes: list = field(default_factory=list)


def is_ph(sys, tol_lmi=TOL_LMI, tol_strict=TOL_STRICT, allow_zero_E=False):
    """Decide whether ``sys`` is a discrete-time scattering pH system.

    Requires a scattering KYP solution that is positive definite; semidefinite
    singular solutions do not count.
    """
    sys.require_valid()
    if not np.any(sys.E) and sys.n and not allow_zero_E:
        raise DimensionError("E = 0 violates the standing assumption")
    pa = analyze_pencil(sys.E, sys.A, require_regular=True)
    if pa.index > 1:
        raise IndexTooHigh(f"index {pa.index} > 1 is not supported")
    red = reduce_system(sys)
    p = build_lmi(red.as_system(), "d-sKYP").with_constraint("pd")
    cert = solve_feasibility(p, "semidefinite", tol_lmi, tol_strict)
    notes = [] if sys.is_standard else ["weight acts on the reduced state"]
    if not cert.feasible:
        return PhVerdict(False, None, cert, notes)
    rep = to_ph(red.as_system(), cert.X, tol_lmi)
    ok = rep.norm_value <= 1 + max(tol_lmi, 1e-9) * (1 + np.linalg.norm(cert.X))
    return PhVerdict(bool(ok), rep, cert, notes)


@dataclass
class StabilityReport:
    stable: bool
    asymptotically_stable: bool
    eigenvalues: np.ndarray
    spectral_radius: float
    defective_unit_eigenvalues: list
    lmi_stable: object = None
    agrees: object = None

    def to_dict(self):
        return {
            "stable": self.stable, "asymptotically_stable": self.asymptotically_stable,
            "spectral_radius": self.spectral_radius,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in np.asarray(self.eigenvalues, complex)],
            "defective_unit_eigenvalues": [[float(z.real), float(z.imag)] for z in self.defective_unit_eigenvalues],
            "lmi_stable": self.lmi_stable, "agrees": self.agrees,
        }


def spectral_stability(Af, unit_tol=1e-8):
    """``(stable, asymptotically_stable, eigenvalues, defective)`` for a square matrix."""
    n = Af.shape[0]
    if n == 0:
        return True, True, np.zeros(0), []
    ed = eig_general(Af)
    lam = ed.eigenvalues
    rad = np.abs(lam)
    defective = []
    stable = bool(np.all(rad <= 1 + unit_tol))
    if stable:
        for mu, alg in ed.clusters():
            if abs(abs(mu) - 1) <= 1e-6 and alg > 1 and ed.geometric_multiplicity(mu) < alg:
                defective.append(mu)
        stable = not defective
    asym = bool(np.all(rad < 1 - unit_tol))
    return stable, asym, lam, defective


def classify_stability(E, A=None, lmi_crosscheck=True, tol_lmi=TOL_LMI, tol_strict=TOL_STRICT):
    """Stability from the finite spectrum, cross-checked with the Lyapunov LMI.

    Stable means all finite eigenvalues lie in the closed unit disk with the
    ones on the circle semisimple; asymptotically stable means all lie inside
    the open disk. ``classify_stability(A)`` treats ``E = I``.
    """
    if A is None:
        A = asmatrix(E, "A", square=True)
        E = np.eye(A.shape[0])
    Af, _ = finite_part(E, A)
    stable, asym, lam, defective = spectral_stability(Af)
    rho = float(np.max(np.abs(lam), initial=0.0))
    lmi_ok = agrees = None
    if lmi_crosscheck and Af.shape[0]:
        cert = solve_feasibility(lyapunov_lmi(np.eye(Af.shape[0]), Af).with_constraint("pd"),
                                 "semidefinite", tol_lmi, tol_strict)
        lmi_ok = cert.feasible
        agrees = lmi_ok == stable
    return StabilityReport(stable, asym, lam, rho, defective, lmi_ok, agrees)
