"""External Cayley transform (impedance <-> scattering) and internal Cayley (Tustin) discretization."""
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionError, KernelInclusionError, ResolventViolation, SingularFeedthrough,
                     TimeDomainMismatch)
from .matcore import COND_SINGULAR, cond, herm, null_space
from .sysmodel import DescriptorSystem

DIRECTIONS = ("imp->scat", "scat->imp")
TOL_KERNEL = 1e-10
_SQ2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ExternalCayleyResult:
    transformed: DescriptorSystem
    direction: str
    restricted: bool
    kernel_basis: np.ndarray
    cond: float
    range_basis: np.ndarray = None  # inputs of the transformed system live in span(range_basis)


def _cayley_blocks(sys):
    """The self-inverse block formula; ``I + D`` must be invertible."""
    E, A, B, C, D = sys.matrices()
    m = sys.m
    M = np.eye(m) + D
    c = cond(M) if m else 1.0
    if not np.isfinite(c) or c > COND_SINGULAR:
        raise SingularFeedthrough(
            f"I + D is singular (condition {c:.3g}); no input/output state-space form exists")
    Mi = np.linalg.inv(M)
    A2 = A - B @ Mi @ C
    B2 = _SQ2 * B @ Mi
    C2 = -_SQ2 * Mi @ C
    D2 = -Mi @ (D - np.eye(m))
    return sys.replace(A=A2, B=B2, C=C2, D=D2), c


def feedthrough_kernel(D, tol=TOL_KERNEL):
    """Orthonormal basis of ``ker(I + D)``."""
    D = np.atleast_2d(np.asarray(D))
    m = D.shape[0]
    if m == 0:
        return np.zeros((0, 0))
    return null_space(np.eye(m) + D, tol, max(1.0, np.linalg.norm(D, 2)))


def check_kernel_inclusion(sys, X, tol=1e-8):
    """Largest of ``|X B K|`` and ``|C^H K|`` for a basis ``K`` of ``ker(I + D)``, relative to scale.

    Any positive semidefinite solution of the scattering KYP inequality forces
    both to vanish.
    """
    K = feedthrough_kernel(sys.D)
    if K.shape[1] == 0:
        return 0.0
    X = np.atleast_2d(np.asarray(X))
    r1 = np.linalg.norm(X @ sys.B @ K) / (1 + np.linalg.norm(X) * (1 + np.linalg.norm(sys.B)))
    r2 = np.linalg.norm(herm(sys.C) @ K) / (1 + np.linalg.norm(sys.C))
    return float(max(r1, r2))


def restrict_scattering(sys, X, tol=1e-8):
    """Restrict inputs and outputs of a scattering system to ``ker(I + D)^perp``.

    Returns ``(restricted_system, Q, K)`` where ``Q`` and ``K`` are orthonormal
    bases of ``ker(I + D)^perp`` and ``ker(I + D)``. The new input ``v`` acts as
    ``u = Q v`` and the new output is ``Q^H y``. The kernel inclusion implied by
    the witness ``X`` is verified first.

    Examples
    --------
    >>> s = DescriptorSystem(np.eye(1), 0.5, [[0.0, 0.5]], [[0.0], [0.5]], np.diag([-1.0, 0.0]))
    >>> r, Q, K = restrict_scattering(s, np.eye(1))
    >>> r.m, np.abs(K.ravel()).tolist()
    (1, [1.0, 0.0])
    """
    sys.require_valid()
    K = feedthrough_kernel(sys.D)
    m = sys.m
    if K.shape[1] == 0:
        return sys, np.eye(m), K
    res = check_kernel_inclusion(sys, X)
    if res > tol:
        raise KernelInclusionError(
            f"ker(I + D) is not contained in ker(XB) and ker(C^H) (residual {res:.3g}); "
            "X is not a scattering KYP solution")
    Q = null_space(herm(K), TOL_KERNEL, 1.0)
    if Q.shape[1] == 0:
        raise SingularFeedthrough(
            "I + D = 0: the restricted system has no inputs and is not an input/output system")
    Qh = herm(Q)
    out = sys.replace(B=sys.B @ Q, C=Qh @ sys.C, D=Qh @ sys.D @ Q,
                      meta={**sys.meta, "restricted_inputs": int(Q.shape[1])})
    return out, Q, K


def _auto_witness(sys):
    """Positive definite scattering KYP witness on the full state, or ``None``."""
    from .ph import is_ph
    from .pencil import reduce_system

    v = is_ph(sys)
    if not v.is_ph:
        return None
    if sys.is_standard:
        return v.certificate.X
    return reduce_system(sys).lift_storage(v.certificate.X)


def external_cayley(sys, direction, X=None, restrict=True):
    """External Cayley transform of a discrete-time system.

    ``imp->scat`` maps an impedance system (input ``e``, output ``f``) to a
    scattering system (input ``u``, output ``y``); ``scat->imp`` is the same
    formula applied the other way. When ``I + D`` is singular in the
    ``scat->imp`` direction and ``restrict`` is set, the inputs are first
    restricted to ``ker(I + D)^perp`` using the witness ``X`` (computed when
    not supplied).

    Examples
    --------
    >>> r = external_cayley(DescriptorSystem(1, 0.5, 0, 0, 0), "imp->scat")
    >>> r.transformed.D
    array([[1.]])
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    sys.require_valid()
    if sys.time_domain != "discrete":
        raise TimeDomainMismatch("the external Cayley transform is applied to discrete-time systems")
    K = feedthrough_kernel(sys.D)
    if K.shape[1] == 0:
        out, c = _cayley_blocks(sys)
        return ExternalCayleyResult(out, direction, False, K, c, np.eye(sys.m))
    if direction == "imp->scat" or not restrict:
        raise SingularFeedthrough(
            f"I + D has a {K.shape[1]}-dimensional kernel; the {direction} transform has no "
            "input/output state-space form")
    if X is None:
        X = _auto_witness(sys)
        if X is None:
            raise SingularFeedthrough(
                "I + D is singular and no positive definite scattering KYP witness exists "
                "to justify restricting the inputs")
    rs, Q, K = restrict_scattering(sys, X)
    out, c = _cayley_blocks(rs)
    return ExternalCayleyResult(out, direction, True, K, c, Q)


def map_signals(inp, out):
    """Map the (input, output) samples of the source system to those of its Cayley image.

    Both directions use ``((inp + out)/sqrt 2, (inp - out)/sqrt 2)``; the map
    is an involution.
    """
    inp = np.asarray(inp)
    out = np.asarray(out)
    return (inp + out) / _SQ2, (inp - out) / _SQ2


@dataclass(frozen=True)
class InternalCayleyResult:
    discrete: DescriptorSystem
    alpha: complex
    source_transfer_at_alpha: np.ndarray
    cond: float
    reduced: object = None


def _standard_continuous(csys):
    if csys.time_domain != "continuous":
        raise TimeDomainMismatch("internal Cayley needs a continuous-time system")
    csys.require_valid()
    if csys.is_standard:
        return csys.A, csys.B, csys.C, csys.D, None
    from .pencil import reduce_system

    red = reduce_system(csys)
    return red.A, red.B, red.C, red.D, red


def _resolvent(A, alpha):
    n = A.shape[0]
    R = alpha * np.eye(n) - A
    c = cond(R) if n else 1.0
    if not np.isfinite(c) or c > COND_SINGULAR:
        raise ResolventViolation(f"alpha = {alpha} is (numerically) an eigenvalue of A (condition {c:.3g})")
    return R, c


def _check_alpha(alpha):
    alpha = complex(alpha)
    if not alpha.real > 0:
        raise ValueError(f"alpha must have positive real part, got {alpha}")
    return alpha


def internal_cayley(csys, alpha):
    """Tustin discretization ``(A, B, C, D) -> (bA, bB, bC, T(alpha))``.

    A continuous descriptor system of index at most one is first reduced to
    a standard system; the result then lives on the reduced state.

    Examples
    --------
    >>> c = DescriptorSystem(1, -1, 0, 0, 0, time_domain="continuous")
    >>> internal_cayley(c, 2).discrete.A
    array([[0.33333333]])
    """
    alpha = _check_alpha(alpha)
    A, B, C, D, red = _standard_continuous(csys)
    R, c = _resolvent(A, alpha)
    s = np.sqrt(2.0 * alpha.real)
    RiA = np.linalg.solve(R, np.conj(alpha) * np.eye(A.shape[0]) + A) if A.size else A
    RiB = np.linalg.solve(R, B) if A.size else B
    CRi = np.linalg.solve(R.T, C.T).T if A.size else C
    T = C @ RiB + D
    bA, bB, bC = RiA, s * RiB, s * CRi
    if alpha.imag == 0 and not any(np.iscomplexobj(M) for M in (A, B, C, D)):
        bA, bB, bC, T = (np.real(M) for M in (bA, bB, bC, T))
    disc = DescriptorSystem.standard(bA, bB, bC, T, "discrete")
    return InternalCayleyResult(disc, alpha, T, c, red)


def tustin_inputs(u, alpha):
    """Discrete inputs ``(u(t_{k+1}) + u(t_k)) / sqrt(2 alpha)`` from samples ``u(t_0..t_K)``."""
    u = np.asarray(u)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    if u.shape[0] < 2:
        raise DimensionError("need at least two input samples")
    alpha = complex(alpha)
    scale = np.sqrt(2.0 * alpha.real) if alpha.imag == 0 else np.sqrt(2.0 * alpha)
    return (u[1:] + u[:-1]) / scale


def verify_congruence_identity(csys, X, alpha):
    """Frobenius residual of ``T^H M(X) T = N(X)`` linking the continuous and discrete LMIs.

    ``M(X) = [[-A^H X - X A, -X B], [-B^H X, 0]]`` and ``N(X)`` is the discrete
    counterpart built from the internal Cayley blocks.
    """
    alpha = _check_alpha(alpha)
    A, B, _, _, _ = _standard_continuous(csys)
    n, m = B.shape
    X = np.atleast_2d(np.asarray(X))
    if X.shape != (n, n):
        raise DimensionError(f"X must be {n}x{n}")
    R, _ = _resolvent(A, alpha)
    Ri = np.linalg.inv(R)
    s = np.sqrt(2.0 * alpha.real)
    T = np.block([[s * Ri, Ri @ B], [np.zeros((m, n)), np.eye(m)]])
    Mx = np.block([[-herm(A) @ X - X @ A, -X @ B], [-herm(B) @ X, np.zeros((m, m))]])
    bA = Ri @ (np.conj(alpha) * np.eye(n) + A)
    bB = s * Ri @ B
    Nx = np.block([[-herm(bA) @ X @ bA + X, -herm(bA) @ X @ bB],
                   [-herm(bB) @ X @ bA, -herm(bB) @ X @ bB]])
    return float(np.linalg.norm(herm(T) @ Mx @ T - Nx))
