"""Random system generators shared by the test modules."""
import numpy as np

from dtph import DescriptorSystem


def rmat(rng, shape, cplx=False):
    M = rng.standard_normal(shape)
    if cplx:
        M = M + 1j * rng.standard_normal(shape)
    return M


def rherm(rng, n, cplx=False):
    M = rmat(rng, (n, n), cplx)
    return 0.5 * (M + M.conj().T)


def rpd(rng, n, cplx=False, floor=0.1):
    M = rmat(rng, (n, n), cplx)
    return M @ M.conj().T + floor * np.eye(n)


def unitary(rng, n, cplx=False):
    q, r = np.linalg.qr(rmat(rng, (n, n), cplx))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def with_radius(rng, A, rho):
    r = np.max(np.abs(np.linalg.eigvals(A)))
    return A * (rho / r)


def random_standard(rng, n, m, cplx=False, scale=0.4, time_domain="discrete"):
    return DescriptorSystem.standard(rmat(rng, (n, n), cplx) * scale / np.sqrt(n), rmat(rng, (n, m), cplx) * scale,
                                     rmat(rng, (m, n), cplx) * scale, rmat(rng, (m, m), cplx) * scale,
                                     time_domain)


def embed_index_one(rng, sys, n2=2):
    """Index-one descriptor system whose reduction is ``sys`` (up to a unitary state change).

    The algebraic block is ``x2 = K x1 + L u`` and the output is corrected so
    the input/output behavior is unchanged.
    """
    n1, m = sys.n, sys.m
    cplx = sys.is_complex
    K = rmat(rng, (n2, n1), cplx)
    L = rmat(rng, (n2, m), cplx)
    G = rmat(rng, (m, n2), cplx)
    H = rmat(rng, (n1, n2), cplx) * 0.3
    n = n1 + n2
    E = np.zeros((n, n), complex if cplx else float)
    E[:n1, :n1] = np.eye(n1)
    # row 1: x1+ = A x1 + H (x2 - K x1 - L u) + B u ; row 2: 0 = K x1 + L u - x2
    A = np.block([[sys.A - H @ K, H], [K, -np.eye(n2)]])
    B = np.vstack([sys.B - H @ L, L])
    C = np.hstack([sys.C - G @ K, G])
    D = sys.D - G @ L
    P = unitary(rng, n, cplx)
    Q = unitary(rng, n, cplx)
    return DescriptorSystem(P @ E @ Q, P @ A @ Q, P @ B, C @ Q, D, sys.time_domain)


def contraction_system(rng, n, m, cplx=False, norm=0.9, X=None):
    """Standard system with X-weighted norm ``norm``; returns ``(sys, X)``."""
    K = rmat(rng, (n + m, n + m), cplx)
    K *= norm / np.linalg.norm(K, 2)
    if X is None:
        X = rpd(rng, n, cplx, floor=0.5)
    w, V = np.linalg.eigh(X)
    Xh = (V * np.sqrt(w)) @ V.conj().T
    Xhi = (V / np.sqrt(w)) @ V.conj().T
    A = Xhi @ K[:n, :n] @ Xh
    B = Xhi @ K[:n, n:]
    C = K[n:, :n] @ Xh
    D = K[n:, n:]
    return DescriptorSystem.standard(A, B, C, D), X
