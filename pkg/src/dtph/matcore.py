"""Dense matrix kernels shared by every analysis module.

Factorizations with mature LAPACK implementations (SVD, Hermitian eigen,
LU solve) are taken from numpy. The non-symmetric eigensolver is our own
Hessenberg reduction followed by shifted QR, compiled through numba.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidMatrix, NumericalFailure, SingularMatrix

TOL_RANK = 1e-10
COND_SINGULAR = 1e13
_MAX_SWEEPS = 60


def asmatrix(m, name="matrix", square=False):
    """Return ``m`` as a finite 2-D float64 or complex128 array."""
    a = np.asarray(m)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise InvalidMatrix(f"{name} must be two-dimensional, got shape {a.shape}")
    if np.iscomplexobj(a):
        a = a.astype(np.complex128)
        if not np.any(a.imag):
            a = a.real.copy()
    else:
        a = a.astype(np.float64)
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"{name} must be square, got shape {a.shape}")
    return a


def herm(m):
    """Conjugate transpose."""
    return np.conj(m).T


def symmetrize(m):
    return 0.5 * (m + herm(m))


def is_hermitian(m, rtol=1e-12):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.max(np.abs(m - herm(m)), initial=0.0) <= rtol * (1.0 + np.linalg.norm(m))


@dataclass(frozen=True)
class Svd:
    """``m = U @ diag(singular_values) @ V^H`` with descending singular values."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def rank(self, tol=TOL_RANK):
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.sum(s > tol * s[0]))

    def reconstruct(self):
        k = self.singular_values.size
        return (self.U[:, :k] * self.singular_values) @ herm(self.V[:, :k])


def svd(m):
    """Full singular value decomposition.

    Examples
    --------
    >>> svd([[0.0, 1.0], [0.0, 0.0]]).singular_values
    array([1., 0.])
    """
    a = asmatrix(m)
    if a.size == 0:
        return Svd(np.eye(a.shape[0], dtype=a.dtype), np.zeros(0), np.eye(a.shape[1], dtype=a.dtype))
    U, s, Vh = np.linalg.svd(a, full_matrices=True)
    return Svd(U, s, herm(Vh))


def rank(m, tol=TOL_RANK):
    return svd(m).rank(tol)


def null_space(m, tol=TOL_RANK, scale=None):
    """Orthonormal basis of the kernel of ``m``.

    Singular values at or below ``tol * scale`` count as zero, where ``scale``
    defaults to the largest singular value (or 1 for a zero matrix).
    """
    a = asmatrix(m)
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=a.dtype)
    d = svd(a)
    s = d.singular_values
    if scale is None:
        scale = s[0] if s.size and s[0] > 0 else 1.0
    r = int(np.sum(s > tol * scale))
    return d.V[:, r:]


def range_basis(m, tol=TOL_RANK, scale=None):
    """Orthonormal basis of the column space of ``m``."""
    a = asmatrix(m)
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=a.dtype)
    d = svd(a)
    s = d.singular_values
    if scale is None:
        scale = s[0] if s.size and s[0] > 0 else 1.0
    r = int(np.sum(s > tol * scale))
    return d.U[:, :r]


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kind: str
    matrix: np.ndarray = field(repr=False, default=None)

    def clusters(self, tol=1e-5):
        """Group numerically coincident eigenvalues.

        Returns a list of ``(mean, algebraic_multiplicity)``.
        """
        lam = np.asarray(self.eigenvalues)
        scale = 1.0 + (np.max(np.abs(lam)) if lam.size else 0.0)
        taken = np.zeros(lam.size, dtype=bool)
        out = []
        for i in np.argsort(-np.abs(lam), kind="stable"):
            if taken[i]:
                continue
            members = (~taken) & (np.abs(lam - lam[i]) <= tol * scale)
            taken |= members
            out.append((complex(np.mean(lam[members])), int(members.sum())))
        return out

    def geometric_multiplicity(self, lam, tol=1e-9):
        n = self.matrix.shape[0]
        shifted = self.matrix - lam * np.eye(n)
        scale = 1.0 + np.linalg.norm(self.matrix, 2)
        return n - int(np.sum(np.linalg.svd(shifted, compute_uv=False) > tol * scale))

    def is_semisimple(self, lam, tol=1e-9, cluster_tol=1e-5):
        """True when the algebraic and geometric multiplicity of ``lam`` agree."""
        for mu, alg in self.clusters(cluster_tol):
            if abs(mu - lam) <= cluster_tol * (1.0 + abs(lam)):
                return self.geometric_multiplicity(mu, tol) == alg
        raise ValueError(f"{lam} is not an eigenvalue")


def eig_hermitian(m):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    a = asmatrix(m, square=True)
    if not is_hermitian(a):
        raise InvalidMatrix("matrix is not Hermitian")
    w, v = np.linalg.eigh(symmetrize(a))
    return EigenDecomposition(w, v, "hermitian", a)


def eigvalsh(m):
    """Ascending eigenvalues of the Hermitian part of ``m`` (no validation)."""
    if m.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(symmetrize(m))


def eigmin(m):
    w = eigvalsh(np.asarray(m))
    return float(w[0]) if w.size else np.inf


def eigvals_general(m):
    """Eigenvalues of a square matrix via Hessenberg reduction and shifted QR."""
    a = asmatrix(m, square=True)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    h = _kernels.hessenberg(np.ascontiguousarray(a))
    if np.iscomplexobj(h):
        w, ok = _kernels.qr_complex(h, _MAX_SWEEPS)
    else:
        wr, wi, ok = _kernels.hqr_real(h, _MAX_SWEEPS)
        w = wr + 1j * wi
    if not ok:
        raise NumericalFailure(f"QR iteration did not converge in {_MAX_SWEEPS} sweeps per eigenvalue")
    if not np.any(np.iscomplex(w)) and not np.iscomplexobj(a):
        w = w.real
    return w[np.lexsort((np.imag(w), np.real(w)))]


def eig_general(m):
    """Eigenvalues and (unit) eigenvectors of a square matrix.

    Each eigenvector is the right singular vector of ``m - lam I`` for the
    smallest singular value, so defective eigenvalues still get a valid vector.

    Examples
    --------
    >>> eig_general([[1.0, 1.0], [0.0, 1.0]]).is_semisimple(1.0)
    False
    """
    a = asmatrix(m, square=True)
    w = eigvals_general(a)
    n = a.shape[0]
    vecs = np.zeros((n, n), dtype=np.result_type(a.dtype, w.dtype))
    for j, lam in enumerate(w):
        _, _, vh = np.linalg.svd(a - lam * np.eye(n))
        vecs[:, j] = np.conj(vh[-1])
    return EigenDecomposition(w, vecs, "general", a)


def spectral_norm(m):
    a = asmatrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def cond(a):
    a = asmatrix(a, square=True)
    if a.shape[0] == 0:
        return 1.0
    s = np.linalg.svd(a, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else np.inf


def solve(a, b, return_cond=False):
    """Solve ``a x = b`` for square ``a``.

    Raises :class:`SingularMatrix` (carrying the condition estimate) when the
    2-norm condition number of ``a`` exceeds ``1e13``.
    """
    a = asmatrix(a, "a", square=True)
    b = np.asarray(b)
    vector = b.ndim == 1
    b2 = asmatrix(b, "b")
    if b2.shape[0] != a.shape[0]:
        raise InvalidMatrix(f"shape mismatch: a is {a.shape}, b is {b2.shape}")
    k = cond(a)
    if not k <= COND_SINGULAR:
        raise SingularMatrix(f"matrix is singular to working precision (cond = {k:.3g})", k)
    x = np.linalg.solve(a, b2) if a.shape[0] else np.zeros_like(b2)
    if vector:
        x = x[:, 0]
    return (x, k) if return_cond else x


def matrix_sqrt_psd(m):
    """Hermitian PSD square root; tiny negative eigenvalues are clipped."""
    a = asmatrix(m, square=True)
    if not is_hermitian(a, 1e-10):
        raise InvalidMatrix("matrix is not Hermitian")
    w, v = np.linalg.eigh(symmetrize(a))
    floor = -1e-12 * max(1.0, np.abs(w).max(initial=0.0))
    if w.size and w[0] < floor:
        raise InvalidMatrix(f"matrix is not positive semidefinite (eigmin = {w[0]:.3g})")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ herm(v)
    return symmetrize(root)


def inv_sqrt_pd(m):
    """Inverse square root of a Hermitian positive definite matrix."""
    a = symmetrize(asmatrix(m, square=True))
    w, v = np.linalg.eigh(a)
    if w.size and w[0] <= 0:
        raise InvalidMatrix("matrix is not positive definite")
    return symmetrize((v / np.sqrt(w)) @ herm(v))
