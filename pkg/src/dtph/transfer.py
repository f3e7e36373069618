"""Transfer functions: evaluation, properness, sampled realness and structural identities."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalFailure, PoleProximity
from .matcore import eigvalsh, herm
from .pencil import analyze_pencil, weierstrass_oracle

POLE_TOL = 1e-11
DEFAULT_RADII = (1.01, 1.1, 2.0, 10.0)
DEFAULT_ANGLES = 32
TOL_REAL = 1e-9
GRID_CAVEAT = "sampled on a finite grid outside the unit disc: evidence, not a proof"
REFINE_STEPS = 20
REFINE_RADIUS = 1.0 + 1e-6  # margins of functions analytic on |z| > 1 are smallest at the boundary
_GOLD = (np.sqrt(5.0) - 1) / 2


def _evaluate(E, A, B, C, D, z, pole_tol=POLE_TOL):
    """``(T(z), residual)`` from a right solve and an independent left solve."""
    n = A.shape[0]
    if n == 0:
        return D.astype(complex), 0.0
    M = z * E - A
    s = np.linalg.svd(M, compute_uv=False)
    scale = max(1.0, s[0])
    if s[-1] <= pole_tol * scale:
        raise PoleProximity(f"z = {z} is at or near a finite eigenvalue", float(s[-1]))
    right = C @ np.linalg.solve(M, B) + D
    left = herm(np.linalg.solve(herm(M), herm(C))) @ B + D
    res = float(np.linalg.norm(right - left))
    bound = 1e-9 * (1 + np.linalg.norm(right)) * (s[0] / s[-1]) / 1e3
    if res > max(bound, 1e-9 * (1 + np.linalg.norm(right))):
        raise NumericalFailure(f"transfer evaluation paths disagree at z = {z} (residual {res:.3g})")
    return right, res


class TransferFunction:
    """``T(z) = C (z E - A)^{-1} B + D`` with a per-instance evaluation cache.

    Instances are not thread-safe. :func:`check_realness` evaluates grid
    points in worker threads and merges them into the cache afterwards.

    Examples
    --------
    >>> from dtph import DescriptorSystem
    >>> TransferFunction(DescriptorSystem(1, 0.5, 0, 1, 1))(3.0)
    array([[1.+0.j]])
    """

    def __init__(self, sys, pole_tol=POLE_TOL):
        sys.require_valid()
        self.sys = sys
        self.pole_tol = pole_tol
        self._cache = {}
        self._properness = None

    def evaluate(self, z):
        z = complex(z)
        hit = self._cache.get(z)
        if hit is None:
            val, res = _evaluate(*self.sys.matrices(), z, self.pole_tol)
            val.setflags(write=False)
            hit = self._cache[z] = (val, res)
        return hit[0]

    __call__ = evaluate

    def residual(self, z):
        """Disagreement of the two solve paths at a cached (or fresh) point."""
        self.evaluate(z)
        return self._cache[complex(z)][1]

    def properness(self):
        if self._properness is None:
            self._properness = properness(self)
        return self._properness

    @property
    def cache(self):
        return dict(self._cache)


def _as_tf(tf):
    return tf if isinstance(tf, TransferFunction) else TransferFunction(tf)


@dataclass
class PropernessReport:
    proper: bool
    index: int
    markov_norms: list
    growth: list
    notes: list = field(default_factory=list)


def properness(tf, tol=1e-9):
    """Structural properness test cross-checked by growth sampling at ``|z| = 10^k``.

    In Weierstrass coordinates the polynomial part of ``T`` is
    ``-sum_i z^i C2 N^i B2``; the function is proper iff every term with
    ``i >= 1`` vanishes.
    """
    tf = _as_tf(tf)
    sys = tf.sys
    pa = analyze_pencil(sys.E, sys.A, require_regular=True)
    notes = []
    markov = []
    if pa.index <= 1:
        structural = True
    else:
        S, T, J, N = weierstrass_oracle(sys.E, sys.A)
        r = J.shape[0]
        B2 = (S @ sys.B)[r:]
        C2 = (sys.C @ T)[:, r:]
        scale = (1 + np.linalg.norm(B2)) * (1 + np.linalg.norm(C2))
        P = N.copy()
        for _ in range(1, pa.index):
            markov.append(float(np.linalg.norm(C2 @ P @ B2)))
            P = P @ N
        structural = all(v <= tol * scale for v in markov)
    growth = []
    rng = np.random.default_rng(7)
    phase = np.exp(2j * np.pi * rng.random())
    for k in range(2, 7):
        try:
            growth.append(float(np.linalg.norm(_evaluate(*sys.matrices(), phase * 10.0 ** k)[0])))
        except (PoleProximity, NumericalFailure):
            growth.append(np.nan)
    g = np.asarray(growth)
    ok = np.isfinite(g)
    sampled = not (ok.sum() >= 2 and g[ok][-1] > 100 * (1 + g[ok][0]))
    if sampled != structural:
        notes.append("growth sampling disagrees with the structural test; structural verdict kept")
    return PropernessReport(structural, pa.index, markov, growth, notes)


def is_proper(tf, tol=1e-9):
    """Whether the transfer function is proper (bounded as ``z -> infinity``).

    Examples
    --------
    >>> from dtph import DescriptorSystem
    >>> is_proper(DescriptorSystem([[0, 1], [0, 0]], np.eye(2), [0, 1], [1, 0], 0))
    False
    """
    return properness(tf, tol).proper


@dataclass
class PoleCheck:
    eigenvalue: complex
    is_pole: bool
    unobservable_or_uncontrollable: bool


@dataclass
class RealnessReport:
    kind: str
    holds_on_grid: bool
    worst_point: complex
    margin: float
    proper: bool
    exterior_eigenvalues: list
    skipped_points: list
    notes: list = field(default_factory=list)

    def to_dict(self):
        wp = None if self.worst_point is None else [self.worst_point.real, self.worst_point.imag]
        return {
            "kind": self.kind, "holds_on_grid": self.holds_on_grid, "worst_point": wp,
            "margin": float(self.margin), "proper": self.proper,
            "exterior_poles": [[p.eigenvalue.real, p.eigenvalue.imag] for p in self.exterior_eigenvalues
                               if p.is_pole],
            "cancelled_exterior_eigenvalues": [[p.eigenvalue.real, p.eigenvalue.imag]
                                               for p in self.exterior_eigenvalues if not p.is_pole],
            "skipped_points": len(self.skipped_points), "notes": list(self.notes),
        }


def _realness_matrix(T, kind):
    if kind == "positive":
        return T + herm(T)
    return np.eye(T.shape[0]) - herm(T) @ T


def _pole_check(sys, lam, tol=1e-8):
    """Decide whether the finite eigenvalue ``lam`` is a pole of ``T``.

    Evaluates ``T`` at two distances from ``lam``; a pole shows growth. The
    Hautus rank deficiency (``C v = 0`` for an eigenvector, or its dual) is
    reported alongside.
    """
    E, A, B, C, D = sys.matrices()
    n = sys.n
    s_c = np.linalg.svd(np.hstack([lam * E - A, B]), compute_uv=False)
    s_o = np.linalg.svd(np.vstack([lam * E - A, C]), compute_uv=False)
    sc = max(1.0, s_c[0])
    hidden = bool(s_c[n - 1] <= 1e-8 * sc or s_o[n - 1] <= 1e-8 * sc)
    d = np.exp(0.7j) * max(1.0, abs(lam))
    vals = []
    for eps in (1e-4, 1e-6):
        try:
            vals.append(np.linalg.norm(_evaluate(E, A, B, C, D, lam + eps * d, 0.0)[0] - D))
        except (PoleProximity, NumericalFailure, np.linalg.LinAlgError):
            vals.append(np.inf)
    grows = vals[1] > 10 * vals[0] + tol * (1 + np.linalg.norm(D))
    return PoleCheck(complex(lam), bool(grows), hidden)


def grid_points(radii=DEFAULT_RADII, n_angles=DEFAULT_ANGLES):
    th = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    return [complex(r * np.exp(1j * t)) for r in radii for t in th]


def _grid_chunk(mats, pts):
    out = []
    for z in pts:
        try:
            out.append((z, _evaluate(*mats, z)))
        except PoleProximity:
            out.append((z, None))
    return out


def _grid_values(tf, pts, jobs):
    """``T`` at every point (``None`` next to eigenvalues); results land in the cache of ``tf``."""
    todo = [z for z in pts if complex(z) not in tf._cache]
    mats = tf.sys.matrices()
    if jobs and jobs > 1 and len(todo) > 1:
        chunks = [todo[i::jobs] for i in range(jobs)]
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(lambda c: _grid_chunk(mats, c), chunks))
        fresh = [v for p in parts for v in p]
    else:
        fresh = _grid_chunk(mats, todo)
    poles = set()
    for z, hit in fresh:
        if hit is None:
            poles.add(complex(z))
        else:
            hit[0].setflags(write=False)
            tf._cache[complex(z)] = hit
    return [(z, None if complex(z) in poles or complex(z) not in tf._cache else tf._cache[complex(z)][0])
            for z in pts]


def _margin(tf, kind, z):
    try:
        T = tf(z)
    except PoleProximity:
        return None
    M = _realness_matrix(T, kind)
    return float(eigvalsh(0.5 * (M + herm(M)))[0])


def _refine(tf, kind, radius, seeds, half_width):
    """Golden-section search for the smallest margin in angle windows on the circle ``|z| = radius``."""
    out = []
    for th in seeds:
        def f(t):
            v = _margin(tf, kind, radius * np.exp(1j * t))
            return np.inf if v is None else v

        a, b = th - half_width, th + half_width
        c, d = b - _GOLD * (b - a), a + _GOLD * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(REFINE_STEPS):
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - _GOLD * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLD * (b - a)
                fd = f(d)
        t, v = (c, fc) if fc <= fd else (d, fd)
        if np.isfinite(v):
            out.append((complex(radius * np.exp(1j * t)), v))
    return out


def check_realness(tf, kind, radii=DEFAULT_RADII, n_angles=DEFAULT_ANGLES, points=None, jobs=1,
                   tol=TOL_REAL, refine=True):
    """Sampled positive or bounded realness on ``|z| > 1``.

    Checks every finite eigenvalue outside the closed unit disc for being a
    genuine (uncancelled) pole, then evaluates the realness matrix on the grid.
    An improper transfer function never counts as bounded real. Unless
    explicit ``points`` are given (or ``refine`` is off), the margin is then
    minimized locally just outside the unit circle, in angle windows around
    the worst points of the innermost ring and around the arguments of the
    finite eigenvalues, where narrow resonance peaks hide between grid angles.

    Examples
    --------
    >>> from dtph import DescriptorSystem
    >>> check_realness(DescriptorSystem(1, 0.5, 0, 1, 1), "bounded").holds_on_grid
    True
    """
    if kind not in ("positive", "bounded"):
        raise ValueError("kind must be 'positive' or 'bounded'")
    tf = _as_tf(tf)
    sys = tf.sys
    notes = [GRID_CAVEAT]
    pa = analyze_pencil(sys.E, sys.A, require_regular=True)
    prop = tf.properness()
    notes.extend(prop.notes)
    checks = [_pole_check(sys, lam) for lam in pa.distinct_spectrum if abs(lam) > 1 + 1e-9]
    poles = [c for c in checks if c.is_pole]
    pts = list(points) if points is not None else grid_points(radii, n_angles)
    if any(abs(z) <= 1 for z in pts):
        raise DimensionError("realness grid points must satisfy |z| > 1")
    vals = []
    for z, T in _grid_values(tf, pts, jobs):
        if T is None:
            vals.append((z, None))
            continue
        M = _realness_matrix(T, kind)
        vals.append((z, float(eigvalsh(0.5 * (M + herm(M)))[0])))
    skipped = [z for z, v in vals if v is None]
    good = [(z, v) for z, v in vals if v is not None]
    if refine and points is None and good:
        r0 = min(radii)
        ring = sorted((zv for zv in good if abs(abs(zv[0]) - r0) < 1e-12), key=lambda zv: zv[1])
        seeds = [float(np.angle(z)) for z, _ in ring[:3]]
        seeds += [float(np.angle(lam)) for lam in pa.distinct_spectrum if abs(lam) > 1e-12]
        found = _refine(tf, kind, REFINE_RADIUS, seeds, np.pi / n_angles)
        good += found
        if found:
            notes.append(f"margin refined locally in {len(found)} angle window(s) on |z| = {REFINE_RADIUS:g}")
    worst, margin = (min(good, key=lambda zv: zv[1]) if good else (None, np.inf))
    holds = margin >= -tol
    if poles:
        holds = False
        notes.append(f"{len(poles)} uncancelled pole(s) outside the unit disc")
    if kind == "bounded" and not prop.proper:
        holds = False
        notes.append("improper transfer function: unbounded as z -> infinity")
    elif not prop.proper:
        notes.append("improper transfer function: positive realness judged on the grid only")
    if skipped:
        notes.append(f"{len(skipped)} grid point(s) skipped next to eigenvalues")
    return RealnessReport(kind, bool(holds), worst, float(margin), prop.proper, checks, skipped, notes)


def verify_kyp_resolvent_identity(sys, X, z):
    """Difference norm of the two sides of the resolvent identity behind the KYP lemma.

    Left: ``[G; I]^H [[-A^H X A + E^H X E, -A^H X B], [-B^H X A, -B^H X B]] [G; I]``
    with ``G = (z E - A)^{-1} B``. Right: ``(1 - |z|^2) G^H E^H X E G``.
    """
    E, A, B, _, _ = sys.matrices()
    n, m = B.shape
    X = np.atleast_2d(np.asarray(X))
    if X.shape != (n, n):
        raise DimensionError(f"X must be {n}x{n}")
    M = z * E - A
    s = np.linalg.svd(M, compute_uv=False) if n else np.ones(1)
    if n and s[-1] <= POLE_TOL * max(1.0, s[0]):
        raise PoleProximity(f"z = {z} is not in the resolvent set", float(s[-1]))
    G = np.linalg.solve(M, B) if n else np.zeros((0, m))
    Ah, Eh, Bh = herm(A), herm(E), herm(B)
    W = np.block([[-Ah @ X @ A + Eh @ X @ E, -Ah @ X @ B], [-Bh @ X @ A, -Bh @ X @ B]])
    v = np.vstack([G, np.eye(m)])
    lhs = herm(v) @ W @ v
    rhs = (1 - abs(z) ** 2) * herm(G) @ Eh @ X @ E @ G
    return float(np.linalg.norm(lhs - rhs))


def verify_moebius_relation(csys, alpha, z):
    """Difference norm of ``Td(z)`` and ``T((alpha z - conj(alpha)) / (z + 1))``.

    ``Td`` is the transfer function of the internal Cayley image of ``csys``.
    """
    from .cayley import internal_cayley

    z = complex(z)
    if z == -1:
        raise DimensionError("z = -1 is mapped to infinity")
    alpha = complex(alpha)
    disc = internal_cayley(csys, alpha).discrete
    left = _evaluate(*disc.matrices(), z)[0]
    s = (alpha * z - np.conj(alpha)) / (z + 1)
    right = _evaluate(*csys.matrices(), s)[0]
    return float(np.linalg.norm(left - right))
