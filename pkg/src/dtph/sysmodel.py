"""Descriptor-system data model, validation, rank tests and the JSON file format."""
import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DimensionError, InvalidMatrix
from .matcore import herm, null_space

KNOWN_KEYS = {"E", "A", "B", "C", "D", "time_domain", "meta"}
TIME_DOMAINS = ("discrete", "continuous")


def _as2d(m, name):
    a = np.asarray(m)
    if a.dtype == object:
        raise InvalidMatrix(f"{name} is ragged or not numeric")
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1) if name in ("C",) else a.reshape(-1, 1)
    if a.ndim != 2:
        raise InvalidMatrix(f"{name} must be two-dimensional, got shape {a.shape}")
    if np.iscomplexobj(a):
        a = a.astype(np.complex128)
    else:
        try:
            a = a.astype(np.float64)
        except (TypeError, ValueError) as exc:
            raise InvalidMatrix(f"{name} is not numeric") from exc
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DescriptorSystem:
    """The quintuple ``(E, A, B, C, D)`` of ``E x+ = A x + B u, y = C x + D u``.

    ``x+`` is the shifted state in discrete time and the derivative in
    continuous time. Inputs and outputs have the same dimension ``m``.
    One-dimensional arguments are read as columns, except ``C`` which is
    read as a row.
    """

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    time_domain: str = "discrete"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in "EABCD":
            object.__setattr__(self, name, _as2d(getattr(self, name), name))
        if self.time_domain not in TIME_DOMAINS:
            raise ValueError(f"time_domain must be one of {TIME_DOMAINS}")

    @classmethod
    def standard(cls, A, B, C, D, time_domain="discrete"):
        """System with ``E = I``."""
        A = _as2d(A, "A")
        return cls(np.eye(A.shape[0]), A, B, C, D, time_domain)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.D.shape[0]

    @property
    def is_complex(self):
        return any(np.iscomplexobj(getattr(self, k)) for k in "EABCD")

    @property
    def is_standard(self):
        return self.E.shape == self.A.shape and np.array_equal(self.E, np.eye(self.n))

    def matrices(self):
        return self.E, self.A, self.B, self.C, self.D

    def replace(self, **kw):
        d = dict(E=self.E, A=self.A, B=self.B, C=self.C, D=self.D,
                 time_domain=self.time_domain, meta=dict(self.meta))
        d.update(kw)
        return DescriptorSystem(**d)

    def require_valid(self):
        rep = validate(self)
        if rep.dimension_errors:
            raise DimensionError("; ".join(rep.dimension_errors))
        if rep.nonfinite:
            raise InvalidMatrix("non-finite entries in " + ", ".join(rep.nonfinite))
        return self

    def content_hash(self):
        h = hashlib.sha256()
        h.update(self.time_domain.encode())
        for name in "EABCD":
            a = np.ascontiguousarray(getattr(self, name), dtype=np.complex128)
            h.update(f"{name}{a.shape}".encode())
            h.update(a.tobytes())
        return h.hexdigest()

    def to_dict(self):
        out = {k: _encode(getattr(self, k)) for k in "EABCD"}
        out["time_domain"] = self.time_domain
        meta = dict(self.meta)
        meta.setdefault("tool_version", __version__)
        out["meta"] = meta
        return out

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - KNOWN_KEYS
        if unknown:
            warnings.warn(f"ignoring unknown keys: {sorted(unknown)}", stacklevel=2)
        missing = [k for k in "ABCD" if k not in d]
        if missing:
            raise InvalidMatrix(f"missing keys: {missing}")
        mats = {k: _decode(d[k], k) for k in "ABCD"}
        A = mats["A"]
        E = _decode(d["E"], "E") if "E" in d else np.eye(A.shape[0])
        td = d.get("time_domain", "discrete")
        return cls(E, A, mats["B"], mats["C"], mats["D"], td, dict(d.get("meta", {})))


def _encode(a):
    if np.iscomplexobj(a):
        return [[[float(v.real), float(v.imag)] for v in row] for row in a]
    return [[float(v) for v in row] for row in a]


def _decode(obj, name):
    """Nested rows of numbers or ``[re, im]`` pairs to an array."""
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return np.array([[float(obj)]])
    if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
        raise InvalidMatrix(f"{name}: expected a list of rows")
    if not obj:
        return np.zeros((0, 0))
    rows = []
    cplx = False
    for i, row in enumerate(obj):
        vals = []
        for j, v in enumerate(row):
            if isinstance(v, list):
                if len(v) != 2 or not all(isinstance(t, (int, float)) for t in v):
                    raise InvalidMatrix(f"{name}[{i}][{j}]: expected a number or [re, im]")
                vals.append(complex(v[0], v[1]))
                cplx = True
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                vals.append(v)
            else:
                raise InvalidMatrix(f"{name}[{i}][{j}]: expected a number or [re, im]")
        rows.append(vals)
    if len({len(r) for r in rows}) != 1:
        raise InvalidMatrix(f"{name}: rows have different lengths")
    return np.array(rows, dtype=complex if cplx else float)


def load_system(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidMatrix(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InvalidMatrix(f"{path}: top level must be an object")
    return DescriptorSystem.from_dict(data)


def save_system(sys, path, **meta):
    d = sys.to_dict()
    d["meta"].update(meta)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(d, fh, indent=1)
        fh.write("\n")


@dataclass
class ValidationReport:
    dimension_errors: list
    nonfinite: list
    zero_E: bool
    assumption_violations: list

    @property
    def valid(self):
        return not (self.dimension_errors or self.nonfinite)


def validate(sys, check_assumption=False):
    """Report dimension mismatches, non-finite entries and a zero ``E``.

    With ``check_assumption`` a zero ``E`` is listed as a violation of the
    standing assumption (regular, ``E != 0``, index at most one).
    """
    E, A, B, C, D = sys.matrices()
    n = A.shape[0]
    m = D.shape[0]
    errs = []
    if A.shape != (n, n):
        errs.append(f"A must be square, got {A.shape}")
    if E.shape != (n, n):
        errs.append(f"E must be {n}x{n}, got {E.shape}")
    if D.shape != (m, m):
        errs.append(f"D must be square, got {D.shape}")
    if B.shape != (n, m):
        errs.append(f"B must be {n}x{m}, got {B.shape}")
    if C.shape != (m, n):
        errs.append(f"C must be {m}x{n}, got {C.shape}")
    nonfinite = [k for k, v in zip("EABCD", (E, A, B, C, D)) if not np.all(np.isfinite(v))]
    zero_E = not np.any(E)
    viol = []
    if check_assumption and zero_E and n > 0:
        viol.append("E = 0")
    return ValidationReport(errs, nonfinite, zero_E, viol)


@dataclass(frozen=True)
class RankTestReport:
    property: str
    holds: bool
    witnesses: list
    marginal: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "property": self.property,
            "holds": self.holds,
            "witnesses": [[_jsonable(lam), r] for lam, r in self.witnesses],
            "marginal": [_jsonable(lam) for lam in self.marginal],
            "notes": list(self.notes),
        }


def _jsonable(z):
    if z is None:
        return None
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _rank_with_margin(M, n, tol):
    """Return (rank, marginal) where marginal flags sigma_n in [tol, 10 tol]."""
    if n == 0:
        return 0, False
    s = np.linalg.svd(M, compute_uv=False)
    scale = max(1.0, s[0])
    r = int(np.sum(s > tol * scale))
    sn = s[n - 1] if s.size >= n else 0.0
    return r, bool(tol * scale < sn <= 10 * tol * scale)


def _hautus(sys, dual, tol):
    from .pencil import analyze_pencil

    sys.require_valid()
    E, A, B, C, _ = sys.matrices()
    if dual:
        E, A, B = herm(E), herm(A), herm(C)
    pa = analyze_pencil(sys.E, sys.A, tol_rank=tol, require_regular=True)
    points = [np.conj(lam) if dual else lam for lam in pa.distinct_spectrum]
    points.append(pa.resolvent_point)
    n = sys.n
    witnesses, marginal = [], []
    holds = True
    for lam in points:
        r, marg = _rank_with_margin(np.hstack([lam * E - A, B]), n, tol)
        witnesses.append((complex(lam), r))
        if marg:
            marginal.append(complex(lam))
        holds &= r == n
    return witnesses, marginal, holds


def check_c1(sys, tol_rank=1e-10):
    """``rank [lam E - A, B] = n`` at every finite eigenvalue (plus one resolvent point)."""
    w, marg, ok = _hautus(sys, False, tol_rank)
    return RankTestReport("C1", ok, w, marg)


def check_o1(sys, tol_rank=1e-10):
    """Dual of :func:`check_c1` using ``[lam E^H - A^H, C^H]``."""
    w, marg, ok = _hautus(sys, True, tol_rank)
    return RankTestReport("O1", ok, w, marg)


def _impulse_test(E, A, B, n, tol):
    S = null_space(E, tol) if n else np.zeros((0, 0))
    M = np.hstack([E, A @ S, B])
    r, marg = _rank_with_margin(M, n, tol)
    return r, marg


def _impulse_report(prop, sys, E, A, B, tol_rank):
    from .pencil import analyze_pencil

    sys.require_valid()
    notes = []
    if not analyze_pencil(sys.E, sys.A, tol_rank=tol_rank).regular:
        notes.append("pencil is singular; rank test evaluated anyway")
    r, marg = _impulse_test(E, A, B, sys.n, tol_rank)
    return RankTestReport(prop, r == sys.n, [(None, r)], [None] if marg else [], notes)


def check_c2(sys, tol_rank=1e-10):
    """``rank [E, A S_inf(E), B] = n`` with ``S_inf(E)`` a kernel basis of ``E``.

    The test is a single rank evaluation and does not need regularity; for a
    singular pencil a note is attached instead of raising.
    """
    return _impulse_report("C2", sys, sys.E, sys.A, sys.B, tol_rank)


def check_o2(sys, tol_rank=1e-10):
    """``rank [E^H, A^H T_inf(E), C^H] = n`` with ``T_inf(E)`` a kernel basis of ``E^H``."""
    return _impulse_report("O2", sys, herm(sys.E), herm(sys.A), herm(sys.C), tol_rank)


def kalman_rank(A, B):
    """Rank of ``[B, AB, ..., A^{n-1} B]``."""
    A = np.asarray(A)
    n = A.shape[0]
    if n == 0:
        return 0
    blocks = [np.asarray(B)]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    K = np.hstack(blocks)
    s = np.linalg.svd(K, compute_uv=False)
    return int(np.sum(s > 1e-10 * max(1.0, s[0])))
