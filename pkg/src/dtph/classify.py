"""Classification report: every structural and passivity verdict plus the implication audit."""
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DimensionError, IndexTooHigh
from .kyp import TOL_LMI, TOL_STRICT, build_lmi, check_passivity, solve_feasibility
from .pencil import analyze_pencil
from .ph import classify_stability, is_ph
from .sim import SupplyRate, audit_dissipation, simulate
from .sysmodel import check_c1, check_c2, check_o1, check_o2
from .transfer import DEFAULT_ANGLES, DEFAULT_RADII, TransferFunction, check_realness

SCHEMA_VERSION = 1
PROPERTIES = ("regular", "index", "completely_causal", "C1", "C2", "O1", "O2", "stable",
              "asymptotically_stable", "d-iKYP", "d-sKYP", "d-iPa", "d-sPa", "d-PR", "d-BR", "d-spH")

# (premise, conclusion, colour, side condition); blue edges hold unconditionally
EDGES = (
    ("d-spH", "d-sKYP", "blue", None),
    ("d-sKYP", "d-sPa", "blue", None),
    ("d-sPa", "d-sKYP", "blue", None),
    ("d-sPa", "d-BR", "blue", None),
    ("d-iKYP", "d-iPa", "blue", None),
    ("d-iPa", "d-iKYP", "blue", None),
    ("d-iPa", "d-PR", "blue", None),
    ("d-spH", "stable", "blue", None),
    ("d-sKYP", "d-spH", "black", ("O1",)),
    ("d-BR", "d-sPa", "black", ("C1",)),
    ("d-PR", "d-iPa", "black", ("C1",)),
    ("d-BR", "d-spH", "black", ("C1", "O1")),
)


@dataclass
class Edge:
    premise: str
    conclusion: str
    colour: str
    condition: tuple
    status: str  # holds | vacuous | violated | condition-unmet | counterexample | undecided | assumption-unmet

    def to_dict(self):
        return {"premise": self.premise, "conclusion": self.conclusion, "colour": self.colour,
                "condition": list(self.condition or ()), "status": self.status}


@dataclass
class ClassificationReport:
    system_hash: str
    verdicts: dict
    certificates: dict
    implication_audit: list
    notes: list = field(default_factory=list)
    elapsed: float = 0.0

    def edge(self, premise, conclusion):
        for e in self.implication_audit:
            if e.premise == premise and e.conclusion == conclusion:
                return e
        raise KeyError((premise, conclusion))

    @property
    def violated_blue_edges(self):
        return [e for e in self.implication_audit if e.colour == "blue" and e.status == "violated"]

    @property
    def counterexamples(self):
        return [e for e in self.implication_audit if e.status == "counterexample"]

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "tool_version": __version__,
            "system_hash": self.system_hash,
            "verdicts": dict(self.verdicts),
            "certificates": self.certificates,
            "implication_audit": [e.to_dict() for e in self.implication_audit],
            "notes": list(self.notes),
        }

    def table(self):
        w = max(len(k) for k in self.verdicts)
        lines = [f"{k.ljust(w)}  {_show(v)}" for k, v in self.verdicts.items()]
        lines.append("")
        for e in self.implication_audit:
            cond = f" [{' and '.join(e.condition)}]" if e.condition else ""
            lines.append(f"{e.premise} => {e.conclusion}{cond} ({e.colour}): {e.status}")
        return "\n".join(lines)


def _show(v):
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


def _truth(v):
    """True/False for decided verdicts, ``None`` for missing or marginal ones."""
    return v if isinstance(v, bool) else None


def audit_implications(verdicts, assumption_holds=True):
    out = []
    for p, q, colour, cond in EDGES:
        P, Q = _truth(verdicts.get(p)), _truth(verdicts.get(q))
        cvals = [_truth(verdicts.get(c)) for c in (cond or ())]
        if not assumption_holds:
            status = "assumption-unmet"
        elif P is None or Q is None or any(c is None for c in cvals):
            status = "undecided"
        elif not P:
            status = "vacuous"
        elif cond and not all(cvals):
            status = "counterexample" if not Q else "condition-unmet"
        else:
            status = "holds" if Q else "violated"
        out.append(Edge(p, q, colour, cond, status))
    return out


def _lmi_verdict(cert):
    if cert.status == "marginal":
        return "marginal"
    return cert.feasible


def _trajectory_audit(sys, reduced, X, kind, n_traj, steps, seed):
    """Dissipation audit of the reduced system on random trajectories."""
    rng = np.random.default_rng(seed)
    rs = reduced.as_system()
    sr = SupplyRate.of(kind, sys.m)
    worst, viol = -np.inf, 0
    for _ in range(n_traj):
        u = rng.standard_normal((steps, sys.m))
        x0 = rng.standard_normal(rs.n)
        if sys.is_complex:
            u = u + 1j * rng.standard_normal((steps, sys.m))
            x0 = x0 + 1j * rng.standard_normal(rs.n)
        tr = simulate(rs, u, x0)
        a = audit_dissipation(tr, sr, X, rs.E)
        viol += len(a.violations)
        worst = max(worst, a.max_violation)
    return {"trajectories": n_traj, "steps": steps, "violations": viol, "max_excess": float(worst)}


def classify(sys, tol_rank=1e-10, tol_lmi=TOL_LMI, tol_strict=TOL_STRICT, cond_max=1e8,
             radii=DEFAULT_RADII, n_angles=DEFAULT_ANGLES, jobs=1, audit_trajectories=3, seed=0):
    """Evaluate every property of the report and audit the implication chart."""
    t0 = time.perf_counter()
    sys.require_valid()
    v = {k: None for k in PROPERTIES}
    cert = {}
    notes = []
    pa = analyze_pencil(sys.E, sys.A, tol_rank=tol_rank)
    v["regular"] = pa.regular
    cert["pencil"] = pa.to_dict()
    for name, fn in (("C2", check_c2), ("O2", check_o2)):
        r = fn(sys, tol_rank)
        v[name] = r.holds
        cert[name] = r.to_dict()
    if not pa.regular:
        notes.append("singular pencil: only the impulse rank tests apply")
        return ClassificationReport(sys.content_hash(), v, cert, audit_implications(v, False), notes,
                                    time.perf_counter() - t0)
    v["index"] = pa.index
    v["completely_causal"] = pa.completely_causal
    for name, fn in (("C1", check_c1), ("O1", check_o1)):
        r = fn(sys, tol_rank)
        v[name] = r.holds
        cert[name] = r.to_dict()
        if r.marginal:
            notes.append(f"{name}: rank decision inside the marginal band")
    st = classify_stability(sys.E, sys.A, tol_lmi=tol_lmi, tol_strict=tol_strict)
    v["stable"] = st.stable
    v["asymptotically_stable"] = st.asymptotically_stable
    cert["stability"] = st.to_dict()

    zero_E = not np.any(sys.E) and sys.n > 0
    assumption = pa.index <= 1 and not zero_E
    if zero_E:
        notes.append("E = 0 violates the standing assumption; implication audit not applicable")
    if pa.index > 1:
        notes.append(f"index {pa.index} > 1: passivity is not characterized by the KYP inequalities")
        for lk in ("d-iKYP", "d-sKYP"):
            c = solve_feasibility(build_lmi(sys, lk), "semidefinite", tol_lmi, tol_strict)
            cpd = solve_feasibility(build_lmi(sys, lk).with_constraint("pd"), "semidefinite",
                                    tol_lmi, tol_strict)
            v[lk] = _lmi_verdict(c)
            cert[lk] = {"full_state": c.to_dict(), "positive_definite": cpd.to_dict()}
    else:
        for kind, lk, pk in (("impedance", "d-iKYP", "d-iPa"), ("scattering", "d-sKYP", "d-sPa")):
            pv = check_passivity(sys, kind, allow_zero_E=True, tol_lmi=tol_lmi, tol_strict=tol_strict,
                                 tol_rank=tol_rank, cond_max=cond_max)
            v[lk] = _lmi_verdict(pv.certificate)
            v[pk] = pv.passive if pv.certificate.status != "marginal" else "marginal"
            c = pv.to_dict()
            if pv.passive and audit_trajectories:
                c["trajectory_audit"] = _trajectory_audit(sys, pv.reduced, pv.X_reduced, kind,
                                                          audit_trajectories, 20, seed)
                if c["trajectory_audit"]["violations"]:
                    notes.append(f"{pk}: dissipation audit found violations")
            cert[lk] = c
            notes.extend(f"{pk}: {s}" for s in pv.notes)
        try:
            ph = is_ph(sys, tol_lmi, tol_strict, allow_zero_E=True)
            v["d-spH"] = ph.is_ph if ph.certificate.status != "marginal" else "marginal"
            cert["d-spH"] = {"certificate": ph.certificate.to_dict(),
                             "representation": ph.representation.to_dict() if ph.representation else None}
        except (IndexTooHigh, DimensionError) as exc:
            notes.append(f"d-spH: {exc}")
    tf = TransferFunction(sys)
    for kind, key in (("positive", "d-PR"), ("bounded", "d-BR")):
        r = check_realness(tf, kind, radii, n_angles, jobs=jobs)
        v[key] = r.holds_on_grid
        cert[key] = r.to_dict()
    return ClassificationReport(sys.content_hash(), v, cert, audit_implications(v, assumption), notes,
                                time.perf_counter() - t0)
