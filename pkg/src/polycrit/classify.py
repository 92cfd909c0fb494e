"""Good-measure and removability verdicts on polyhedral boundaries.

Each stratum (face, edge, vertex) carries its own exponent table. For a given
``q`` the stratum either imposes no restriction, forbids charging sets of
zero capacity, or forces the measure to vanish. Capacity is decided by a
dimension threshold: a uniform ``d``-dimensional set on an ``m``-dimensional
edge has positive capacity exactly when ``d > m - s q'``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from ._validation import check_exponent, check_int
from .errors import DomainError
from .exponents import Regime, StratumSpec, build_exponent_table, classify_q_regime, conjugate
from .measures import EdgeMeasure, measure_from_dict
from .spectral import opening_from_dict


class Capacity(str, enum.Enum):
    NULL = "NullCapacity"
    POSITIVE = "PositiveCapacity"
    BOUNDARY = "Boundary"

    def __str__(self):
        return self.value


class Rule(str, enum.Enum):
    UNRESTRICTED = "Unrestricted"
    CAPACITY_NULL = "RequiresCapacityNull"
    MUST_VANISH = "MustVanish"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CapacityThreshold:
    """Dimension threshold ``d_crit = m - s q'`` for one stratum and ``q``."""

    m: int
    s: float
    q: float

    @property
    def d_crit(self):
        return self.m - self.s * conjugate(self.q)

    def predicate(self, d):
        """Capacity class of a compact ``d``-dimensional uniform set.

        When ``s <= 0`` every compact set has zero capacity. A point is null
        exactly when ``d_crit >= 0``.
        """
        d = check_int(d, "d", minimum=0, maximum=self.m)
        if self.s <= 0.0:
            return Capacity.NULL
        dc = self.d_crit
        if d == 0:
            return Capacity.NULL if dc >= 0.0 else Capacity.POSITIVE
        if abs(d - dc) <= 1e-12 * max(1.0, self.m):
            return Capacity.BOUNDARY
        return Capacity.POSITIVE if d > dc else Capacity.NULL

    __call__ = predicate


def capacity_threshold(table, q):
    """Capacity threshold of an edge or face stratum."""
    q = check_exponent(q)
    if table.is_cone:
        raise DomainError("vertices have no capacity threshold; use the cone rule q >= q_c")
    return CapacityThreshold(table.edge_dim, table.s(q), q)


@dataclass(frozen=True)
class Stratum:
    id: str
    spec: StratumSpec
    table: object


@dataclass(frozen=True)
class ComponentVerdict:
    stratum: str
    index: int
    regime: Regime
    rule: Rule
    d_crit: float
    passes: object  # True, False or None (indeterminate)
    reasons: tuple = ()

    @property
    def verdict(self):
        return {True: "good", False: "bad", None: "indeterminate"}[self.passes]

    def to_dict(self):
        return {"stratum": self.stratum, "component": self.index, "regime": str(self.regime),
                "rule": str(self.rule), "d_crit": self.d_crit, "verdict": self.verdict,
                "reasons": list(self.reasons)}


@dataclass(frozen=True)
class ClassificationReport:
    q: float
    components: tuple
    overall: str
    reasons: tuple = field(default=())

    def to_dict(self):
        return {"q": self.q, "overall": self.overall, "reasons": list(self.reasons),
                "components": [c.to_dict() for c in self.components]}

    def table(self):
        lines = [f"q = {self.q:g}: {self.overall}",
                 f"{'stratum':<12} {'#':>2} {'regime':<14} {'rule':<21} {'d_crit':>8}  verdict"]
        for c in self.components:
            dc = "-" if c.d_crit is None else f"{c.d_crit:8.4f}"
            lines.append(f"{c.stratum:<12} {c.index:>2} {str(c.regime):<14} {str(c.rule):<21} {dc:>8}  {c.verdict}")
        return "\n".join(lines)


def _rule(regime):
    return {Regime.SUBCRITICAL: Rule.UNRESTRICTED, Regime.CAPACITY: Rule.CAPACITY_NULL,
            Regime.EDGE_REMOVABLE: Rule.MUST_VANISH}[regime]


def _strata_index(strata):
    index = {}
    for st in strata:
        if st.id in index:
            raise DomainError(f"duplicate stratum id {st.id!r}")
        index[st.id] = st
    return index


def _piece_verdict(table, q, dims):
    """Pass/fail of a set of building-block dimensions inside the capacity band."""
    thr = capacity_threshold(table, q)
    reasons = []
    passes = True
    for d in dims:
        cap = thr(d)
        if cap is Capacity.NULL:
            reasons.append(f"charges a {d}-dimensional set of zero capacity (d_crit = {thr.d_crit:.6g})")
            passes = False
        elif cap is Capacity.BOUNDARY and passes:
            reasons.append(f"{d}-dimensional set sits at the critical dimension")
            passes = None
    return passes, thr.d_crit, reasons


def classify_measure_on_polyhedron(strata, q, measure):
    """Classify a boundary measure split into stratum components.

    Parameters
    ----------
    strata : sequence of Stratum
    q : float
    measure : sequence of (stratum id, EdgeMeasure)

    Returns
    -------
    ClassificationReport
        ``overall`` is ``"bad"`` if any component fails, otherwise
        ``"indeterminate"`` if any sits at a critical dimension, otherwise
        ``"good"``.
    """
    q = check_exponent(q)
    index = _strata_index(strata)
    comps = []
    for i, (sid, mu) in enumerate(measure):
        if sid not in index:
            raise DomainError(f"measure component {i} refers to unknown stratum {sid!r}")
        st = index[sid]
        if not isinstance(mu, EdgeMeasure):
            raise DomainError(f"component {i} is not an EdgeMeasure")
        if mu.m != st.table.edge_dim:
            raise DomainError(f"component {i} lives in R^{mu.m}, stratum {sid!r} has dimension {st.table.edge_dim}")
        regime = classify_q_regime(st.table, q)
        rule = _rule(regime)
        d_crit = None
        if rule is Rule.UNRESTRICTED:
            passes, reasons = True, ()
        elif rule is Rule.MUST_VANISH:
            passes = False
            reasons = (f"q = {q:g} >= {'q_c' if st.table.is_cone else 'q_c*'}: the stratum carries no measure",)
        else:
            passes, d_crit, reasons = _piece_verdict(st.table, q, mu.set_dimensions())
            reasons = tuple(reasons)
        comps.append(ComponentVerdict(sid, i, regime, rule, d_crit, passes, tuple(reasons)))
    flags = [c.passes for c in comps]
    if any(p is False for p in flags):
        overall = "bad"
    elif any(p is None for p in flags):
        overall = "indeterminate"
    else:
        overall = "good"
    reasons = tuple(f"{c.stratum}[{c.index}]: {r}" for c in comps for r in c.reasons)
    return ClassificationReport(q, tuple(comps), overall, reasons)


@dataclass(frozen=True)
class RemovabilityReport:
    q: float
    verdict: str
    pieces: tuple

    def to_dict(self):
        return {"q": self.q, "verdict": self.verdict,
                "pieces": [{"stratum": s, "dim": d, "capacity": str(c)} for s, d, c in self.pieces]}


def classify_removability(strata, q, compact_set):
    """Removability of a compact boundary set.

    ``compact_set`` is a sequence of ``(stratum id, d)`` with ``d`` the
    dimension of a uniform piece on that stratum. The set is removable iff
    every piece has zero capacity; a vertex has zero capacity iff
    ``q >= q_c``.
    """
    q = check_exponent(q)
    index = _strata_index(strata)
    rows = []
    for sid, d in compact_set:
        if sid not in index:
            raise DomainError(f"unknown stratum {sid!r}")
        table = index[sid].table
        if table.is_cone:
            if d != 0:
                raise DomainError("a vertex piece has dimension 0")
            cap = Capacity.NULL if q >= table.q_c else Capacity.POSITIVE
        else:
            cap = capacity_threshold(table, q)(d)
        rows.append((sid, d, cap))
    caps = [c for _, _, c in rows]
    if any(c is Capacity.POSITIVE for c in caps):
        verdict = "not removable"
    elif any(c is Capacity.BOUNDARY for c in caps):
        verdict = "indeterminate"
    else:
        verdict = "removable"
    return RemovabilityReport(q, verdict, tuple(rows))


# --- polyhedron documents ---------------------------------------------------

def stratum_from_dict(data, mesh=None):
    for key in ("id", "N", "k"):
        if key not in data:
            raise DomainError(f"stratum entry lacks {key!r}")
    opening = data.get("opening")
    spec = StratumSpec(
        N=data["N"], k=data["k"],
        opening=opening_from_dict(opening) if opening is not None else None,
        gamma=data.get("gamma"), lambda_A=data.get("lambda_A"), mesh=mesh, label=str(data["id"]),
    )
    return Stratum(str(data["id"]), spec, build_exponent_table(spec))


@dataclass(frozen=True)
class Polyhedron:
    strata: tuple
    q: float = None
    measure: tuple = ()
    removable_set: tuple = ()

    @property
    def tables(self):
        return {s.id: s.table for s in self.strata}


def polyhedron_from_dict(data, mesh=None):
    """Parse ``{"strata": [...], "q": ..., "measure": [...], "set": [...]}``."""
    if not isinstance(data, dict) or "strata" not in data:
        raise DomainError("polyhedron document needs a 'strata' list")
    strata = tuple(stratum_from_dict(s, mesh) for s in data["strata"])
    index = _strata_index(strata)
    measure = []
    for comp in data.get("measure", []):
        sid = str(comp.get("stratum"))
        if sid not in index:
            raise DomainError(f"measure refers to unknown stratum {sid!r}")
        m = index[sid].table.edge_dim
        # one component per building block, so verdicts stay itemized
        for atom in comp.get("atoms", []):
            measure.append((sid, measure_from_dict({"atoms": [atom]}, m=m)))
        for piece in comp.get("pieces", []):
            measure.append((sid, measure_from_dict({"pieces": [piece]}, m=m)))
    rset = tuple((str(p["stratum"]), int(p["dim"])) for p in data.get("set", []))
    q = data.get("q")
    return Polyhedron(strata, None if q is None else check_exponent(float(q)), tuple(measure), rset)


def load_polyhedron(path, mesh=None):
    with open(path) as fh:
        return polyhedron_from_dict(json.load(fh), mesh)


def cube_polyhedron():
    """The unit cube in ``R^3`` with one face, edge and vertex measure component each."""
    from importlib.resources import files
    text = files("polycrit").joinpath("data", "cube.json").read_text()
    return polyhedron_from_dict(json.loads(text))
