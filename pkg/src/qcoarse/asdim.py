"""Cover machinery for asymptotic dimension at a fixed scale.

Validators certify the three cover properties (covering, per-color
r-disjointness, uniform boundedness); constructions (greedy packing,
saturated unions, direct sums) are heuristics or theorem transcriptions
whose outputs are always re-validated.  The counting certificate turns the
expander rank-growth argument into a checker that pinpoints why a purported
small cover of an expander must fail.

Classical members are subsets (tuples of point indices); quantum members are
projections.  Boundedness of quantum members is judged against a certified
diameter lower bound, so a family can be refuted but only provisionally
passed; reports say which.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    ToleranceConfig,
    proj_join,
    proj_product_nonzero,
)
from .qmetric import (
    ClassicalQuantumMetric,
    FiniteMetricSpace,
    GraphQuantumMetric,
)
from .expander import ExpanderSpec, spectral_gap

__all__ = [
    "CoverFamily",
    "CoverValidation",
    "validate_cover",
    "GreedyCoverResult",
    "greedy_cover",
    "ScaleDimensionReport",
    "asdim_at_scale",
    "HypothesisViolation",
    "SaturatedUnionResult",
    "saturated_union",
    "direct_sum_cover",
    "union_cover",
    "CountingCertificate",
    "certify_counting",
]

# fixed internal seed for the sampled part of quantum diameter brackets,
# so validators stay deterministic
_DIAM_SEED = 1789
_DIAM_TRIALS = 10


@dataclass
class CoverFamily:
    """Colored family of cover members with claimed parameters (r, R)."""

    backend: str  # "classical" | "quantum"
    colors: list[list]
    r: float
    R: float
    metadata: str = ""

    def __post_init__(self) -> None:
        if self.backend not in ("classical", "quantum"):
            raise ValueError("backend must be 'classical' or 'quantum'")
        if self.backend == "classical":
            self.colors = [[tuple(sorted(int(i) for i in m)) for m in color]
                           for color in self.colors]
        for color in self.colors:
            for m in color:
                if self.backend == "classical" and len(m) == 0:
                    raise ValueError("cover members must be nonempty")
                if self.backend == "quantum" and m.rank == 0:
                    raise ValueError("cover members must be nonzero")

    @property
    def n_colors(self) -> int:
        return len(self.colors)

    def members(self) -> list:
        return [m for color in self.colors for m in color]


class HypothesisViolation(ValueError):
    """A construction's stated hypotheses fail; carries the clause and witness."""

    def __init__(self, clause: str, witness=None):
        super().__init__(f"hypothesis violated: {clause}"
                         + (f" (witness: {witness})" if witness is not None else ""))
        self.clause = clause
        self.witness = witness


def _backend_of(metric) -> str:
    if isinstance(metric, ClassicalQuantumMetric):
        return "classical"
    if isinstance(metric, GraphQuantumMetric):
        return "quantum"
    raise ValueError(f"unsupported metric type {type(metric)!r}")


def _neighborhood(metric, member, r: float):
    if isinstance(metric, ClassicalQuantumMetric):
        return set(metric.neighborhood(member, r))
    return metric.neighborhood(member, r)


def _overlaps(metric, nb_a, nb_b, tol: ToleranceConfig) -> bool:
    if isinstance(metric, ClassicalQuantumMetric):
        return bool(nb_a & nb_b)
    return proj_product_nonzero(nb_a, nb_b, tol)


def _join_members(metric, members):
    if isinstance(metric, ClassicalQuantumMetric):
        out: set[int] = set()
        for m in members:
            out |= set(m)
        return tuple(sorted(out))
    return proj_join(list(members), n=metric.n)


def _diam_bracket(metric, member) -> tuple[float, bool]:
    """(diameter or certified lower bound, exact?)."""
    if isinstance(metric, ClassicalQuantumMetric):
        return metric.diam(member), True
    k0 = metric.diam_graph_proxy(member)
    lower = k0
    if member.rank >= 2:
        sampled = metric.diam_lower_bound_sampled(
            member, trials=_DIAM_TRIALS, seed=_DIAM_SEED)
        lower = max(lower, sampled)
    return lower.value, False


@dataclass
class CoverValidation:
    covering_ok: bool
    r_disjoint_ok: bool
    bounded_ok: bool
    bounded_mode: str  # "exact" | "not_refuted" | "refuted"
    covering_witness: object = None
    disjoint_witness: object = None
    bounded_witness: object = None

    @property
    def all_ok(self) -> bool:
        return self.covering_ok and self.r_disjoint_ok and self.bounded_ok

    def failures(self) -> list[dict]:
        out = []
        if not self.covering_ok:
            out.append({"kind": "covering", "witness": self.covering_witness})
        if not self.r_disjoint_ok:
            out.append({"kind": "disjointness", "witness": self.disjoint_witness})
        if not self.bounded_ok:
            out.append({"kind": "boundedness", "witness": self.bounded_witness})
        return out


def validate_cover(metric, fam: CoverFamily,
                   tol: ToleranceConfig = DEFAULT_TOL,
                   r: float | None = None,
                   R: float | None = None) -> CoverValidation:
    """Certify covering, per-color r-disjointness, and R-boundedness.

    Classical checks are exact.  Quantum boundedness uses the certified
    diameter lower bound: failures are certain, passes are "not refuted".
    The radius and bound default to the family's claimed (r, R).
    """
    if _backend_of(metric) != fam.backend:
        raise ValueError(f"cover backend {fam.backend!r} does not match metric")
    r = fam.r if r is None else r
    R = fam.R if R is None else R

    members = fam.members()
    joined = _join_members(metric, members)
    if fam.backend == "classical":
        missing = sorted(set(range(metric.n)) - set(joined))
        covering_ok, covering_witness = not missing, tuple(missing)
    else:
        covering_ok = joined.rank == metric.n
        covering_witness = None if covering_ok else joined.rank

    disjoint_ok, disjoint_witness = True, None
    for ci, color in enumerate(fam.colors):
        nbs = [_neighborhood(metric, m, r) for m in color]
        for i in range(len(color)):
            for j in range(i + 1, len(color)):
                if _overlaps(metric, nbs[i], nbs[j], tol):
                    disjoint_ok = False
                    disjoint_witness = {"color": ci, "pair": (i, j)}
                    break
            if not disjoint_ok:
                break
        if not disjoint_ok:
            break

    bounded_ok, bounded_witness = True, None
    exact = fam.backend == "classical"
    for ci, color in enumerate(fam.colors):
        for mi, m in enumerate(color):
            lower, _ = _diam_bracket(metric, m)
            if lower > R + tol.zero_atol:
                bounded_ok = False
                bounded_witness = {"color": ci, "member": mi,
                                   "diameter_lower_bound": lower}
                break
        if not bounded_ok:
            break
    if exact:
        bounded_mode = "exact"
    else:
        bounded_mode = "not_refuted" if bounded_ok else "refuted"
    return CoverValidation(covering_ok, disjoint_ok, bounded_ok, bounded_mode,
                           covering_witness, disjoint_witness, bounded_witness)


# ---------------------------------------------------------------------------
# greedy construction


@dataclass
class GreedyCoverResult:
    family: CoverFamily | None
    colors_used: int
    achieved_R: float
    validation: CoverValidation | None
    failure: str | None = None

    @property
    def success(self) -> bool:
        return self.family is not None


def greedy_cover(space: FiniteMetricSpace, r: float,
                 max_colors: int = 16,
                 tol: ToleranceConfig = DEFAULT_TOL) -> GreedyCoverResult:
    """Greedy r-disjoint cover by balls of radius 2r, one color at a time.

    Per color: repeatedly seed the first unclaimed point that is farther
    than 2r from this color's clusters, claim its 2r-ball among unclaimed,
    unblocked points; leftovers go to the next color.  The first validated
    cover wins; the validator, not the heuristic, is the source of truth.
    """
    if r <= 0:
        raise ValueError("need r > 0")
    if max_colors < 1:
        raise ValueError("need max_colors >= 1")
    metric = ClassicalQuantumMetric(space)
    n = space.n
    uncovered = set(range(n))
    colors: list[list[tuple[int, ...]]] = []
    for _ in range(max_colors):
        if not uncovered:
            break
        clusters: list[tuple[int, ...]] = []
        blocked: set[int] = set()
        for x in range(n):
            if x not in uncovered or x in blocked:
                continue
            ball = {y for y in uncovered - blocked
                    if space.d[x, y] <= 2 * r}
            clusters.append(tuple(sorted(ball)))
            uncovered -= ball
            near = np.min(space.d[:, sorted(ball)], axis=1) <= 2 * r
            blocked |= set(int(i) for i in np.nonzero(near)[0])
        colors.append(clusters)
    if uncovered:
        return GreedyCoverResult(None, len(colors), math.nan, None,
                                 failure=f"max_colors={max_colors} exhausted "
                                         f"with {len(uncovered)} points uncovered")
    achieved = max((metric.diam(m) for color in colors for m in color),
                   default=0.0)
    fam = CoverFamily("classical", colors, r=r, R=achieved,
                      metadata="greedy ball packing")
    validation = validate_cover(metric, fam, tol)
    if not validation.all_ok:
        return GreedyCoverResult(None, len(colors), achieved, validation,
                                 failure="greedy output failed validation")
    return GreedyCoverResult(fam, len(colors), achieved, validation)


# ---------------------------------------------------------------------------
# exact minimum at scale


def _partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1:]
        yield part + [[first]]


def _chromatic_number(num: int, adj: list[set[int]]) -> int:
    if num == 0:
        return 0
    order = sorted(range(num), key=lambda v: -len(adj[v]))
    for k in range(1, num + 1):
        colors = [-1] * num

        def assign(pos: int) -> bool:
            if pos == num:
                return True
            v = order[pos]
            used = {colors[u] for u in adj[v] if colors[u] >= 0}
            for c in range(min(k, pos + 1)):
                if c not in used:
                    colors[v] = c
                    if assign(pos + 1):
                        return True
                    colors[v] = -1
            return False

        if assign(0):
            return k
    return num


@dataclass
class ScaleDimensionReport:
    value: int
    exact: bool
    r: float
    R: float
    greedy_colors: int | None
    exhaustive_colors: int | None

    def __int__(self) -> int:
        return self.value


def asdim_at_scale(space: FiniteMetricSpace, r: float,
                   R: float | None = None,
                   exhaustive_limit: int = 10,
                   max_colors: int = 16,
                   tol: ToleranceConfig = DEFAULT_TOL) -> ScaleDimensionReport:
    """Fewest colors minus one over valid (r-disjoint, R-bounded) covers.

    R defaults to 4r, the greedy construction's guarantee, so the greedy
    upper bound and the exhaustive minimum refer to the same cover class.
    The exhaustive search (|X| <= exhaustive_limit) scans set partitions,
    since any valid cover shrinks to a partition cover with no more colors,
    and colors each partition optimally against the conflict graph of
    overlapping r-neighborhoods.
    """
    if r <= 0:
        raise ValueError("need r > 0")
    R = 4 * r if R is None else R
    greedy = greedy_cover(space, r, max_colors=max_colors, tol=tol)
    greedy_colors = greedy.colors_used if greedy.success else None
    if greedy.success and greedy.achieved_R > R + tol.zero_atol:
        greedy_colors = None  # packed wider than this R allows

    exhaustive_colors = None
    n = space.n
    if n <= exhaustive_limit:
        nb_masks = []
        for i in range(n):
            mask = 0
            for z in range(n):
                if space.d[z, i] < r:
                    mask |= 1 << z
            nb_masks.append(mask)
        best = n + 1
        for part in _partitions(list(range(n))):
            blocks = [tuple(b) for b in part]
            if any(np.max(space.d[np.ix_(b, b)]) > R + tol.zero_atol
                   for b in blocks if len(b) > 1):
                continue
            masks = [0] * len(blocks)
            for bi, b in enumerate(blocks):
                for i in b:
                    masks[bi] |= nb_masks[i]
            adj = [set() for _ in blocks]
            for i in range(len(blocks)):
                for j in range(i + 1, len(blocks)):
                    if masks[i] & masks[j]:
                        adj[i].add(j)
                        adj[j].add(i)
            best = min(best, _chromatic_number(len(blocks), adj))
            if best == 1:
                break
        exhaustive_colors = best if best <= n else None

    candidates = [c for c in (greedy_colors, exhaustive_colors) if c is not None]
    if not candidates:
        raise RuntimeError("no valid cover found at this scale; "
                           "raise max_colors or R")
    return ScaleDimensionReport(
        value=min(candidates) - 1,
        exact=exhaustive_colors is not None,
        r=r, R=R,
        greedy_colors=greedy_colors,
        exhaustive_colors=exhaustive_colors,
    )


# ---------------------------------------------------------------------------
# saturated union


@dataclass
class SaturatedUnionResult:
    members: list
    bound: float
    r: float
    validation: CoverValidation

    def __iter__(self):
        return iter(self.members)


def _check_family_hypotheses(metric, members, r: float, bound: float,
                             disjoint_radius: float, label: str,
                             tol: ToleranceConfig) -> None:
    nbs = [_neighborhood(metric, m, disjoint_radius) for m in members]
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if _overlaps(metric, nbs[i], nbs[j], tol):
                raise HypothesisViolation(
                    f"{label} is not {disjoint_radius:g}-disjoint",
                    witness=(i, j))
    for i, m in enumerate(members):
        lower, exact = _diam_bracket(metric, m)
        if lower > bound + tol.zero_atol:
            raise HypothesisViolation(
                f"{label} is not {bound:g}-bounded"
                + ("" if exact else " (refuted by lower bound)"),
                witness=i)


def saturated_union(metric, p_members: Sequence, q_members: Sequence,
                    r: float, R: float, D: float,
                    tol: ToleranceConfig = DEFAULT_TOL) -> SaturatedUnionResult:
    """Merge each Q with the P's whose r-neighborhoods touch its own.

    Hypotheses (validated; hard error on failure): the P family is
    r-disjoint and R-bounded with R > r; the Q family is 7R-disjoint and
    D-bounded.  The output family {Q v P_Q} u {untouched P} is r-disjoint
    and (D + 2(R + D + 4r))-bounded, and is re-validated as such.
    """
    if not R > r > 0:
        raise HypothesisViolation(f"need R > r > 0, got r={r:g}, R={R:g}")
    p_members = list(p_members)
    q_members = list(q_members)
    _check_family_hypotheses(metric, p_members, r, R, r, "P family", tol)
    _check_family_hypotheses(metric, q_members, r, D, 7 * R, "Q family", tol)

    p_nbs = [_neighborhood(metric, p, r) for p in p_members]
    q_nbs = [_neighborhood(metric, q, r) for q in q_members]
    touched = [False] * len(p_members)
    out = []
    for qi, q in enumerate(q_members):
        attached = [q]
        for pi, p in enumerate(p_members):
            if _overlaps(metric, p_nbs[pi], q_nbs[qi], tol):
                attached.append(p)
                touched[pi] = True
        out.append(_join_members(metric, attached))
    out.extend(p for pi, p in enumerate(p_members) if not touched[pi])

    bound = D + 2 * (R + D + 4 * r)
    fam = CoverFamily(_backend_of(metric), [out], r=r, R=bound,
                      metadata="saturated union")
    validation = validate_cover(metric, fam, tol)
    if not (validation.r_disjoint_ok and validation.bounded_ok):
        raise ArithmeticError(
            "saturated union violated its guaranteed conclusion; "
            f"validation: {validation}")
    return SaturatedUnionResult(members=fam.colors[0], bound=bound, r=r,
                                validation=validation)


# ---------------------------------------------------------------------------
# permanence constructions


def direct_sum_cover(cov1: CoverFamily, cov2: CoverFamily,
                     direct_sum_metric) -> CoverFamily:
    """Color-wise embedded union of two covers on a direct-sum metric."""
    if cov1.backend != cov2.backend:
        raise ValueError("cover backends differ")
    if cov1.r != cov2.r:
        raise ValueError("covers must share the disjointness radius r")
    ds = direct_sum_metric
    n_colors = max(cov1.n_colors, cov2.n_colors)
    colors = []
    for j in range(n_colors):
        left = cov1.colors[j] if j < cov1.n_colors else []
        right = cov2.colors[j] if j < cov2.n_colors else []
        colors.append([ds.embed_left(m) for m in left]
                      + [ds.embed_right(m) for m in right])
    return CoverFamily(cov1.backend, colors, r=cov1.r,
                       R=max(cov1.R, cov2.R),
                       metadata="direct sum of covers")


def union_cover(metric_M: ClassicalQuantumMetric, cov1: CoverFamily,
                cov2: CoverFamily, r: float, R: float,
                tol: ToleranceConfig = DEFAULT_TOL) -> CoverFamily:
    """Cover of M from covers of two pieces whose supports fill M.

    cov1 must be r-disjoint and R-bounded (R > r), cov2 7R-disjoint and
    D-bounded (D = cov2.R), both measured inside M; the union of all member
    supports must be everything.  Colors are combined pairwise by saturated
    union.  Classical backends only: quantum unions are supported through
    direct sums (see direct_sum_cover).
    """
    if not isinstance(metric_M, ClassicalQuantumMetric):
        raise NotImplementedError(
            "union_cover is implemented for classical metrics; quantum "
            "unions are supported only through direct_sum_cover")
    if cov1.backend != "classical" or cov2.backend != "classical":
        raise ValueError("both covers must be classical here")
    support = set()
    for m in cov1.members() + cov2.members():
        support |= set(m)
    if support != set(range(metric_M.n)):
        raise HypothesisViolation(
            "supports do not cover the space",
            witness=tuple(sorted(set(range(metric_M.n)) - support)))
    D = cov2.R
    n_colors = max(cov1.n_colors, cov2.n_colors)
    colors = []
    bound = D + 2 * (R + D + 4 * r)
    for j in range(n_colors):
        p_members = cov1.colors[j] if j < cov1.n_colors else []
        q_members = cov2.colors[j] if j < cov2.n_colors else []
        if not q_members:
            _check_family_hypotheses(metric_M, p_members, r, R, r,
                                     f"P color {j}", tol)
            colors.append(list(p_members))
            continue
        if not p_members:
            _check_family_hypotheses(metric_M, q_members, r, D, 7 * R,
                                     f"Q color {j}", tol)
            colors.append(list(q_members))
            continue
        result = saturated_union(metric_M, p_members, q_members, r, R, D, tol)
        colors.append(list(result.members))
    fam = CoverFamily("classical", colors, r=r, R=bound,
                      metadata="saturated union of two covers")
    validation = validate_cover(metric_M, fam, tol)
    if not validation.all_ok:
        raise HypothesisViolation(
            "combined family failed validation as a cover of M",
            witness=validation.failures())
    return fam


# ---------------------------------------------------------------------------
# counting certificate


@dataclass
class CountingCertificate:
    n_colors: int
    m: int
    delta: float
    eps_prime: float
    ambient_rank: int
    per_color_rank_sums: list[int]
    per_color_base_rank_sums: list[int]
    contradiction: bool
    parameter_condition: bool
    failures: list[dict] = field(default_factory=list)
    excluded_members: list[dict] = field(default_factory=list)

    @property
    def refuted(self) -> bool:
        return bool(self.failures)


def certify_counting(spec: ExpanderSpec, fam: CoverFamily, delta: float,
                     m: int,
                     tol: ToleranceConfig = DEFAULT_TOL,
                     metric: GraphQuantumMetric | None = None) -> CountingCertificate:
    """Audit a purported (colors, m*delta)-cover of an expander.

    With eps' = (1 - gap)/2 from the measured gap, a cover whose colors are
    m*delta-disjoint, uniformly bounded, made of members of rank <= n/2
    throughout the growth chain, and satisfying (1 + eps')^m - 1 > colors - 1
    cannot exist; this certificate either finds the concrete validation
    failure (covering, disjointness, boundedness, or a rank cap) or reports
    contradiction = True, which indicates a tolerance bug.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    if delta <= 1:
        raise ValueError("need delta > 1")
    if fam.backend != "quantum":
        raise ValueError("counting certificates apply to quantum covers")
    kraus = spec.kraus(tol)
    gap = spectral_gap(kraus, tol).epsilon
    if gap <= tol.zero_atol:
        raise ValueError("the channel has no measured spectral gap; "
                         "the counting argument needs epsilon > 0")
    eps_prime = (1.0 - gap) / 2.0
    if metric is None:
        from .qmetric import graph_metric
        metric = graph_metric(kraus, tol)
    n = spec.n
    radius = m * delta

    validation = validate_cover(metric, fam, tol, r=radius, R=fam.R)
    failures = validation.failures()

    excluded: list[dict] = []
    per_color_sums: list[int] = []
    per_color_base: list[int] = []
    for ci, color in enumerate(fam.colors):
        nb_sum = 0
        base_sum = 0
        for mi, member in enumerate(color):
            ranks = [member.rank]
            capped = False
            for k in range(1, m + 1):
                if ranks[-1] > n / 2:
                    capped = True
                    break
                ranks.append(metric.neighborhood(member, k * delta).rank)
            if capped:
                excluded.append({"color": ci, "member": mi,
                                 "rank_chain": ranks})
                continue
            nb_sum += ranks[-1]
            base_sum += ranks[0]
        per_color_sums.append(nb_sum)
        per_color_base.append(base_sum)
        if nb_sum > n:
            failures.append({"kind": "disjointness",
                             "witness": {"color": ci,
                                         "neighborhood_rank_sum": nb_sum,
                                         "ambient_rank": n}})

    if excluded:
        failures.append({"kind": "rank_cap",
                         "witness": [e["color"] for e in excluded]})
    param_condition = (1.0 + eps_prime) ** m - 1.0 > fam.n_colors - 1.0
    contradiction = param_condition and not failures
    return CountingCertificate(
        n_colors=fam.n_colors, m=m, delta=delta, eps_prime=eps_prime,
        ambient_rank=n,
        per_color_rank_sums=per_color_sums,
        per_color_base_rank_sums=per_color_base,
        contradiction=contradiction,
        parameter_condition=param_condition,
        failures=failures,
        excluded_members=excluded,
    )
