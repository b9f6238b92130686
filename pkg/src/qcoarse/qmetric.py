"""Quantum metrics at desk scale.

Two concrete constructions and their projection-level geometry:

* the integer-valued metric a trace-preserving Kraus set induces on the
  n x n matrix algebra (distances counted in powers of the operator system
  spanned by {K_j* K_i});
* the canonical metric a finite classical metric space induces on its
  diagonal algebra, where projections are subsets and everything is exact
  set arithmetic.

Distances carry an explicit +infinity variant for disconnected situations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    OperatorSubspace,
    Projection,
    SubspacePowers,
    ToleranceConfig,
    as_complex_matrix,
    image_range_projection,
    subspace_from_spanning,
)

__all__ = [
    "ExtendedDistance",
    "KrausSet",
    "GraphQuantumMetric",
    "graph_metric",
    "FiniteMetricSpace",
    "ClassicalQuantumMetric",
    "DirectSumMetric",
    "direct_sum",
    "quotient_restrict",
    "m_star_for_radius",
    "projection_to_subset",
    "dist_via_materialized",
    "neighborhood_via_materialized",
]


@dataclass(frozen=True, order=True)
class ExtendedDistance:
    """Nonnegative distance value with an explicit +infinity."""

    value: float

    def __post_init__(self) -> None:
        if not self.value >= 0.0:
            raise ValueError("distance must be nonnegative")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    @classmethod
    def of(cls, value: float) -> "ExtendedDistance":
        return cls(float(value))

    @classmethod
    def infinite(cls) -> "ExtendedDistance":
        return cls(math.inf)

    def __repr__(self) -> str:
        return f"ExtendedDistance({'inf' if not self.finite else self.value})"


def m_star_for_radius(eps: float) -> int:
    """Largest integer strictly below eps; the power index serving radius eps.

    For the integer-valued graph metric, dist(P, Q) < eps is equivalent to
    dist(P, Q) <= m_star_for_radius(eps).
    """
    if eps <= 0:
        raise ValueError("radius must be positive")
    m = math.floor(eps)
    if m == eps:
        m -= 1
    return max(m, 0)


class KrausSet:
    """A CPTP map on the n x n matrices, given by its Kraus matrices."""

    __slots__ = ("n", "ops", "tp_residual", "unital_residual", "tol")

    def __init__(self, ops: Sequence, tol: ToleranceConfig = DEFAULT_TOL):
        mats = [as_complex_matrix(k, square=True) for k in ops]
        if not mats:
            raise ValueError("a Kraus set needs at least one matrix")
        n = mats[0].shape[0]
        for k in mats:
            if k.shape != (n, n):
                raise ValueError("all Kraus matrices must share one dimension")
        self.n = n
        self.ops = mats
        eye = np.eye(n)
        self.tp_residual = float(
            np.linalg.norm(sum(k.conj().T @ k for k in mats) - eye))
        self.unital_residual = float(
            np.linalg.norm(sum(k @ k.conj().T for k in mats) - eye))
        self.tol = tol

    @property
    def trace_preserving(self) -> bool:
        return self.tp_residual <= self.tol.zero_atol

    @property
    def unital(self) -> bool:
        return self.unital_residual <= self.tol.zero_atol

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        return sum(k @ x @ k.conj().T for k in self.ops)

    def apply_adjoint(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        return sum(k.conj().T @ x @ k for k in self.ops)

    def __repr__(self) -> str:
        return (f"KrausSet(n={self.n}, N={len(self.ops)}, "
                f"tp={self.trace_preserving}, unital={self.unital})")


class GraphQuantumMetric:
    """Integer-valued quantum metric induced by a trace-preserving Kraus set.

    Distance 0 means overlapping ranges; distance m >= 1 means the m-th power
    of the Kraus operator system links the two projections and no smaller
    power does; +infinity means no power ever links them.
    """

    def __init__(self, kraus: KrausSet, tol: ToleranceConfig = DEFAULT_TOL):
        if not kraus.trace_preserving:
            raise ValueError(
                "Kraus set is not trace preserving "
                f"(residual {kraus.tp_residual:.3e} > {tol.zero_atol:.1e})")
        self.kraus = kraus
        self.tol = tol
        self.n = kraus.n
        prods = [kj.conj().T @ ki for kj in kraus.ops for ki in kraus.ops]
        self.v1 = subspace_from_spanning(prods, tol)
        self.powers = SubspacePowers(self.v1, tol)

    @property
    def m_stab(self) -> int:
        return self.powers.m_stab

    def power(self, m: int) -> OperatorSubspace:
        return self.powers.power(m)

    def _check_projection(self, p: Projection) -> None:
        if p.n != self.n:
            raise ValueError("projection lives in the wrong ambient dimension")
        if p.rank == 0:
            raise ValueError("distance is undefined for the zero projection")

    def _compressions_norm(self, p: Projection, sub: OperatorSubspace,
                           q: Projection) -> float:
        comp = np.einsum("ip,bij,jq->bpq",
                         p.range_basis.conj(), sub.basis, q.range_basis)
        return float(np.max(np.linalg.norm(comp.reshape(comp.shape[0], -1), axis=1)))

    def dist(self, p: Projection, q: Projection) -> ExtendedDistance:
        self._check_projection(p)
        self._check_projection(q)
        atol = self.tol.zero_atol
        if float(np.linalg.norm(p.range_basis.conj().T @ q.range_basis)) > atol:
            return ExtendedDistance.of(0.0)
        m = 1
        while True:
            if self._compressions_norm(p, self.power(m), q) > atol:
                return ExtendedDistance.of(float(m))
            known = self.powers.known_m_stab
            if known is not None and m >= known:
                return ExtendedDistance.infinite()
            m += 1

    def neighborhood(self, p: Projection, eps: float) -> Projection:
        self._check_projection(p)
        # power() clamps indices beyond stabilization internally
        return image_range_projection(
            self.power(m_star_for_radius(eps)), p, self.tol)

    def diam_graph_proxy(self, p: Projection) -> ExtendedDistance:
        """Least k whose power links everything through p: a diameter lower bound.

        Returns the least k with dim span{P B P : B basis of power k} equal to
        rank(P)^2, or +infinity when the compressed dimension stabilizes short.
        """
        self._check_projection(p)
        target = p.rank * p.rank
        k = 0
        while True:
            comp = np.einsum("ip,bij,jq->bpq",
                             p.range_basis.conj(), self.power(k).basis,
                             p.range_basis)
            rows = comp.reshape(comp.shape[0], -1)
            s = np.linalg.svd(rows, compute_uv=False)
            if s.size:
                cutoff = self.tol.rank_cutoff(float(s[0]), rows.shape)
                if int(np.count_nonzero(s > cutoff)) == target:
                    return ExtendedDistance.of(float(k))
            known = self.powers.known_m_stab
            if known is not None and k >= known:
                return ExtendedDistance.infinite()
            k += 1

    def diam_lower_bound_sampled(self, p: Projection, trials: int,
                                 seed: int) -> ExtendedDistance:
        """Max distance over sampled rank-one pairs inside range(p).

        A certified lower bound for the diameter; deterministic in the seed.
        Deterministic probes pair up the stored range-basis columns, so an
        orthogonal pair is always examined when rank(p) >= 2.
        """
        self._check_projection(p)
        if trials < 1:
            raise ValueError("need at least one trial")
        best = ExtendedDistance.of(0.0)

        def rank_one(u: np.ndarray) -> Projection:
            return Projection(self.n, (u / np.linalg.norm(u)).reshape(-1, 1))

        rb = p.range_basis
        probe_pairs = [(i, j) for i in range(p.rank) for j in range(i + 1, p.rank)]
        for i, j in probe_pairs[:64]:
            d = self.dist(rank_one(rb[:, i]), rank_one(rb[:, j]))
            best = max(best, d)
        pmat = p.matrix()
        for t in range(trials):
            rng = np.random.default_rng([seed, t])
            g = rng.standard_normal((self.n, 2)) + 1j * rng.standard_normal((self.n, 2))
            u = pmat @ g[:, 0]
            v = pmat @ g[:, 1]
            if t % 2 == 1 and p.rank >= 2:
                w = v - u * (np.vdot(u, v) / np.vdot(u, u))
                if np.linalg.norm(w) > 1e-12:
                    v = w
            d = self.dist(rank_one(u), rank_one(v))
            best = max(best, d)
        return best


def graph_metric(kraus: KrausSet,
                 tol: ToleranceConfig = DEFAULT_TOL) -> GraphQuantumMetric:
    return GraphQuantumMetric(kraus, tol)


def _as_distance_matrix(d) -> np.ndarray:
    arr = np.asarray(d, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("distance matrix must be square")
    return arr


class FiniteMetricSpace:
    """Finite point set with a distance matrix.

    Off-diagonal entries may be +infinity, encoding points in different
    components (direct sums, disconnected graphs).  Validation is exhaustive.
    """

    __slots__ = ("labels", "d")

    def __init__(self, labels: Sequence[str], d):
        self.labels = tuple(str(x) for x in labels)
        self.d = _as_distance_matrix(d)
        n = len(self.labels)
        if self.d.shape != (n, n):
            raise ValueError("labels and distance matrix disagree in size")
        if len(set(self.labels)) != n:
            raise ValueError("labels must be distinct")
        if np.any(np.isnan(self.d)):
            raise ValueError("distance matrix contains NaN")
        if np.any(np.diag(self.d) != 0.0):
            raise ValueError("distances to self must be zero")
        if not np.array_equal(self.d, self.d.T):
            raise ValueError("distance matrix must be symmetric")
        off = ~np.eye(n, dtype=bool)
        if np.any(self.d[off] <= 0.0):
            raise ValueError("distinct points must be at positive distance")
        for k in range(n):
            if np.any(self.d > self.d[:, [k]] + self.d[[k], :] + 1e-9):
                raise ValueError(f"triangle inequality fails through point {k}")

    @property
    def n(self) -> int:
        return len(self.labels)

    def realized_distances(self) -> list[float]:
        """Sorted distinct finite values of the metric (0 included)."""
        vals = self.d[np.isfinite(self.d)]
        return sorted(set(float(v) for v in vals))

    @classmethod
    def from_adjacency(cls, labels: Sequence[str], adjacency) -> "FiniteMetricSpace":
        """Shortest-path (hop-count) metric of an undirected simple graph."""
        a = np.asarray(adjacency)
        n = a.shape[0]
        d = np.full((n, n), np.inf)
        for s in range(n):
            d[s, s] = 0.0
            frontier = [s]
            level = 0
            while frontier:
                level += 1
                nxt = []
                for u in frontier:
                    for v in np.nonzero(a[u])[0]:
                        if not np.isfinite(d[s, v]):
                            d[s, v] = level
                            nxt.append(int(v))
                frontier = nxt
        return cls(labels, d)


def _normalize_subset(space: FiniteMetricSpace, subset: Iterable[int]) -> tuple[int, ...]:
    idx = tuple(sorted(set(int(i) for i in subset)))
    if idx and (idx[0] < 0 or idx[-1] >= space.n):
        raise ValueError("subset index out of range")
    return idx


def projection_to_subset(p: Projection, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[int, ...]:
    """Read a diagonal 0/1 projection as a subset; reject anything else."""
    m = p.matrix()
    diag = np.real(np.diag(m)).copy()
    off = m - np.diag(np.diag(m))
    rounded = np.round(diag)
    if (np.linalg.norm(off) > tol.zero_atol
            or np.any(np.abs(diag - rounded) > tol.zero_atol)
            or not set(np.unique(rounded)) <= {0.0, 1.0}):
        raise ValueError("projection is not a diagonal 0/1 projection; "
                         "the classical backend only accepts subsets")
    return tuple(int(i) for i in np.nonzero(rounded == 1.0)[0])


class ClassicalQuantumMetric:
    """Canonical quantum metric of a finite classical metric space.

    Projections are subsets; distance, diameter and neighborhoods are exact
    set arithmetic.  The operator picture is materialized only on demand via
    :meth:`materialize_vt` for cross-checks.
    """

    def __init__(self, space: FiniteMetricSpace):
        self.space = space
        self.n = space.n

    def _subset(self, s) -> tuple[int, ...]:
        if isinstance(s, Projection):
            return projection_to_subset(s)
        return _normalize_subset(self.space, s)

    def dist(self, s, t) -> ExtendedDistance:
        si, ti = self._subset(s), self._subset(t)
        if not si or not ti:
            raise ValueError("distance is undefined for the empty subset")
        val = float(np.min(self.space.d[np.ix_(si, ti)]))
        return ExtendedDistance.of(val) if math.isfinite(val) else ExtendedDistance.infinite()

    def neighborhood(self, s, eps: float) -> tuple[int, ...]:
        if eps <= 0:
            raise ValueError("radius must be positive")
        si = self._subset(s)
        if not si:
            return ()
        dmin = np.min(self.space.d[:, si], axis=1)
        return tuple(int(i) for i in np.nonzero(dmin < eps)[0])

    def diam(self, s) -> float:
        """Largest pairwise distance inside the subset; 0 for empty/singletons."""
        si = self._subset(s)
        if len(si) <= 1:
            return 0.0
        return float(np.max(self.space.d[np.ix_(si, si)]))

    def materialize_vt(self, t: float,
                       tol: ToleranceConfig = DEFAULT_TOL) -> OperatorSubspace:
        """Support-pattern operator subspace at threshold t (cross-check mode)."""
        n = self.n
        mask = self.space.d <= t
        basis = np.zeros((int(mask.sum()), n, n), dtype=np.complex128)
        for b, (x, y) in enumerate(zip(*np.nonzero(mask))):
            basis[b, x, y] = 1.0
        return OperatorSubspace(n, basis, True, True)

    def subset_projection(self, s) -> Projection:
        return Projection.onto_subset(self.n, self._subset(s))


def dist_via_materialized(metric: ClassicalQuantumMetric, s, t,
                          tol: ToleranceConfig = DEFAULT_TOL) -> ExtendedDistance:
    """Distance computed through actual operator compressions.

    Scans the realized thresholds in increasing order and returns the first
    at which some materialized basis element links the two subsets.  Exact
    agreement with the set formula is a verified invariant.
    """
    p = metric.subset_projection(s)
    q = metric.subset_projection(t)
    if p.rank == 0 or q.rank == 0:
        raise ValueError("distance is undefined for the empty subset")
    for tval in metric.space.realized_distances():
        sub = metric.materialize_vt(tval, tol)
        comp = np.einsum("ip,bij,jq->bpq",
                         p.range_basis.conj(), sub.basis, q.range_basis)
        sq = float(np.sum(np.abs(comp) ** 2))
        if sq > tol.zero_atol ** 2:
            return ExtendedDistance.of(tval)
    return ExtendedDistance.infinite()


def neighborhood_via_materialized(metric: ClassicalQuantumMetric, s, eps: float,
                                  tol: ToleranceConfig = DEFAULT_TOL) -> tuple[int, ...]:
    """Neighborhood computed as the image of the materialized subspace."""
    if eps <= 0:
        raise ValueError("radius must be positive")
    p = metric.subset_projection(s)
    below = [t for t in metric.space.realized_distances() if t < eps]
    if not below:
        return metric._subset(s)
    sub = metric.materialize_vt(max(below), tol)
    out = image_range_projection(sub, p, tol)
    return projection_to_subset(out, tol)


class DirectSumMetric:
    """Direct sum of two metrics of the same backend, with block embeddings."""

    def __init__(self, metric, left_size: int, right_size: int, cross_note: str):
        self.metric = metric
        self.left_size = left_size
        self.right_size = right_size
        self.cross_note = cross_note

    def embed_left(self, member):
        if isinstance(member, Projection):
            rb = np.zeros((self.left_size + self.right_size, member.rank),
                          dtype=np.complex128)
            rb[: self.left_size] = member.range_basis
            return Projection(self.left_size + self.right_size, rb)
        return tuple(int(i) for i in member)

    def embed_right(self, member):
        if isinstance(member, Projection):
            rb = np.zeros((self.left_size + self.right_size, member.rank),
                          dtype=np.complex128)
            rb[self.left_size:] = member.range_basis
            return Projection(self.left_size + self.right_size, rb)
        return tuple(int(i) + self.left_size for i in member)


def direct_sum(m1, m2, tol: ToleranceConfig = DEFAULT_TOL) -> DirectSumMetric:
    """Direct sum of two graph metrics or two classical metrics.

    Classical: disjoint union with +infinity cross-distances.  Graph: the
    block Kraus set {K_i (+) 0} u {0 (+) L_j}, whose operator system is block
    diagonal, so cross-block distances are +infinity.
    """
    if isinstance(m1, ClassicalQuantumMetric) and isinstance(m2, ClassicalQuantumMetric):
        n1, n2 = m1.n, m2.n
        d = np.full((n1 + n2, n1 + n2), np.inf)
        d[:n1, :n1] = m1.space.d
        d[n1:, n1:] = m2.space.d
        labels = ([f"0:{x}" for x in m1.space.labels]
                  + [f"1:{x}" for x in m2.space.labels])
        metric = ClassicalQuantumMetric(FiniteMetricSpace(labels, d))
        return DirectSumMetric(metric, n1, n2,
                               "cross-block distances are +inf")
    if isinstance(m1, GraphQuantumMetric) and isinstance(m2, GraphQuantumMetric):
        n1, n2 = m1.n, m2.n
        ops = []
        for k in m1.kraus.ops:
            blk = np.zeros((n1 + n2, n1 + n2), dtype=np.complex128)
            blk[:n1, :n1] = k
            ops.append(blk)
        for k in m2.kraus.ops:
            blk = np.zeros((n1 + n2, n1 + n2), dtype=np.complex128)
            blk[n1:, n1:] = k
            ops.append(blk)
        metric = GraphQuantumMetric(KrausSet(ops, tol), tol)
        return DirectSumMetric(metric, n1, n2,
                               "block-diagonal Kraus set; cross-block distances are +inf")
    raise ValueError("direct sum needs two metrics of the same backend")


def quotient_restrict(metric: ClassicalQuantumMetric, s) -> ClassicalQuantumMetric:
    """Restriction to a nonempty subset with the induced metric."""
    si = metric._subset(s)
    if not si:
        raise ValueError("cannot restrict to the empty subset")
    labels = [metric.space.labels[i] for i in si]
    return ClassicalQuantumMetric(
        FiniteMetricSpace(labels, metric.space.d[np.ix_(si, si)]))
