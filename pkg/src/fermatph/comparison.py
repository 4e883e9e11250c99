"""Bottleneck distance between diagrams and metric distortion bounds.

The bottleneck computation is exact: the optimum lies among the pairwise
l-inf costs and the diagonal retirement costs, so a binary search over the
sorted candidates with a bipartite-matching feasibility test finds it.
Infinite bars have no canonical treatment in the literature we follow; the
convention here (isolated in _infinite_part) matches them by sorted birth
values and contributes the largest birth difference, with mismatched
counts giving +inf.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .metric import DistanceMatrix
from .persistence import PersistenceDiagram, persistent_homology, rips_filtration

__all__ = [
    "Matching",
    "bottleneck",
    "metric_distortion",
    "Distortion",
    "check_stability",
    "StabilityReport",
]

DIAGONAL = "diag"


@dataclass(frozen=True)
class Matching:
    """Witness matching: bar indices or "diag" per side, and the max l-inf cost.

    Indices refer to positions in dgm.in_degree(degree) of the two inputs.
    """

    pairs: tuple
    cost: float


class Distortion(NamedTuple):
    """sup |D1 - D2| over entries, and the induced Gromov-Hausdorff upper
    bound sup/2 (identity correspondence on a common index set)."""

    sup: float
    gh_upper: float


def _linf(b1, b2):
    db = abs(b1.birth - b2.birth)
    dd = abs(b1.death - b2.death)
    if math.isnan(dd):  # inf - inf
        dd = 0.0
    return max(db, dd)


def _infinite_part(inf1, inf2):
    """Contribution of infinite bars: sorted births matched in order."""
    if len(inf1) != len(inf2):
        return math.inf, []
    b1 = sorted(range(len(inf1)), key=lambda i: inf1[i].birth)
    b2 = sorted(range(len(inf2)), key=lambda i: inf2[i].birth)
    worst = 0.0
    pairs = []
    for i, j in zip(b1, b2):
        worst = max(worst, abs(inf1[i].birth - inf2[j].birth))
        pairs.append((i, j))
    return worst, pairs


def bottleneck(dgm1: PersistenceDiagram, dgm2: PersistenceDiagram, degree: int):
    """Exact bottleneck distance restricted to one homology degree.

    Returns (distance, Matching). Diagrams must share a truncation
    threshold; infinite bars must match in count or the distance is +inf.
    """
    if dgm1.threshold != dgm2.threshold:
        raise ValueError(
            f"diagrams computed at different thresholds ({dgm1.threshold} vs "
            f"{dgm2.threshold}) are not comparable")
    bars1 = dgm1.in_degree(degree)
    bars2 = dgm2.in_degree(degree)
    fin1 = [i for i, b in enumerate(bars1) if math.isfinite(b.death)]
    fin2 = [j for j, b in enumerate(bars2) if math.isfinite(b.death)]
    inf1 = [b for b in bars1 if math.isinf(b.death)]
    inf2 = [b for b in bars2 if math.isinf(b.death)]
    inf_cost, inf_pairs_local = _infinite_part(inf1, inf2)
    inf_idx1 = [i for i, b in enumerate(bars1) if math.isinf(b.death)]
    inf_idx2 = [j for j, b in enumerate(bars2) if math.isinf(b.death)]
    inf_pairs = [(inf_idx1[a], inf_idx2[b]) for a, b in inf_pairs_local]
    if math.isinf(inf_cost):
        return math.inf, Matching(pairs=tuple(inf_pairs), cost=math.inf)

    m1, m2 = len(fin1), len(fin2)
    diag1 = np.array([(bars1[i].death - bars1[i].birth) / 2 for i in fin1])
    diag2 = np.array([(bars2[j].death - bars2[j].birth) / 2 for j in fin2])
    if m1 == 0 and m2 == 0:
        fin_cost = 0.0
        pairs = []
    else:
        cost = np.zeros((m1, m2))
        for a, i in enumerate(fin1):
            for b, j in enumerate(fin2):
                cost[a, b] = _linf(bars1[i], bars2[j])
        cands = np.unique(np.concatenate([[0.0], cost.ravel(), diag1, diag2]))
        match_l = np.empty(m1, dtype=np.int64)
        match_r = np.empty(m2, dtype=np.int64)
        lo, hi = 0, len(cands) - 1
        # hi is always feasible: everything can retire to the diagonal
        while lo < hi:
            mid = (lo + hi) // 2
            if _kernels.matching_feasible(cost, diag1, diag2, cands[mid], match_l, match_r):
                hi = mid
            else:
                lo = mid + 1
        fin_cost = float(cands[lo])
        assert _kernels.matching_feasible(cost, diag1, diag2, fin_cost, match_l, match_r)
        pairs = []
        for a, i in enumerate(fin1):
            if match_l[a] >= 0:
                pairs.append((i, fin2[match_l[a]]))
            else:
                pairs.append((i, DIAGONAL))
        matched_r = set(match_l[match_l >= 0].tolist())
        pairs.extend((DIAGONAL, fin2[b]) for b in range(m2) if b not in matched_r)
    total = max(fin_cost, inf_cost)
    return total, Matching(pairs=tuple(pairs + inf_pairs), cost=total)


def metric_distortion(D1: DistanceMatrix, D2: DistanceMatrix) -> Distortion:
    """Largest entrywise distance difference, reported with its GH bound."""
    if D1.n != D2.n:
        raise ValueError(f"size mismatch: {D1.n} vs {D2.n}")
    diff = np.abs(D1.values - D2.values)
    finite = np.isfinite(D1.values) & np.isfinite(D2.values)
    if not np.all(finite | (np.isinf(D1.values) & np.isinf(D2.values))):
        return Distortion(math.inf, math.inf)
    sup = float(diff[finite].max()) if finite.any() else 0.0
    return Distortion(sup, sup / 2.0)


@dataclass(frozen=True)
class StabilityReport:
    bottleneck: float
    distortion: float
    gh_upper: float
    degree: int
    passed: bool


def check_stability(D1: DistanceMatrix, D2: DistanceMatrix, degree: int,
                    max_dim: int | None = None, r: float | None = None) -> StabilityReport:
    """Verify the diagram-stability inequality on a pair of matrices.

    Computes b = bottleneck of the two Rips diagrams at `degree` and
    g = sup |D1 - D2|, and checks b <= g (the stability inequality
    d_b <= 2 d_GH with d_GH bounded by g/2 on a common index set). A
    failure indicates an implementation bug, not a property of the data.
    """
    if max_dim is None:
        max_dim = degree
    if max_dim < degree:
        raise ValueError(f"max_dim {max_dim} cannot be below degree {degree}")
    dgm1 = persistent_homology(rips_filtration(D1, max_dim, r))
    dgm2 = persistent_homology(rips_filtration(D2, max_dim, r))
    b, _ = bottleneck(dgm1, dgm2, degree)
    dist = metric_distortion(D1, D2)
    return StabilityReport(bottleneck=b, distortion=dist.sup, gh_upper=dist.gh_upper,
                           degree=degree, passed=b <= dist.sup)
