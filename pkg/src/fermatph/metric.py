"""Distance estimators on point clouds.

The central object is the power-weighted shortest-path distance on the
complete graph over a sample (edge cost |x-y|^p), together with its
rescaled version, the k-NN graph estimator, the quotient-space metric used
for degree-0 bookkeeping, and classical MDS for visualization.

All matrices are computed exactly: one Dijkstra run per source with a
linear-scan frontier, O(n^2) per source, which is optimal on dense graphs.
Exact symmetry is enforced by storing the lower triangle and mirroring it.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import PointCloud

__all__ = [
    "DistanceMatrix",
    "FermatParams",
    "euclidean_matrix",
    "fermat_matrix",
    "rescale_fermat",
    "estimate_mu",
    "knn_matrix",
    "minimal_spacing",
    "outlier_delta",
    "epsilon_star",
    "quotient_matrix",
    "mds_project",
]

KINDS = ("euclidean", "fermat", "knn", "quotient")


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of pairwise distances with a metric-kind tag.

    values is (n, n) float64, exactly symmetric with a zero diagonal,
    read-only. +inf entries are permitted only for kind "knn" (disconnected
    k-NN graphs).
    """

    values: np.ndarray
    kind: str
    p: float | None = None
    k: int | None = None
    rescaled: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {v.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if not np.array_equal(v, v.T):
            raise ValueError("distance matrix must be exactly symmetric")
        if np.any(np.diagonal(v) != 0.0):
            raise ValueError("distance matrix must have a zero diagonal")
        if np.any(v < 0):
            raise ValueError("distances must be non-negative")
        if self.kind != "knn" and not np.all(np.isfinite(v)):
            raise ValueError(f"+inf entries are only allowed for kind 'knn', not {self.kind!r}")
        if self.kind == "knn" and np.any(np.isnan(v)):
            raise ValueError("distance matrix contains NaN")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FermatParams:
    """Exponent p, intrinsic dimension d and normalization mu for rescaling."""

    p: float
    d: int
    mu: float | None = None

    def __post_init__(self):
        if not (self.p > 1 and math.isfinite(self.p)):
            raise ValueError(f"p must be a finite number > 1, got {self.p}")
        if self.d < 1:
            raise ValueError(f"intrinsic dimension must be >= 1, got {self.d}")
        if self.mu is not None and not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be positive and finite, got {self.mu}")

    @property
    def scale_exponent(self) -> float:
        return (self.p - 1.0) / self.d


def _mirror_lower(raw: np.ndarray) -> np.ndarray:
    """Exact symmetry: keep the strict lower triangle, mirror it up."""
    low = np.tril(raw, -1)
    return low + low.T


def _pairwise_euclidean(pts: np.ndarray) -> np.ndarray:
    n = pts.shape[0]
    out = np.empty((n, n))
    block = max(1, (1 << 22) // max(n, 1))
    for s in range(0, n, block):
        diff = pts[s:s + block, None, :] - pts[None, :, :]
        out[s:s + block] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def euclidean_matrix(cloud: PointCloud) -> DistanceMatrix:
    """Pairwise Euclidean distances."""
    d = _mirror_lower(_pairwise_euclidean(cloud.points))
    return DistanceMatrix(d, kind="euclidean")


def _knn_adjacency(eu: np.ndarray, k: int) -> np.ndarray:
    """Symmetric k-NN adjacency: edge when either endpoint ranks the other
    among its k nearest (ties broken by index order)."""
    n = eu.shape[0]
    masked = eu.copy()
    np.fill_diagonal(masked, np.inf)
    nbrs = np.argsort(masked, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), k)
    adj[rows, nbrs.ravel()] = True
    return adj | adj.T


def fermat_matrix(cloud: PointCloud, p: float, prune_k: int | None = None) -> DistanceMatrix:
    """Shortest-path distances on the complete sample graph with edge cost |x-y|^p.

    p >= 1; p = 1 degenerates to the Euclidean distance itself. When
    prune_k is given the graph is restricted to the symmetric k-NN subgraph,
    an approximation that trades exactness for speed; pruned graphs must
    remain connected (use prune_k = n-1 to recover the exact result).
    """
    if not (p >= 1 and math.isfinite(p)):
        raise ValueError(f"p must be finite and >= 1, got {p}")
    n = cloud.n
    eu = _pairwise_euclidean(cloud.points)
    w = eu ** p
    np.fill_diagonal(w, 0.0)
    if prune_k is not None:
        if not (1 <= prune_k <= n - 1):
            raise ValueError(f"prune_k must be in [1, n-1], got {prune_k}")
        adj = _knn_adjacency(eu, prune_k)
        w = np.where(adj, w, np.inf)
        np.fill_diagonal(w, 0.0)
    d = _mirror_lower(_kernels.dijkstra_all_sources(w))
    if not np.all(np.isfinite(d)):
        raise ValueError(f"pruned graph (prune_k={prune_k}) is disconnected")
    return DistanceMatrix(d, kind="fermat", p=p)


def rescale_fermat(D: DistanceMatrix, params: FermatParams) -> DistanceMatrix:
    """Entrywise multiplication by n^((p-1)/d) / mu."""
    if D.kind != "fermat":
        raise ValueError(f"rescaling applies to fermat matrices, got kind {D.kind!r}")
    if D.rescaled:
        raise ValueError("matrix is already rescaled")
    if params.mu is None:
        raise ValueError("rescaling requires mu")
    if D.p is not None and D.p != params.p:
        raise ValueError(f"exponent mismatch: matrix has p={D.p}, params have p={params.p}")
    factor = D.n ** params.scale_exponent / params.mu
    return DistanceMatrix(D.values * factor, kind="fermat", p=D.p, rescaled=True)


def estimate_mu(cloud: PointCloud, p: float, d: int, analytic: np.ndarray,
                min_separation: float | None = None) -> float:
    """Estimate the normalization constant from a uniform-density sample.

    analytic must hold the exact population distances for the cloud (for a
    uniform density these are proportional to geodesic distances). Returns
    the median of n^((p-1)/d) * graph_distance / analytic over point pairs
    separated by at least min_separation, which defaults to 10 percent of
    the manifold diameter. The constant has no closed form, so this
    empirical route is the only one offered.
    """
    A = np.asarray(analytic, dtype=np.float64)
    if A.shape != (cloud.n, cloud.n):
        raise ValueError(f"analytic matrix shape {A.shape} does not match cloud size {cloud.n}")
    if min_separation is None:
        min_separation = 0.1 * A.max()
    D = fermat_matrix(cloud, p)
    iu, ju = np.triu_indices(cloud.n, 1)
    sep = A[iu, ju]
    keep = sep >= min_separation
    if keep.sum() < 10:
        raise ValueError(
            f"only {int(keep.sum())} point pairs are separated by >= {min_separation}; "
            "need at least 10")
    ratios = cloud.n ** ((p - 1.0) / d) * D.values[iu, ju][keep] / sep[keep]
    return float(np.median(ratios))


def knn_matrix(cloud: PointCloud, k: int) -> DistanceMatrix:
    """Shortest-path distance on the symmetric k-NN graph with Euclidean edges.

    Pairs in different graph components get +inf; disconnection is a value
    here, not an error.
    """
    n = cloud.n
    if not (1 <= k < n):
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    eu = _pairwise_euclidean(cloud.points)
    adj = _knn_adjacency(eu, k)
    w = np.where(adj, eu, np.inf)
    np.fill_diagonal(w, 0.0)
    d = _mirror_lower(_kernels.dijkstra_all_sources(w))
    return DistanceMatrix(d, kind="knn", k=k)


def minimal_spacing(Y: PointCloud) -> float:
    """Smallest Euclidean distance between two distinct points; +inf for a
    single point (no pair exists, by convention)."""
    if Y.n == 1:
        return math.inf
    eu = _pairwise_euclidean(Y.points)
    np.fill_diagonal(eu, np.inf)
    return float(eu.min())


def _cross_min(X: PointCloud, Y: PointCloud) -> float:
    best = math.inf
    for y in Y.points:
        d2 = ((X.points - y) ** 2).sum(axis=1).min()
        best = min(best, float(np.sqrt(d2)))
    return best


def outlier_delta(X: PointCloud, Y: PointCloud) -> float:
    """min of the internal spacing of Y and the Euclidean set distance X to Y."""
    return min(minimal_spacing(Y), _cross_min(X, Y))


def epsilon_star(X: PointCloud) -> float:
    """Connectivity threshold of the Euclidean neighborhood graph.

    Equals the longest edge of a Euclidean minimum spanning tree; 0 for a
    single point. The neighborhood graph uses strict inequality |x-y| < eps,
    so the graph is connected exactly for eps strictly greater than the
    value returned here; outlier tests compare with strict > accordingly.
    """
    if X.n == 1:
        return 0.0
    eu = _mirror_lower(_pairwise_euclidean(X.points))
    weights, count, _ = _kernels.prim_forest(eu)
    return float(weights[:count].max())


def quotient_matrix(X: PointCloud, Y: PointCloud | None, p: float) -> DistanceMatrix:
    """Distance matrix of the quotient space collapsing X to one class.

    The result has size len(Y)+1 with index 0 the collapsed class [X].
    Distances are shortest paths over X and Y together with edge cost
    |a-b|^p, except that edges between two X points are free; composing
    shortest paths shows this equals the induced quotient metric. Pass
    Y=None for an empty outlier set (1x1 zero matrix).
    """
    if not (p > 1 and math.isfinite(p)):
        raise ValueError(f"p must be finite and > 1, got {p}")
    if Y is None:
        return DistanceMatrix(np.zeros((1, 1)), kind="quotient", p=p)
    if X.ambient_dim != Y.ambient_dim:
        raise ValueError("X and Y must live in the same ambient space")
    nx, ny = X.n, Y.n
    pts = np.vstack([X.points, Y.points])
    w = _pairwise_euclidean(pts) ** p
    w[:nx, :nx] = 0.0
    sources = np.concatenate([[0], np.arange(nx, nx + ny)]).astype(np.int64)
    rows = _kernels.dijkstra_from_sources(w, sources)
    q = np.empty((ny + 1, ny + 1))
    q[0, 0] = 0.0
    q[0, 1:] = rows[0, nx:]
    q[1:, 0] = rows[1:, 0]
    q[1:, 1:] = rows[1:, nx:]
    return DistanceMatrix(_mirror_lower(q), kind="quotient", p=p)


def mds_project(D: DistanceMatrix, dim: int) -> PointCloud:
    """Classical MDS embedding of a distance matrix.

    Double-centers -1/2 J D^2 J, takes the top `dim` eigenpairs and embeds
    as eigvec * sqrt(max(eigval, 0)). Axes follow a deterministic sign
    convention: the first coordinate of each axis that is not numerically
    zero is made positive.
    """
    n = D.n
    if not (1 <= dim <= n - 1):
        raise ValueError(f"dim must be in [1, n-1], got dim={dim}, n={n}")
    if not np.all(np.isfinite(D.values)):
        raise ValueError("MDS requires a finite distance matrix")
    sq = D.values ** 2
    row = sq.mean(axis=1, keepdims=True)
    col = sq.mean(axis=0, keepdims=True)
    B = -0.5 * (sq - row - col + sq.mean())
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:dim]
    lam = np.clip(evals[order], 0.0, None)
    axes = evecs[:, order]
    for a in range(dim):
        v = axes[:, a]
        tol = 1e-12 * np.abs(v).max()
        nz = np.nonzero(np.abs(v) > tol)[0]
        if nz.size and v[nz[0]] < 0:
            axes[:, a] = -v
    coords = axes * np.sqrt(lam)[None, :]
    return PointCloud(coords, meta={"generator": "mds", "dim": dim, "source_kind": D.kind})
