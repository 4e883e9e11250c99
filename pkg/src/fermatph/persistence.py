"""Vietoris-Rips filtrations and persistent homology over Z2.

Degree 0 is computed by union-find over edges in filtration order (elder
rule: the component born from the smaller vertex index survives a merge).
Positive degrees use the standard Z2 column reduction with the clearing
optimization, applied to the anti-transposed boundary matrix; by the
duality of persistent homology and cohomology this yields the identical
diagram while keeping the number of worked columns proportional to the
number of simplices one dimension down, which is what makes full Rips
reductions tractable. The contract is only the output diagram.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels
from .metric import DistanceMatrix

__all__ = [
    "FiltrationSimplex",
    "Bar",
    "PersistenceDiagram",
    "RipsFiltration",
    "rips_filtration",
    "persistent_homology",
    "h0_mst",
    "salient_bars",
    "truncate_diagram",
]

# practical cap on the number of simplices enumerated in one dimension
_MAX_SIMPLICES = 60_000_000


@dataclass(frozen=True)
class FiltrationSimplex:
    """A simplex with its filtration value.

    vertices are strictly increasing indices; the value equals the largest
    pairwise distance among them, so faces never enter after cofaces.
    """

    vertices: tuple
    value: float

    def __post_init__(self):
        vs = tuple(int(v) for v in self.vertices)
        if any(b <= a for a, b in zip(vs, vs[1:])):
            raise ValueError(f"vertices must be strictly increasing, got {vs}")
        object.__setattr__(self, "vertices", vs)

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    @property
    def sort_key(self):
        return (self.value, self.dim, self.vertices)


class Bar(tuple):
    """(degree, birth, death) with death possibly +inf."""

    __slots__ = ()

    def __new__(cls, degree, birth, death):
        return super().__new__(cls, (int(degree), float(birth), float(death)))

    @property
    def degree(self):
        return self[0]

    @property
    def birth(self):
        return self[1]

    @property
    def death(self):
        return self[2]

    @property
    def persistence(self):
        return self[2] - self[1]

    def __repr__(self):
        return f"Bar(degree={self[0]}, birth={self[1]:g}, death={self[2]:g})"


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of bars plus the truncation threshold it was computed under.

    Bars are stored sorted by (degree, birth, death); zero-persistence bars
    are never stored. Coefficients are fixed to Z2.
    """

    bars: tuple
    threshold: float = math.inf

    coefficient_field = "Z2"

    def __post_init__(self):
        bars = tuple(sorted(Bar(*b) for b in self.bars))
        for b in bars:
            if not (b.birth >= 0):
                raise ValueError(f"negative birth in {b}")
            if not (b.death > b.birth):
                raise ValueError(f"bar must have positive persistence, got {b}")
        object.__setattr__(self, "bars", bars)

    def in_degree(self, degree: int) -> tuple:
        return tuple(b for b in self.bars if b.degree == degree)

    def finite(self, degree: int | None = None) -> tuple:
        src = self.bars if degree is None else self.in_degree(degree)
        return tuple(b for b in src if math.isfinite(b.death))

    def infinite(self, degree: int | None = None) -> tuple:
        src = self.bars if degree is None else self.in_degree(degree)
        return tuple(b for b in src if math.isinf(b.death))

    def __len__(self):
        return len(self.bars)


class RipsFiltration:
    """Array-backed, totally ordered sequence of FiltrationSimplex.

    Simplices are ordered by (value, dim, lexicographic vertex order).
    Construction is via rips_filtration; the per-dimension arrays are the
    representation the reduction consumes.
    """

    def __init__(self, n_points, max_dim, threshold, strict, effective_r,
                 verts_by_dim, values_by_dim):
        self.n_points = n_points
        self.max_dim = max_dim
        self.threshold = threshold
        self.strict = strict
        self.effective_r = effective_r
        self.verts = verts_by_dim    # dim -> (m_k, k+1) int64 arrays
        self.values = values_by_dim  # dim -> (m_k,) float64 arrays
        self._global = None

    def counts(self):
        return [len(v) for v in self.values]

    def __len__(self):
        return int(sum(self.counts()))

    def _global_order(self):
        if self._global is None:
            vals = np.concatenate(self.values) if self.values else np.empty(0)
            dims = np.concatenate([np.full(len(v), d) for d, v in enumerate(self.values)])
            self._global = np.lexsort((dims, vals))
        return self._global

    def _locate(self, flat_idx):
        offsets = np.cumsum([0] + self.counts())
        d = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        return d, int(flat_idx - offsets[d])

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not (0 <= i < n):
            raise IndexError(i)
        d, local = self._locate(self._global_order()[i])
        return FiltrationSimplex(tuple(int(v) for v in self.verts[d][local]),
                                 float(self.values[d][local]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def _stable_by_value(vals):
    """Sort order by value keeping lexicographic emission order on ties."""
    return np.argsort(vals, kind="stable")


def _below(vals, r, strict):
    return vals < r if strict else vals <= r


def _combinations_block(n, dim, d_mat, r, strict):
    """All (dim)-simplices below threshold, lexicographic order. Used for
    dim >= 3 where workloads are small."""
    est = math.comb(n, dim + 1)
    if est > _MAX_SIMPLICES:
        raise ValueError(
            f"refusing to enumerate ~{est} simplices of dimension {dim}; "
            "lower max_dim or the threshold")
    combos = np.array(list(itertools.combinations(range(n), dim + 1)), dtype=np.int64)
    if combos.size == 0:
        return combos.reshape(0, dim + 1), np.empty(0)
    vals = np.zeros(len(combos))
    for a in range(dim + 1):
        for b in range(a + 1, dim + 1):
            np.maximum(vals, d_mat[combos[:, a], combos[:, b]], out=vals)
    keep = _below(vals, r, strict)
    return combos[keep], vals[keep]


def rips_filtration(D: DistanceMatrix, max_dim: int, r: float | None = None) -> RipsFiltration:
    """All simplices of dimension <= max_dim + 1 below the threshold.

    max_dim is the top homology degree requested; computing H_k needs
    simplices up to dimension k+1. A finite r realizes the truncated
    filtration with strict inequality value < r; r = +inf enumerates every
    simplex. When r is omitted the enumeration stops at the enclosing
    radius (min over i of max over j of D_ij, inclusively): beyond it the
    complex is a cone, so the diagram equals the full one at a fraction of
    the cost, and the recorded threshold is +inf accordingly.
    """
    if max_dim < 0:
        raise ValueError(f"max_dim must be >= 0, got {max_dim}")
    if r is not None and not (r > 0):
        raise ValueError(f"r must be positive, got {r}")
    d = D.values
    n = D.n
    if r is None or math.isinf(r):
        strict = False
        if r is not None:
            if not np.all(np.isfinite(d)):
                raise ValueError("matrix has +inf entries; pass a finite threshold r")
            effective_r = math.inf
        elif n > 1:
            off = d + np.where(np.eye(n, dtype=bool), -np.inf, 0.0)
            effective_r = float(off.max(axis=1).min())
            if math.isinf(effective_r):
                raise ValueError("matrix has +inf entries; pass a finite threshold r")
        else:
            effective_r = 0.0
        r = math.inf
    else:
        strict = True
        effective_r = float(r)

    verts_by_dim = [np.arange(n, dtype=np.int64).reshape(n, 1)]
    values_by_dim = [np.zeros(n)]
    top = max_dim + 1
    if top >= 1 and n > 1:
        iu, ju = np.triu_indices(n, 1)
        ev = d[iu, ju]
        keep = _below(ev, effective_r, strict)
        iu, ju, ev = iu[keep], ju[keep], ev[keep]
        order = _stable_by_value(ev)
        verts_by_dim.append(np.stack([iu[order], ju[order]], axis=1).astype(np.int64))
        values_by_dim.append(ev[order])
    elif top >= 1:
        verts_by_dim.append(np.empty((0, 2), dtype=np.int64))
        values_by_dim.append(np.empty(0))
    if top >= 2:
        count = _kernels.count_cliques_3(d, effective_r, strict)
        if count > _MAX_SIMPLICES:
            raise ValueError(f"refusing to enumerate {count} triangles; "
                             "lower max_dim or the threshold")
        ti = np.empty(count, dtype=np.int64)
        tj = np.empty(count, dtype=np.int64)
        tk = np.empty(count, dtype=np.int64)
        tv = np.empty(count, dtype=np.float64)
        _kernels.fill_cliques_3(d, effective_r, strict, ti, tj, tk, tv)
        order = _stable_by_value(tv)
        verts_by_dim.append(np.stack([ti[order], tj[order], tk[order]], axis=1))
        values_by_dim.append(tv[order])
    for dim in range(3, top + 1):
        combos, vals = _combinations_block(n, dim, d, effective_r, strict)
        order = _stable_by_value(vals)
        verts_by_dim.append(combos[order])
        values_by_dim.append(vals[order])
    return RipsFiltration(n, max_dim, r, strict, effective_r,
                          verts_by_dim, values_by_dim)


@njit(cache=True)
def _csr_reverse(facet_cols, n_cols):
    """Anti-transposed CSR: entry (col=facet, row=cofacet) with both ids
    reversed; per-column rows come out ascending."""
    m, nf = facet_cols.shape
    counts = np.zeros(n_cols + 1, dtype=np.int64)
    for t in range(m):
        for f in range(nf):
            counts[n_cols - 1 - facet_cols[t, f] + 1] += 1
    ptr = np.empty(n_cols + 1, dtype=np.int64)
    ptr[0] = 0
    for c in range(n_cols):
        ptr[c + 1] = ptr[c] + counts[c + 1]
    fill = ptr[:n_cols].copy()
    rows = np.empty(ptr[n_cols], dtype=np.int64)
    for t in range(m - 1, -1, -1):
        rr = m - 1 - t
        for f in range(nf):
            c = n_cols - 1 - facet_cols[t, f]
            rows[fill[c]] = rr
            fill[c] += 1
    return ptr, rows


def _edge_ids(n, edges):
    eid = np.full((n, n), -1, dtype=np.int64)
    idx = np.arange(len(edges))
    eid[edges[:, 0], edges[:, 1]] = idx
    eid[edges[:, 1], edges[:, 0]] = idx
    return eid


def _facet_id_lookup(verts_k):
    return {tuple(row): i for i, row in enumerate(verts_k.tolist())}


def _facet_matrix(filtration, k):
    """Ids of the k-dimensional facets of every (k+1)-simplex."""
    upper = filtration.verts[k + 1]
    m = len(upper)
    if k == 0:
        return upper.copy()
    if k == 1:
        eid = _edge_ids(filtration.n_points, filtration.verts[1])
        cols = np.stack([eid[upper[:, 0], upper[:, 1]],
                         eid[upper[:, 0], upper[:, 2]],
                         eid[upper[:, 1], upper[:, 2]]], axis=1)
    else:
        lookup = _facet_id_lookup(filtration.verts[k])
        cols = np.empty((m, k + 2), dtype=np.int64)
        for t, row in enumerate(upper.tolist()):
            for drop in range(k + 2):
                face = tuple(row[:drop] + row[drop + 1:])
                cols[t, drop] = lookup[face]
    if np.any(cols < 0):
        raise ValueError("filtration is not closed under faces")
    return cols


def _validate_simplex_list(simplices):
    """Check ordering and face closure of a manual filtration, then pack it
    into per-dimension arrays."""
    sims = list(simplices)
    seen = {}
    last_key = None
    for s in sims:
        if not isinstance(s, FiltrationSimplex):
            raise TypeError(f"expected FiltrationSimplex, got {type(s).__name__}")
        key = s.sort_key
        if last_key is not None and key < last_key:
            raise ValueError("filtration is not sorted by (value, dim, vertices)")
        last_key = key
        seen[s.vertices] = s.value
        if s.dim > 0:
            for drop in range(s.dim + 1):
                face = s.vertices[:drop] + s.vertices[drop + 1:]
                if face not in seen:
                    raise ValueError(f"face {face} of {s.vertices} missing or later")
                if seen[face] > s.value:
                    raise ValueError(f"face {face} enters after {s.vertices}")
    if not sims:
        raise ValueError("empty filtration")
    n = max(v for s in sims for v in s.vertices) + 1
    vertex_set = {s.vertices[0] for s in sims if s.dim == 0}
    if vertex_set != set(range(n)):
        raise ValueError("filtration must contain every vertex 0..n-1 as a 0-simplex")
    top = max(s.dim for s in sims)
    verts_by_dim, values_by_dim = [], []
    for dim in range(top + 1):
        block = [s for s in sims if s.dim == dim]
        verts_by_dim.append(np.array([s.vertices for s in block], dtype=np.int64).reshape(len(block), dim + 1))
        values_by_dim.append(np.array([s.value for s in block]))
    return RipsFiltration(n, top - 1 if top > 0 else 0, math.inf, False,
                          math.inf, verts_by_dim, values_by_dim)


def persistent_homology(filtration) -> PersistenceDiagram:
    """Persistence diagram of a filtration over Z2.

    Accepts a RipsFiltration or any sorted, face-closed sequence of
    FiltrationSimplex. Bars of zero persistence are dropped; each component
    alive at the threshold yields one infinite degree-0 bar, and classes of
    positive degree alive at a finite threshold are recorded with death
    +inf at that threshold.
    """
    if not isinstance(filtration, RipsFiltration):
        filtration = _validate_simplex_list(filtration)
    f = filtration
    n = f.n_points
    bars = []

    # degree 0: union-find over edges in filtration order
    if len(f.verts) > 1 and len(f.verts[1]):
        edges = f.verts[1]
        evals = f.values[1]
        merge, comps = _kernels.union_find_merges(
            n, edges[:, 0].astype(np.int64), edges[:, 1].astype(np.int64))
        for w in evals[merge]:
            if w > 0:
                bars.append(Bar(0, 0.0, float(w)))
    else:
        merge = np.zeros(0, dtype=bool)
        comps = n
    bars.extend(Bar(0, 0.0, math.inf) for _ in range(comps))

    # positive degrees via anti-transposed column reduction with clearing
    cleared = merge  # deaths of degree k-1, over k-simplices
    for k in range(1, f.max_dim + 1):
        if len(f.verts) <= k + 1:
            break
        m_k = len(f.values[k])
        m_up = len(f.values[k + 1])
        if m_k == 0:
            break
        if m_up == 0:
            for e in range(m_k):
                if not cleared[e]:
                    bars.append(Bar(k, float(f.values[k][e]), math.inf))
            break
        facets = _facet_matrix(f, k)
        ptr, rows = _csr_reverse(facets, m_k)
        skip = cleared[::-1].copy()
        piv = _kernels.reduce_columns(ptr, rows, m_up, skip)
        death_up = np.zeros(m_up, dtype=bool)
        vals_k = f.values[k]
        vals_up = f.values[k + 1]
        for jr in range(m_k):
            if skip[jr]:
                continue
            e = m_k - 1 - jr
            if piv[jr] >= 0:
                t = m_up - 1 - piv[jr]
                death_up[t] = True
                if vals_up[t] > vals_k[e]:
                    bars.append(Bar(k, float(vals_k[e]), float(vals_up[t])))
            else:
                bars.append(Bar(k, float(vals_k[e]), math.inf))
        cleared = death_up

    return PersistenceDiagram(tuple(bars), threshold=f.threshold)


def h0_mst(D: DistanceMatrix) -> PersistenceDiagram:
    """Degree-0 diagram straight from a minimum spanning forest.

    Finite deaths are the forest edge weights (a classical equivalence with
    the reduction output, exercised as a cross-oracle in the tests); one
    infinite bar per component.
    """
    weights, count, comps = _kernels.prim_forest(D.values)
    bars = [Bar(0, 0.0, float(w)) for w in weights[:count] if w > 0]
    bars.extend(Bar(0, 0.0, math.inf) for _ in range(comps))
    return PersistenceDiagram(tuple(bars), threshold=math.inf)


def salient_bars(dgm: PersistenceDiagram, degree: int, ratio: float = 0.3) -> int:
    """Number of finite bars whose persistence is at least ratio times the
    largest finite persistence in that degree; 0 when no finite bars exist."""
    if not (0 < ratio < 1):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    fin = dgm.finite(degree)
    if not fin:
        return 0
    top = max(b.persistence for b in fin)
    return sum(b.persistence >= ratio * top for b in fin)


def truncate_diagram(dgm: PersistenceDiagram, r: float) -> PersistenceDiagram:
    """Clip a diagram to the strictly-below-r filtration.

    Bars born at or after r disappear; deaths at or after r (the killing
    simplex is excluded by strictness) become +inf at the new threshold.
    """
    if not (r <= dgm.threshold):
        raise ValueError(f"can only truncate below the current threshold {dgm.threshold}")
    out = []
    for b in dgm.bars:
        if b.birth >= r:
            continue
        death = b.death if b.death < r else math.inf
        out.append(Bar(b.degree, b.birth, death))
    return PersistenceDiagram(tuple(out), threshold=r)
