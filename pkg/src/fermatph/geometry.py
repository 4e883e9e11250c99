"""Synthetic point clouds and signals with reproducible randomness.

All generators draw from numpy's Philox bit generator, a seedable 64-bit
counter-based RNG whose streams are identical across platforms, so every
fixture is bitwise reproducible from (parameters, seed).
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointCloud",
    "TimeSeries",
    "gen_eyeglasses",
    "gen_trefoil",
    "gen_outliers",
    "lorenz_series",
    "gen_uniform_manifold",
    "geodesic_matrix",
    "population_fermat_matrix",
    "trefoil_point",
    "eyeglasses_arclength",
]

MANIFOLD_KINDS = ("circle", "sphere", "flat_torus")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud:
    """n points in R^D plus provenance metadata.

    points is an (n, D) float64 array, made read-only on construction.
    """

    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", _freeze(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal with sampling step dt."""

    values: np.ndarray
    dt: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError(f"values must be 1-d, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("signal values must be finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be a positive finite number, got {self.dt}")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _check_noise(noise_sd: float):
    if not (math.isfinite(noise_sd) and noise_sd >= 0):
        raise ValueError(f"noise_sd must be finite and >= 0, got {noise_sd}")


def eyeglasses_arclength(reach: float = 0.5, center_dist: float = 2.0):
    """Piecewise description of the eyeglasses curve, parameterized by arclength.

    The curve is two unit circles centered at (+-center_dist, 0) joined by two
    horizontal segments at heights +-reach, so the neck gap is 2*reach and the
    narrowest feature of the curve sits at that scale. Returns
    (total_length, point_at) where point_at maps arclength values to R^2.
    """
    if not (0 < reach < 1):
        raise ValueError(f"reach must be in (0, 1), got {reach}")
    sx = math.sqrt(1.0 - reach * reach)
    if not (center_dist > sx):
        raise ValueError(f"center_dist must exceed {sx:.6f} to leave room for the neck")
    a = math.asin(reach)
    arc = 2.0 * (math.pi - a)
    seg = 2.0 * (center_dist - sx)
    total = 2.0 * arc + 2.0 * seg
    cuts = np.array([arc, arc + seg, 2 * arc + seg, total])

    def point_at(s):
        s = np.asarray(s, dtype=np.float64) % total
        x = np.empty(s.shape)
        y = np.empty(s.shape)
        # right circle outer arc, from the upper junction clockwise
        m = s < cuts[0]
        ang = (math.pi - a) - s[m]
        x[m] = center_dist + np.cos(ang)
        y[m] = np.sin(ang)
        # bottom segment, right to left
        m = (s >= cuts[0]) & (s < cuts[1])
        x[m] = (center_dist - sx) - (s[m] - cuts[0])
        y[m] = -reach
        # left circle outer arc, from the lower junction clockwise
        m = (s >= cuts[1]) & (s < cuts[2])
        ang = -a - (s[m] - cuts[1])
        x[m] = -center_dist + np.cos(ang)
        y[m] = np.sin(ang)
        # top segment, left to right
        m = s >= cuts[2]
        x[m] = (-center_dist + sx) + (s[m] - cuts[2])
        y[m] = reach
        return np.stack([x, y], axis=-1)

    return total, point_at


def gen_eyeglasses(n: int, noise_sd: float, seed: int,
                   reach: float = 0.5, center_dist: float = 2.0) -> PointCloud:
    """Planar eyeglasses curve sampled evenly by arclength plus Gaussian noise.

    Two unit circles at (+-center_dist, 0) joined by horizontal segments at
    heights +-reach; the neck gap is 2*reach (default 1.0). The noise level
    has no default because there is no canonical choice; pass 0 for points
    exactly on the curve.
    """
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    _check_noise(noise_sd)
    total, point_at = eyeglasses_arclength(reach, center_dist)
    s = np.arange(n) * (total / n)
    pts = point_at(s)
    if noise_sd > 0:
        pts = pts + noise_sd * _rng(seed).standard_normal(pts.shape)
    return PointCloud(pts, meta={"generator": "eyeglasses", "seed": seed,
                                 "reach": reach, "center_dist": center_dist,
                                 "noise_sd": noise_sd})


def trefoil_point(t):
    """Trefoil knot curve in R^3 at parameter values t."""
    t = np.asarray(t, dtype=np.float64)
    return np.stack([np.sin(t) + 2 * np.sin(2 * t),
                     np.cos(t) - 2 * np.cos(2 * t),
                     -np.sin(3 * t)], axis=-1)


def gen_trefoil(n: int, noise_sd: float, seed: int) -> PointCloud:
    """Trefoil knot sampled at evenly spaced parameter values plus noise."""
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    _check_noise(noise_sd)
    t = np.arange(n) * (2 * math.pi / n)
    pts = trefoil_point(t)
    if noise_sd > 0:
        pts = pts + noise_sd * _rng(seed).standard_normal(pts.shape)
    return PointCloud(pts, meta={"generator": "trefoil", "seed": seed,
                                 "noise_sd": noise_sd})


def gen_outliers(cloud: PointCloud, m: int, min_gap: float, seed: int,
                 max_attempts: int | None = None) -> PointCloud:
    """Rejection-sample m outlier points around a cloud.

    Candidates are drawn uniformly from the cloud's bounding box inflated by
    25 percent. A candidate is kept when it stays at least min_gap away from
    the cloud and from the outliers already placed, which guarantees both the
    internal spacing of the result and its gap to the cloud are >= min_gap.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (min_gap > 0 and math.isfinite(min_gap)):
        raise ValueError(f"min_gap must be positive and finite, got {min_gap}")
    if max_attempts is None:
        max_attempts = 20000 * m
    rng = _rng(seed)
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    span = hi - lo
    pad = 0.125 * np.where(span > 0, span, 1.0)
    lo = lo - pad
    hi = hi + pad
    placed = np.empty((m, cloud.ambient_dim))
    count = 0
    gap2 = min_gap * min_gap
    for _ in range(max_attempts):
        cand = rng.uniform(lo, hi)
        d2_cloud = ((cloud.points - cand) ** 2).sum(axis=1).min()
        if d2_cloud < gap2:
            continue
        if count and (((placed[:count] - cand) ** 2).sum(axis=1).min() < gap2):
            continue
        placed[count] = cand
        count += 1
        if count == m:
            break
    if count < m:
        raise RuntimeError(
            f"cannot place outliers: {count}/{m} accepted after {max_attempts} attempts "
            f"(min_gap={min_gap})")
    out = PointCloud(placed, meta={"generator": "outliers", "seed": seed,
                                   "min_gap": min_gap, "base": cloud.meta.get("generator")})
    # re-check the contract with the metric module's own definitions
    from . import metric
    assert metric.minimal_spacing(out) >= min_gap
    assert metric.outlier_delta(cloud, out) >= min_gap
    return out


def _lorenz_rhs(state, sigma, rho, beta):
    x, y, z = state
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def lorenz_series(t_max: float, dt: float, sigma: float = 10.0, rho: float = 28.0,
                  beta: float = 8.0 / 3.0, x0=(1.0, 1.0, 1.0), noise_sd: float = 0.0,
                  seed: int = 0) -> TimeSeries:
    """x-coordinate of a fixed-step RK4 integration of the Lorenz system.

    The series holds the state after each step (t = dt, 2*dt, ..., t_max),
    with additive Gaussian observation noise of standard deviation noise_sd.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    if not (t_max >= dt):
        raise ValueError(f"t_max must be at least dt, got t_max={t_max}, dt={dt}")
    _check_noise(noise_sd)
    state = np.asarray(x0, dtype=np.float64)
    if state.shape != (3,) or not np.all(np.isfinite(state)):
        raise ValueError("x0 must be a finite 3-vector")
    steps = int(round(t_max / dt))
    xs = np.empty(steps)
    # divergence is detected by the finiteness check, not float warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            k1 = _lorenz_rhs(state, sigma, rho, beta)
            k2 = _lorenz_rhs(state + 0.5 * dt * k1, sigma, rho, beta)
            k3 = _lorenz_rhs(state + 0.5 * dt * k2, sigma, rho, beta)
            k4 = _lorenz_rhs(state + dt * k3, sigma, rho, beta)
            state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(state)):
                raise FloatingPointError(f"trajectory diverged at step {k + 1}")
            xs[k] = state[0]
    if noise_sd > 0:
        xs = xs + noise_sd * _rng(seed).standard_normal(steps)
    return TimeSeries(xs, dt)


def gen_uniform_manifold(kind: str, n: int, noise_sd: float, seed: int) -> PointCloud:
    """Uniform random sample from a unit manifold with known geometry.

    circle: unit circle in R^2. sphere: unit sphere in R^3. flat_torus:
    product of two unit circles embedded in R^4. Sampling is uniform with
    respect to the volume measure; optional isotropic Gaussian noise is
    added in the ambient space.
    """
    if kind not in MANIFOLD_KINDS:
        raise ValueError(f"unknown manifold kind {kind!r}, expected one of {MANIFOLD_KINDS}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _check_noise(noise_sd)
    rng = _rng(seed)
    if kind == "circle":
        theta = rng.uniform(0, 2 * math.pi, n)
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    elif kind == "sphere":
        g = rng.standard_normal((n, 3))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        t1 = rng.uniform(0, 2 * math.pi, n)
        t2 = rng.uniform(0, 2 * math.pi, n)
        pts = np.stack([np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2)], axis=1)
    if noise_sd > 0:
        pts = pts + noise_sd * rng.standard_normal(pts.shape)
    return PointCloud(pts, meta={"generator": kind, "seed": seed, "noise_sd": noise_sd})


def _angle_dist(t1, t2):
    d = np.abs(t1[:, None] - t2[None, :])
    return np.minimum(d, 2 * math.pi - d)


def geodesic_matrix(kind: str, cloud: PointCloud) -> np.ndarray:
    """Exact geodesic distances for points on one of the unit manifolds.

    Points are projected to the manifold first, so small ambient noise is
    tolerated. Returns a plain (n, n) float64 array.
    """
    pts = cloud.points
    if kind == "circle":
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        return _angle_dist(theta, theta)
    if kind == "sphere":
        u = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        c = np.clip(u @ u.T, -1.0, 1.0)
        return np.arccos(c)
    if kind == "flat_torus":
        t1 = np.arctan2(pts[:, 1], pts[:, 0])
        t2 = np.arctan2(pts[:, 3], pts[:, 2])
        return np.sqrt(_angle_dist(t1, t1) ** 2 + _angle_dist(t2, t2) ** 2)
    raise ValueError(f"unknown manifold kind {kind!r}")


MANIFOLD_INTRINSIC_DIM = {"circle": 1, "sphere": 2, "flat_torus": 2}
MANIFOLD_VOLUME = {"circle": 2 * math.pi, "sphere": 4 * math.pi,
                   "flat_torus": (2 * math.pi) ** 2}


def population_fermat_matrix(kind: str, cloud: PointCloud, p: float) -> np.ndarray:
    """Analytic density-based intrinsic distances for a uniform sample.

    With a uniform density f = 1/Vol the intrinsic distance is the geodesic
    distance scaled by Vol^((p-1)/d); this is the exact target the rescaled
    graph estimator converges to.
    """
    d = MANIFOLD_INTRINSIC_DIM[kind]
    vol = MANIFOLD_VOLUME[kind]
    return vol ** ((p - 1.0) / d) * geodesic_matrix(kind, cloud)
