"""Delay embeddings, time-evolving diagrams and change-point scoring.

The prefix diagrams use the metric inherited from the full sample: the
power-weighted shortest-path matrix is computed once on all embedded
points and prefixes take leading sub-matrices, rather than recomputing
distances per prefix (a flag restores the recomputed behavior for
comparison).
"""

import math
from dataclasses import dataclass

import numpy as np

from .comparison import bottleneck
from .geometry import PointCloud, TimeSeries
from .metric import DistanceMatrix, fermat_matrix
from .persistence import persistent_homology, rips_filtration

__all__ = [
    "DelayParams",
    "ChangePointScore",
    "delay_embed",
    "evolving_diagrams",
    "change_point_score",
    "detect_peaks",
]


@dataclass(frozen=True)
class DelayParams:
    """Delay tau (in samples), embedding dimension, and subsampling stride."""

    tau: int
    dim: int
    stride: int = 1

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.dim < 2:
            raise ValueError(f"embedding dimension must be >= 2, got {self.dim}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    @property
    def window(self) -> int:
        """Number of samples one embedded point spans, minus one."""
        return (self.dim - 1) * self.tau


@dataclass(frozen=True)
class ChangePointScore:
    """Bottleneck-derivative scores between consecutive prefix diagrams.

    times are sample indices aligned to the later prefix of each pair;
    smoothed is a centered moving average of scores.
    """

    times: np.ndarray
    scores: np.ndarray
    smoothed: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.int64)
        s = np.asarray(self.scores, dtype=np.float64)
        m = np.asarray(self.smoothed, dtype=np.float64)
        if not (len(t) == len(s) == len(m)):
            raise ValueError("times, scores and smoothed must have equal length")
        if np.any(s < 0) or np.any(m < -1e-15):
            raise ValueError("scores must be non-negative")
        for name, arr in (("times", t), ("scores", s), ("smoothed", m)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def delay_embed(ts: TimeSeries, params: DelayParams) -> PointCloud:
    """Sliding-window delay embedding of a scalar series.

    Point i is (x_i, x_{i+tau}, ..., x_{i+(dim-1)tau}) for window starts
    i = 0, stride, 2*stride, ...; the series must be longer than the span
    (dim-1)*tau of one window.
    """
    n = ts.n
    span = params.window
    if n <= span:
        raise ValueError(
            f"series of length {n} too short for dim={params.dim}, tau={params.tau} "
            f"(needs more than {span} samples)")
    starts = np.arange(0, n - span, params.stride)
    idx = starts[:, None] + params.tau * np.arange(params.dim)[None, :]
    return PointCloud(ts.values[idx], meta={"generator": "delay_embed",
                                            "tau": params.tau, "dim": params.dim,
                                            "stride": params.stride})


def evolving_diagrams(ts: TimeSeries, params: DelayParams, p: float, step: int,
                      degree: int, recompute: bool = False):
    """Diagrams of growing prefixes of the delay embedding.

    Returns [(j, diagram)] for prefix sizes j = step, 2*step, ... capped at
    the full embedding size (which is always included as the last entry).
    Each prefix carries the metric inherited from the full sample: the
    leading j-by-j block of the full matrix. With recompute=True the
    matrix is recomputed on each prefix instead.
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    cloud = delay_embed(ts, params)
    n = cloud.n
    js = list(range(step, n + 1, step))
    if not js or js[-1] != n:
        js.append(n)
    full = fermat_matrix(cloud, p)
    out = []
    for j in js:
        if recompute and j < n:
            sub = fermat_matrix(PointCloud(cloud.points[:j]), p)
        else:
            sub = DistanceMatrix(full.values[:j, :j].copy(), kind="fermat", p=p)
        dgm = persistent_homology(rips_filtration(sub, max_dim=degree))
        out.append((j, dgm))
    return out


def change_point_score(diagrams, dt: float, degree: int, window: int = 1,
                       stride: int = 1) -> ChangePointScore:
    """First-order derivative of the diagram curve.

    score_i = d_b(dgm_i, dgm_{i-1}) / (t_i - t_{i-1}), where t maps prefix
    size j to the sample index (j - 1) * stride of the newest embedded
    point. A centered moving average over `window` entries is attached;
    window = 1 leaves the raw scores.
    """
    if len(diagrams) < 2:
        raise ValueError("need at least two diagrams")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    idx = np.array([(j - 1) * stride for j, _ in diagrams], dtype=np.int64)
    dgms = [d for _, d in diagrams]
    scores = np.empty(len(dgms) - 1)
    for i in range(1, len(dgms)):
        db, _ = bottleneck(dgms[i], dgms[i - 1], degree)
        scores[i - 1] = db / ((idx[i] - idx[i - 1]) * dt)
    kernel = np.ones(min(window, len(scores)))
    smoothed = np.convolve(scores, kernel, mode="same") / np.convolve(
        np.ones_like(scores), kernel, mode="same")
    return ChangePointScore(times=idx[1:], scores=scores, smoothed=smoothed)


def detect_peaks(score: ChangePointScore, z: float = 3.0) -> np.ndarray:
    """Local maxima of the smoothed score exceeding mean + z * std.

    Returns indices into the score sequence; map through score.times for
    sample positions. A constant score has no peaks.
    """
    if not (z > 0):
        raise ValueError(f"z must be positive, got {z}")
    s = score.smoothed
    thr = s.mean() + z * s.std()
    peaks = []
    for i in range(len(s)):
        if not (s[i] > thr):
            continue
        left = s[i - 1] if i > 0 else -math.inf
        right = s[i + 1] if i + 1 < len(s) else -math.inf
        if s[i] >= right and (i == 0 or s[i] > left):
            peaks.append(i)
    return np.array(peaks, dtype=np.int64)
