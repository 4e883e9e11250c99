"""File formats for clouds, signals, matrices, diagrams, scores, matchings.

Floats are written with 17 significant digits so a read back is bitwise
exact. Leading lines starting with '#' are headers; readers parse the
key=value pairs they know and ignore the rest, so a '# config=...' echo
can ride along in any file.
"""

import json
import math
from pathlib import Path

import numpy as np

from .geometry import PointCloud, TimeSeries
from .metric import DistanceMatrix
from .persistence import Bar, PersistenceDiagram
from .signal import ChangePointScore

__all__ = [
    "fmt",
    "save_point_cloud", "load_point_cloud",
    "save_time_series", "load_time_series",
    "save_distance_matrix", "load_distance_matrix",
    "save_diagram", "load_diagram",
    "save_scores",
    "save_matching",
]


def fmt(x: float) -> str:
    """Round-trip exact float formatting; +inf serializes as 'inf'."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _config_line(config) -> list:
    if config is None:
        return []
    return ["# config=" + json.dumps(config, sort_keys=True)]


def _split_header(text: str):
    header = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            stripped = line[1:].strip()
            if stripped.startswith("config="):
                header["config"] = stripped[len("config="):]
            else:
                for token in stripped.split():
                    if "=" in token:
                        key, _, val = token.partition("=")
                        header.setdefault(key, val)
        else:
            body.append(line)
    return header, body


def save_point_cloud(path, cloud: PointCloud, config=None) -> None:
    lines = _config_line(config)
    for row in cloud.points:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_point_cloud(path) -> PointCloud:
    _, body = _split_header(Path(path).read_text())
    rows = [[float(tok) for tok in line.split(",")] for line in body if line.strip()]
    return PointCloud(np.array(rows), meta={"source": str(path)})


def save_time_series(path, ts: TimeSeries, config=None) -> None:
    lines = [f"# dt={fmt(ts.dt)}"] + _config_line(config)
    lines.extend(fmt(v) for v in ts.values)
    Path(path).write_text("\n".join(lines) + "\n")


def load_time_series(path) -> TimeSeries:
    header, body = _split_header(Path(path).read_text())
    if "dt" not in header:
        raise ValueError(f"{path}: missing '# dt=' header")
    values = [float(line) for line in body if line.strip()]
    return TimeSeries(np.array(values), dt=float(header["dt"]))


def save_distance_matrix(path, D: DistanceMatrix, config=None) -> None:
    head = f"# kind={D.kind} n={D.n}"
    if D.p is not None:
        head += f" p={fmt(D.p)}"
    if D.k is not None:
        head += f" k={D.k}"
    if D.rescaled:
        head += " rescaled=1"
    lines = [head] + _config_line(config)
    for i in range(D.n):
        lines.append(",".join(fmt(v) for v in D.values[i, :i]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_distance_matrix(path) -> DistanceMatrix:
    header, body = _split_header(Path(path).read_text())
    if "kind" not in header or "n" not in header:
        raise ValueError(f"{path}: missing '# kind=... n=...' header")
    n = int(header["n"])
    vals = np.zeros((n, n))
    if len(body) < n:
        raise ValueError(f"{path}: expected {n} rows, found {len(body)}")
    for i in range(n):
        entries = [float(tok) for tok in body[i].split(",") if tok.strip()]
        if len(entries) != i:
            raise ValueError(f"{path}: row {i} should have {i} entries, found {len(entries)}")
        vals[i, :i] = entries
    vals = vals + vals.T
    return DistanceMatrix(
        vals, kind=header["kind"],
        p=float(header["p"]) if "p" in header else None,
        k=int(header["k"]) if "k" in header else None,
        rescaled=header.get("rescaled") == "1")


def save_diagram(path, dgm: PersistenceDiagram, config=None) -> None:
    lines = [f"# threshold={fmt(dgm.threshold)}"] + _config_line(config)
    lines.extend(f"{b.degree},{fmt(b.birth)},{fmt(b.death)}" for b in dgm.bars)
    Path(path).write_text("\n".join(lines) + "\n")


def load_diagram(path) -> PersistenceDiagram:
    header, body = _split_header(Path(path).read_text())
    if "threshold" not in header:
        raise ValueError(f"{path}: missing '# threshold=' header")
    bars = []
    for line in body:
        if not line.strip():
            continue
        deg, birth, death = line.split(",")
        bars.append(Bar(int(deg), float(birth), float(death)))
    return PersistenceDiagram(tuple(bars), threshold=float(header["threshold"]))


def save_scores(path, score: ChangePointScore, dt: float, config=None) -> None:
    lines = _config_line(config)
    lines.append("index,time,raw,smoothed")
    for i in range(len(score.times)):
        t = score.times[i] * dt
        lines.append(f"{score.times[i]},{fmt(t)},{fmt(score.scores[i])},{fmt(score.smoothed[i])}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_matching(path, value: float, matching, config=None) -> None:
    payload = {"cost": value, "pairs": [list(p) for p in matching.pairs]}
    if config is not None:
        payload["config"] = config
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
