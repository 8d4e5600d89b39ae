"""Phase portraits and their periodic / quasiperiodic / chaotic classification.

Finite periodic chains are always periodic with some period dividing ``N``,
so the classes are heuristics with explicit tolerances:

* points are counted at ``cluster_tol`` (fine scale, the reported count);
* the class is decided after coarse-graining at ``resolution``: a label
  sequence that repeats with period equal to its cluster count is
  ``Periodic(k)``; otherwise the coarse centres are ordered by angle around
  their centroid and the largest gap is compared with the median gap, a
  closed loop giving ``Quasiperiodic`` and a dispersed set ``Chaotic``.

Both tolerances are relative to the largest ``|psi|`` in the portrait.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import LatticeWave, ModelParams
from .mapping import Orbit
from .solver import phase_function


@dataclass(frozen=True)
class ClassifyConfig:
    cluster_tol: float = 1e-6
    resolution: float = 0.05
    loop_gap_ratio: float = 4.0
    min_points: int = 8

    def __post_init__(self):
        if not self.cluster_tol > 0:
            raise ValueError("cluster_tol must be positive")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if not self.loop_gap_ratio > 1:
            raise ValueError("loop_gap_ratio must exceed 1")
        if self.min_points < 1:
            raise ValueError("min_points must be >= 1")


@dataclass(frozen=True)
class Clusters:
    labels: np.ndarray
    centers: np.ndarray
    counts: np.ndarray

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class Classification:
    kind: str  # periodic | quasiperiodic | chaotic | divergent | bloch | unclassifiable
    period: int | None = None
    gap_ratio: float | None = None
    coarse_clusters: int | None = None

    def __str__(self) -> str:
        names = {
            "periodic": f"Periodic({self.period})",
            "quasiperiodic": "Quasiperiodic",
            "chaotic": "Chaotic",
            "divergent": "Divergent",
            "bloch": "BlochLike",
            "unclassifiable": "Unclassifiable",
        }
        return names[self.kind]


@dataclass(frozen=True)
class PhasePortrait:
    points: np.ndarray
    clusters: Clusters
    tol: float
    classification: Classification

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def cluster_points(points, tol: float) -> Clusters:
    """Greedy max-norm agglomeration in input order; ``tol`` is absolute."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return Clusters(np.empty(0, dtype=np.intp), np.empty((0, 2)), np.empty(0, dtype=np.intp))
    labels, centers, counts = _kernels.greedy_cluster(pts, tol)
    return Clusters(np.asarray(labels), np.asarray(centers), np.asarray(counts))


def amplitude_scale(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    a = float(np.max(np.abs(pts[:, 0]))) if len(pts) else 0.0
    return a if a > 0 else 1.0


def label_period(labels) -> int | None:
    """Smallest ``k`` with ``labels[i] == labels[i + k]`` for every valid ``i``."""
    lab = np.asarray(labels)
    n = lab.size
    for k in range(1, n):
        if np.array_equal(lab[k:], lab[:-k]):
            return k
    return None


def loop_gap_ratio(centers) -> float:
    """Largest over median spacing of centres visited in angular order around the centroid."""
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(c) < 3:
        return math.inf
    cen = c.mean(axis=0)
    ang = np.arctan2(c[:, 1] - cen[1], c[:, 0] - cen[0])
    o = c[np.argsort(ang, kind="stable")]
    gaps = np.linalg.norm(np.roll(o, -1, axis=0) - o, axis=1)
    med = float(np.median(gaps))
    if med == 0.0:
        return math.inf
    return float(gaps.max() / med)


def classify(points, cfg: ClassifyConfig | None = None) -> Classification:
    cfg = cfg or ClassifyConfig()
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    P = len(pts)
    if P < cfg.min_points:
        return Classification("unclassifiable")
    coarse = cluster_points(pts, cfg.resolution * amplitude_scale(pts))
    k = len(coarse)
    if k <= P / 2:
        per = label_period(coarse.labels)
        lo, hi = P // k, -(-P // k)
        if per == k and np.all((coarse.counts >= lo) & (coarse.counts <= hi)):
            return Classification("periodic", period=k, coarse_clusters=k)
    if k < 3:
        return Classification("unclassifiable", coarse_clusters=k)
    ratio = loop_gap_ratio(coarse.centers)
    kind = "quasiperiodic" if ratio < cfg.loop_gap_ratio else "chaotic"
    return Classification(kind, gap_ratio=ratio, coarse_clusters=k)


def build_portrait(points, cfg: ClassifyConfig | None = None, classification: Classification | None = None) -> PhasePortrait:
    cfg = cfg or ClassifyConfig()
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    tol = cfg.cluster_tol * amplitude_scale(pts)
    cl = cluster_points(pts, tol)
    if classification is None:
        classification = classify(pts, cfg)
    return PhasePortrait(pts, cl, tol, classification)


def portrait_from_wave(w: LatticeWave, cfg: ClassifyConfig | None = None, p: ModelParams | None = None) -> PhasePortrait:
    """Portrait of a lattice state; ``BlochLike`` when ``p.E > 0`` and the points lie on an ellipse."""
    cfg = cfg or ClassifyConfig()
    pts = phase_function(w)
    cls = None
    if p is not None and bloch_check(p, w, cfg):
        cls = Classification("bloch")
    return build_portrait(pts, cfg, cls)


def portrait_from_orbit(orbit: Orbit, cfg: ClassifyConfig | None = None) -> PhasePortrait:
    cfg = cfg or ClassifyConfig()
    pts = orbit.points()
    cls = Classification("divergent") if not orbit.completed else None
    if not orbit.completed:
        pts = pts[:-1] if len(pts) > 1 else pts
    return build_portrait(pts, cfg, cls)


def fit_origin_ellipse(points) -> np.ndarray | None:
    """Least-squares ``A x^2 + B x y + C y^2 = 1``; ``None`` unless a real ellipse."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    M = np.column_stack([x * x, x * y, y * y])
    if len(pts) < 3 or np.linalg.matrix_rank(M) < 3:
        return None
    coef, *_ = np.linalg.lstsq(M, np.ones(len(pts)), rcond=None)
    A, B, C = coef
    if not (A > 0 and C > 0 and 4 * A * C - B * B > 0):
        return None
    return coef


def bloch_check(p: ModelParams, w: LatticeWave, cfg: ClassifyConfig | None = None) -> bool:
    """True when ``E > 0`` and the portrait lies on an origin-centred ellipse.

    The fit residual is measured radially: the distance from each point to
    the fitted curve along its ray from the origin must stay below
    ``cluster_tol`` times the amplitude scale.
    """
    cfg = cfg or ClassifyConfig()
    if not p.E > 0:
        return False
    pts = phase_function(w)
    if not np.any(pts):
        return False
    coef = fit_origin_ellipse(pts)
    if coef is None:
        return False
    x, y = pts[:, 0], pts[:, 1]
    q = coef[0] * x * x + coef[1] * x * y + coef[2] * y * y
    r = np.hypot(x, y)
    if np.any(q <= 0):
        return False
    dev = np.abs(r - r / np.sqrt(q))
    return bool(np.max(dev) <= cfg.cluster_tol * amplitude_scale(pts))
