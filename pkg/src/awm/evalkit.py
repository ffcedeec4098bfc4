"""Disentanglement metrics over (true, predicted) action pairs: angle, distance
and their harmonic-mean quality score, in full-dimensional and 2D-pairwise
forms, with per-reference-vertex and multi-seed aggregation plus PCA helpers.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, asdict, field

import numpy as np


@dataclass(frozen=True)
class ActionPair:
    truth: np.ndarray
    pred: np.ndarray
    vertex: int = 0  # reference-vertex group for two-stage averaging


@dataclass
class MetricReport:
    theta_2d: float
    d_2d: float
    q_2d: float
    theta_3d: float
    d_3d: float
    q_3d: float
    n_evaluated: int
    n_excluded: int
    per_vertex: dict = field(default_factory=dict)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("per_vertex")
        return d


def angle(truth, pred) -> float:
    """Angle between action vectors in degrees, in [0, 180]."""
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    nt, np_ = np.linalg.norm(truth), np.linalg.norm(pred)
    if nt == 0.0 or np_ == 0.0:
        raise ZeroActionError("angle undefined for zero-norm vector")
    cos = np.clip(np.dot(truth, pred) / (nt * np_), -1.0, 1.0)
    return float(np.degrees(np.arccos(cos)))


class ZeroActionError(ValueError):
    """Raised when an angle is requested for a zero-norm action; such samples
    are excluded from angle metrics rather than treated as failures."""


def distance(truth, pred) -> float:
    """Euclidean distance between the full action vectors."""
    return float(np.linalg.norm(np.asarray(truth, dtype=np.float64)
                                - np.asarray(pred, dtype=np.float64)))


def distance_2d(truth, pred, dims) -> float:
    """sqrt(1/2 * [(a_i - ahat_i)^2 + (a_j - ahat_j)^2]) for dimensions (i, j)."""
    i, j = dims
    if i == j:
        raise ValueError("distance_2d needs two distinct dimensions")
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    return float(np.sqrt(0.5 * ((truth[i] - pred[i]) ** 2 + (truth[j] - pred[j]) ** 2)))


def metrics_2d(truth, pred) -> tuple[float, float]:
    """Average 2D angle and distance over all n(n-1)/2 dimension pairs.

    Pairs whose projected truth vector is zero are skipped for the angle
    average only.
    """
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    n = truth.size
    if n < 2:
        raise ValueError("need at least 2 action dimensions")
    angles, dists = [], []
    for i, j in itertools.combinations(range(n), 2):
        dists.append(distance_2d(truth, pred, (i, j)))
        t2, p2 = truth[[i, j]], pred[[i, j]]
        if np.linalg.norm(t2) == 0.0 or np.linalg.norm(p2) == 0.0:
            continue
        angles.append(angle(t2, p2))
    if not angles:
        raise ZeroActionError("all 2D pairs excluded")
    return float(np.mean(angles)), float(np.mean(dists))


def overall_q(theta_degrees: float, d: float) -> float:
    """Harmonic mean of the 180-degree-normalized angle and the distance."""
    if theta_degrees < 0 or d < 0:
        raise ValueError("overall_q: inputs must be non-negative")
    theta_norm = theta_degrees / 180.0
    if theta_norm == 0.0 or d == 0.0:
        return 0.0
    return 2.0 * theta_norm * d / (theta_norm + d)


def evaluate(pairs: list[ActionPair]) -> MetricReport:
    """Per-pair metrics averaged within each reference vertex, then across
    vertices. Pairs with a zero truth action are excluded from angle- and
    q-metrics and counted in n_excluded (their distances still contribute)."""
    if not pairs:
        raise ValueError("no action pairs to evaluate")
    per_vertex: dict[int, dict[str, list[float]]] = {}
    n_excluded = 0
    n_evaluated = 0
    for ap in pairs:
        bucket = per_vertex.setdefault(ap.vertex, {k: [] for k in
                                                   ("theta_2d", "d_2d", "q_2d", "theta_3d", "d_3d", "q_3d")})
        d3 = distance(ap.truth, ap.pred)
        bucket["d_3d"].append(d3)
        try:
            th3 = angle(ap.truth, ap.pred)
            th2, d2 = metrics_2d(ap.truth, ap.pred)
        except ZeroActionError:
            n_excluded += 1
            # still count the 2D distance for excluded pairs
            _, d2 = _distances_only_2d(ap.truth, ap.pred)
            bucket["d_2d"].append(d2)
            continue
        n_evaluated += 1
        bucket["theta_3d"].append(th3)
        bucket["q_3d"].append(overall_q(th3, d3))
        bucket["theta_2d"].append(th2)
        bucket["d_2d"].append(d2)
        bucket["q_2d"].append(overall_q(th2, d2))

    vertex_means: dict[int, dict[str, float]] = {}
    for v, bucket in per_vertex.items():
        vertex_means[v] = {k: float(np.mean(vals)) for k, vals in bucket.items() if vals}
    fields = ("theta_2d", "d_2d", "q_2d", "theta_3d", "d_3d", "q_3d")
    means = {}
    for f in fields:
        vals = [vm[f] for vm in vertex_means.values() if f in vm]
        means[f] = float(np.mean(vals)) if vals else float("nan")
    return MetricReport(**means, n_evaluated=n_evaluated, n_excluded=n_excluded,
                        per_vertex=vertex_means)


def _distances_only_2d(truth, pred):
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    dists = [distance_2d(truth, pred, (i, j))
             for i, j in itertools.combinations(range(truth.size), 2)]
    return None, float(np.mean(dists))


def aggregate_seeds(reports: list[MetricReport]) -> MetricReport:
    """Fieldwise mean across seed runs; sample counts are summed."""
    if not reports:
        raise ValueError("no reports to aggregate")
    fields = ("theta_2d", "d_2d", "q_2d", "theta_3d", "d_3d", "q_3d")
    means = {f: float(np.mean([getattr(r, f) for r in reports])) for f in fields}
    return MetricReport(**means,
                        n_evaluated=sum(r.n_evaluated for r in reports),
                        n_excluded=sum(r.n_excluded for r in reports))


# -- PCA ---------------------------------------------------------------------


def pca_project(latents, k: int = 2):
    """Top-k PCA of latent vectors via covariance eigendecomposition.

    Returns (projections (N, k), components (k, D), explained_variance (k,))
    with orthonormal components, sign-fixed so each component's largest-
    magnitude entry is positive.
    """
    X = np.asarray(latents, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < k + 1:
        raise ValueError(f"need at least {k + 1} latent vectors")
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    if not np.any(cov):
        raise ValueError("degenerate input: all latents identical")
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    comps = evecs[:, order].T
    for i in range(k):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    evals = np.maximum(evals[order], 0.0)
    return Xc @ comps.T, comps, evals


# -- report emission ---------------------------------------------------------

CSV_COLUMNS = ("theta_2d", "d_2d", "q_2d", "theta_3d", "d_3d", "q_3d",
               "n_evaluated", "n_excluded")


def report_to_csv(report: MetricReport, path, label: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("label",) + CSV_COLUMNS)
        writer.writerow([label] + [getattr(report, c) for c in CSV_COLUMNS])


def report_to_json(report: MetricReport, path) -> None:
    payload = asdict(report)
    # the headline q fields average per-pair scores; also emit the score of
    # the averaged angle/distance, since either aggregation is defensible
    if np.isfinite(report.theta_2d) and np.isfinite(report.d_2d):
        payload["q_2d_of_means"] = overall_q(report.theta_2d, report.d_2d)
    if np.isfinite(report.theta_3d) and np.isfinite(report.d_3d):
        payload["q_3d_of_means"] = overall_q(report.theta_3d, report.d_3d)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
