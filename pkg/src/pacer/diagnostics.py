"""Post-hoc checks on trained policies: mode coverage and return quantiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actor import sample_actions_batch
from .critic import quantile_values
from .envs import BimodalBandit

MIN_MASS = 0.2
CENTER_TOL = 0.15


@dataclass
class BimodalityReport:
    n: int
    mass: np.ndarray            # fraction of samples nearest each center
    cluster_centers: np.ndarray  # mean of the samples assigned to each center
    spread: np.ndarray          # mean distance to the cluster mean
    center_error: np.ndarray    # distance from cluster mean to its target center
    passed: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mass": self.mass.tolist(),
            "cluster_centers": np.where(np.isfinite(self.cluster_centers), self.cluster_centers, None).tolist(),
            "mean_within_cluster_distance": [None if not np.isfinite(x) else float(x) for x in self.spread],
            "center_error": [None if not np.isfinite(x) else float(x) for x in self.center_error],
            "passed": self.passed,
        }


def bimodality_report(actions, centers=None, min_mass: float = MIN_MASS, tol: float = CENTER_TOL):
    """Split ``actions`` by nearest center and test that both modes are covered.

    Passes iff every cluster holds at least ``min_mass`` of the samples and
    its mean lies within ``tol`` of the center it was assigned to.
    """
    centers = BimodalBandit.centers if centers is None else np.asarray(centers, dtype=np.float64)
    a = np.asarray(actions, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != centers.shape[1] or len(a) == 0:
        raise ValueError("actions must be a non-empty (n, d) array matching the centers")
    d2 = ((a[:, None, :] - centers[None]) ** 2).sum(-1)
    label = np.argmin(d2, axis=1)
    k = len(centers)
    mass = np.bincount(label, minlength=k) / len(a)
    means = np.full(centers.shape, np.nan)
    spread = np.full(k, np.nan)
    for c in range(k):
        pts = a[label == c]
        if len(pts):
            means[c] = pts.mean(0)
            spread[c] = np.linalg.norm(pts - means[c], axis=1).mean()
    err = np.linalg.norm(means - centers, axis=1)
    passed = bool(np.all(mass >= min_mass) and np.all(np.nan_to_num(err, nan=np.inf) <= tol))
    return BimodalityReport(len(a), mass, means, spread, err, passed)


def policy_bimodality(policy, n: int = 100_000, state=None, rng=None, mode: str = "eval", normalizer=None):
    """Sample ``n`` actions at the bandit's fixed state and run :func:`bimodality_report`."""
    rng = np.random.default_rng(0) if rng is None else rng
    s = np.zeros(policy.state_dim) if state is None else np.asarray(state, dtype=np.float64)
    if normalizer is not None:
        s = normalizer.normalize(s)
    acts = sample_actions_batch(policy, s, n, mode, rng)
    return bimodality_report(acts)


def return_quantiles(critics, state, action, levels, online=0, normalizer=None):
    """Quantiles of the learned return distribution at ``(state, action)``."""
    s = np.atleast_2d(np.asarray(state, dtype=np.float64))
    if normalizer is not None:
        s = normalizer.normalize(s)
    a = np.atleast_2d(np.asarray(action, dtype=np.float64))
    lv = np.asarray(levels, dtype=np.float64)
    if np.any((lv <= 0) | (lv >= 1)):
        raise ValueError("quantile levels must lie in (0, 1)")
    return quantile_values(critics.spec, critics.online[online], s, a, lv[None, :])[0]
