"""Gaussian mixture fitting by EM and confidence-ranked difficulty assignment.

Full-covariance mixtures fitted on scaled feature matrices; the three fitted
clusters are ranked by their mean raw gold-label confidence (a quantity the
scaled features no longer carry) into easy / ambiguous / hard. Fits are
bit-reproducible for a given seed: restarts use sub-seeds spawned from the
main seed, and all reductions run in a fixed order.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .features import ScaledFeatureMatrix

DIFFICULTY_ORDER = ("easy", "ambiguous", "hard")

_KMEANS_REFINE_STEPS = 10
_MIN_COMPONENT_MASS = 1e-10


class EmptyClusterError(RuntimeError):
    """A fitted cluster received no instances; refitting with a new seed is
    the intended remedy."""


@dataclass
class GmmModel:
    k: int
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    seed: int
    log_likelihood: float
    n_iter: int
    converged: bool
    best_restart: int
    ll_trajectories: tuple[tuple[float, ...], ...]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class DifficultyAssignment:
    """Hard cluster assignment plus the cluster-to-difficulty ranking.

    ``cluster_confidence`` / ``cluster_difficulty`` are indexed by cluster id;
    assignments read back from CSV carry an empty ``cluster_confidence``.
    """

    instance_ids: tuple[str, ...]
    cluster_ids: tuple[int, ...]
    difficulties: tuple[str, ...]
    max_responsibilities: tuple[float, ...]
    cluster_confidence: tuple[float, ...]
    cluster_difficulty: tuple[str, ...]

    def difficulty_map(self) -> dict[str, str]:
        return dict(zip(self.instance_ids, self.difficulties))


def _as_matrix(X) -> np.ndarray:
    if isinstance(X, ScaledFeatureMatrix):
        X = X.matrix
    x = np.asarray(X, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in feature matrix")
    return x


def _kmeans_plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[int(rng.integers(n))]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _kmeans_refine(x: np.ndarray, centers: np.ndarray, steps: int) -> np.ndarray:
    for _ in range(steps):
        dists = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = dists.argmin(axis=1)
        for j in range(centers.shape[0]):
            mask = labels == j
            if mask.any():
                centers[j] = x[mask].mean(axis=0)
            # an empty cluster keeps its previous center
    return centers


def _log_gaussians(x: np.ndarray, means: np.ndarray, covariances: np.ndarray) -> np.ndarray:
    """(N, K) log densities via Cholesky factors; covariances must be SPD."""
    n, d = x.shape
    k = means.shape[0]
    out = np.empty((n, k))
    const = d * math.log(2.0 * math.pi)
    for j in range(k):
        chol = np.linalg.cholesky(covariances[j])
        sol = solve_triangular(chol, (x - means[j]).T, lower=True)
        maha = (sol**2).sum(axis=0)
        logdet = 2.0 * np.log(np.diag(chol)).sum()
        out[:, j] = -0.5 * (const + logdet + maha)
    return out


def _e_step(x, weights, means, covariances):
    log_prob = _log_gaussians(x, means, covariances) + np.log(weights)[None, :]
    row_max = log_prob.max(axis=1)
    lse = row_max + np.log(np.exp(log_prob - row_max[:, None]).sum(axis=1))
    resp = np.exp(log_prob - lse[:, None])
    return resp, float(lse.sum())


def _m_step(x, resp, means, covariances, epsilon):
    n, d = x.shape
    k = resp.shape[1]
    nk = resp.sum(axis=0)
    new_means = means.copy()
    new_covs = covariances.copy()
    eye = np.eye(d)
    for j in range(k):
        if nk[j] < _MIN_COMPONENT_MASS:
            nk[j] = _MIN_COMPONENT_MASS  # starved component keeps its parameters
            continue
        mu = resp[:, j] @ x / nk[j]
        diff = x - mu
        cov = (resp[:, j, None] * diff).T @ diff / nk[j]
        new_means[j] = mu
        new_covs[j] = 0.5 * (cov + cov.T) + epsilon * eye
    weights = nk / nk.sum()
    return weights, new_means, new_covs


def fit_gmm(
    X,
    k: int = 3,
    seed: int = 0,
    n_init: int = 10,
    max_iter: int = 200,
    tol: float = 1e-6,
    epsilon: float = 1e-6,
) -> GmmModel:
    """Fit a full-covariance GMM by EM; the best of ``n_init`` restarts wins.

    Means are initialized by k-means++ seeding plus a few k-means refinement
    steps, covariances start at the global covariance, weights uniform.
    ``epsilon`` is added to covariance diagonals every M-step so near
    duplicate rows (constant dynamics are common) cannot produce a singular
    component. Convergence: relative log-likelihood improvement below ``tol``.
    """
    x = _as_matrix(X)
    n, d = x.shape
    if n <= k:
        raise ValueError(f"need more points than components: N={n}, K={k}")
    if k < 1 or n_init < 1 or max_iter < 1:
        raise ValueError("k, n_init and max_iter must all be >= 1")

    if np.all(x == x[0]):
        warnings.warn(
            "all feature rows are identical; the fit is degenerate and covariances reduce to epsilon*I",
            RuntimeWarning,
            stacklevel=2,
        )

    centered = x - x.mean(axis=0)
    global_cov = centered.T @ centered / n + epsilon * np.eye(d)

    best: tuple | None = None
    trajectories: list[tuple[float, ...]] = []
    for restart, child_seed in enumerate(np.random.SeedSequence(seed).spawn(n_init)):
        rng = np.random.default_rng(child_seed)
        means = _kmeans_refine(x, _kmeans_plus_plus(x, k, rng), _KMEANS_REFINE_STEPS)
        covariances = np.repeat(global_cov[None, :, :], k, axis=0)
        weights = np.full(k, 1.0 / k)

        traj: list[float] = []
        prev_ll = None
        converged = False
        n_steps = 0
        for _ in range(max_iter):
            resp, ll = _e_step(x, weights, means, covariances)
            traj.append(ll)
            if prev_ll is not None and abs(ll - prev_ll) <= tol * max(1.0, abs(prev_ll)):
                converged = True
                break
            prev_ll = ll
            weights, means, covariances = _m_step(x, resp, means, covariances, epsilon)
            n_steps += 1
        if not converged:
            # score the parameters left by the last M-step
            _, ll = _e_step(x, weights, means, covariances)
            traj.append(ll)

        trajectories.append(tuple(traj))
        if best is None or traj[-1] > best[0]:
            best = (traj[-1], restart, weights, means, covariances, n_steps, converged)

    assert best is not None
    ll, restart, weights, means, covariances, n_steps, converged = best
    return GmmModel(
        k=k,
        weights=weights,
        means=means,
        covariances=covariances,
        seed=seed,
        log_likelihood=ll,
        n_iter=n_steps,
        converged=converged,
        best_restart=restart,
        ll_trajectories=tuple(trajectories),
    )


def responsibilities(model: GmmModel, X) -> np.ndarray:
    """Posterior component probabilities, (N, K); rows sum to 1."""
    x = _as_matrix(X)
    if x.shape[1] != model.dim:
        raise ValueError(f"dimension mismatch: model is {model.dim}-D, data is {x.shape[1]}-D")
    resp, _ = _e_step(x, model.weights, model.means, model.covariances)
    return resp


def assign_clusters(model: GmmModel, X) -> np.ndarray:
    """Hard assignment by argmax responsibility; ties go to the lowest index."""
    return np.argmax(responsibilities(model, X), axis=1)


def rank_difficulty(
    cluster_labels,
    raw_confidence,
    instance_ids: Sequence[str],
    max_responsibilities=None,
    n_clusters: int = 3,
) -> DifficultyAssignment:
    """Rank clusters by mean raw confidence (descending) into easy/ambiguous/hard.

    ``raw_confidence`` must be the pre-scaling gold-label confidence, one
    value per instance. Mean-confidence ties rank the lower cluster id
    easier. Raises EmptyClusterError when a cluster received no instances.
    """
    labels = np.asarray(cluster_labels, dtype=int)
    conf = np.asarray(raw_confidence, dtype=float)
    ids = tuple(instance_ids)
    if not (len(labels) == len(conf) == len(ids)):
        raise ValueError("cluster labels, confidences and instance ids must align")
    if n_clusters != len(DIFFICULTY_ORDER):
        raise ValueError(f"difficulty ranking is defined for exactly {len(DIFFICULTY_ORDER)} clusters, got {n_clusters}")

    empty = [c for c in range(n_clusters) if not np.any(labels == c)]
    if empty:
        raise EmptyClusterError(f"cluster(s) {empty} are empty; refit with a different seed")

    cluster_conf = tuple(float(conf[labels == c].mean()) for c in range(n_clusters))
    ranked = sorted(range(n_clusters), key=lambda c: (-cluster_conf[c], c))
    cluster_difficulty = [""] * n_clusters
    for rank, c in enumerate(ranked):
        cluster_difficulty[c] = DIFFICULTY_ORDER[rank]

    if max_responsibilities is None:
        max_resp = tuple(float("nan") for _ in ids)
    else:
        max_resp = tuple(float(v) for v in max_responsibilities)
        if len(max_resp) != len(ids):
            raise ValueError("max responsibilities must align with instance ids")

    return DifficultyAssignment(
        instance_ids=ids,
        cluster_ids=tuple(int(c) for c in labels),
        difficulties=tuple(cluster_difficulty[c] for c in labels),
        max_responsibilities=max_resp,
        cluster_confidence=cluster_conf,
        cluster_difficulty=tuple(cluster_difficulty),
    )


def model_json_dict(model: GmmModel) -> dict:
    return {
        "k": model.k,
        "dim": model.dim,
        "weights": [float(w) for w in model.weights],
        "means": [[float(v) for v in row] for row in model.means],
        "covariances": [[[float(v) for v in row] for row in cov] for cov in model.covariances],
        "seed": model.seed,
        "n_iter": model.n_iter,
        "converged": model.converged,
        "best_restart": model.best_restart,
        "log_likelihood": float(model.log_likelihood),
    }


def write_model_json(model: GmmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_json_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_assignment_csv(assignment: DifficultyAssignment, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("instance_id", "cluster_id", "difficulty", "max_responsibility"))
        for i, instance_id in enumerate(assignment.instance_ids):
            writer.writerow(
                (
                    instance_id,
                    assignment.cluster_ids[i],
                    assignment.difficulties[i],
                    format(assignment.max_responsibilities[i], ".17g"),
                )
            )


def read_assignment_csv(path) -> DifficultyAssignment:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["instance_id", "cluster_id", "difficulty", "max_responsibility"]:
            raise ValueError(f"unexpected assignment CSV header: {header}")
        rows = [(r[0], int(r[1]), r[2], float(r[3])) for r in reader]
    cluster_difficulty: dict[int, str] = {}
    for _, cid, diff, _resp in rows:
        cluster_difficulty[cid] = diff
    k = (max(cluster_difficulty) + 1) if cluster_difficulty else 0
    return DifficultyAssignment(
        instance_ids=tuple(r[0] for r in rows),
        cluster_ids=tuple(r[1] for r in rows),
        difficulties=tuple(r[2] for r in rows),
        max_responsibilities=tuple(r[3] for r in rows),
        cluster_confidence=(),
        cluster_difficulty=tuple(cluster_difficulty.get(c, "") for c in range(k)),
    )
