"""Exemplar clustering by affinity propagation, plus divergence of the
per-period cluster distributions.

Affinity propagation elects exemplars by exchanging responsibility and
availability messages over a similarity matrix until the exemplar set is
stable. This implementation is deliberately free of internal randomness:
instead of jittering the similarities, symmetry is broken by adding
``i * 1e-12`` to point ``i``'s self-similarity (preference), so repeated
runs on the same input are bit-identical. Defaults (damping 0.5,
max_iter 200, convergence_iter 15, preference = median similarity)
mirror the widely used reference implementation so that results stay
comparable with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import Period
from .errors import DataError, ValidationError

_TIE_BREAK_EPS = 1e-12


@dataclass(frozen=True)
class ApParams:
    damping: float = 0.5
    max_iter: int = 200
    convergence_iter: int = 15
    preference: Optional[float] = None  # None = median of the similarity matrix
    similarity: str = "negative_squared_euclidean"  # or "cosine"

    def __post_init__(self) -> None:
        if not (0.5 <= self.damping < 1.0):
            raise ValidationError("damping must lie in [0.5, 1)")
        if self.max_iter < 1 or self.convergence_iter < 1:
            raise ValidationError("max_iter and convergence_iter must be >= 1")
        if self.similarity not in ("negative_squared_euclidean", "cosine"):
            raise ValidationError(f"unknown similarity {self.similarity!r}")


@dataclass(frozen=True)
class ApResult:
    """Cluster labels (gapless, ordered by exemplar index), exemplar
    indices, and convergence metadata."""

    labels: tuple[int, ...]
    exemplars: tuple[int, ...]
    n_iter: int
    converged: bool

    @property
    def n_clusters(self) -> int:
        return len(self.exemplars)


def _similarity_matrix(points: np.ndarray, kind: str) -> np.ndarray:
    if kind == "negative_squared_euclidean":
        sq = np.sum(points**2, axis=1)
        s = 2.0 * points @ points.T - sq[:, None] - sq[None, :]
        np.fill_diagonal(s, 0.0)
        return s
    norms = np.linalg.norm(points, axis=1)
    if np.any(norms == 0.0):
        raise DataError("cosine similarity undefined for zero-norm points")
    return (points @ points.T) / np.outer(norms, norms)


def affinity_propagation(points: Sequence, params: ApParams = ApParams()) -> ApResult:
    """Cluster points by message passing; deterministic for fixed inputs.

    When the algorithm exhausts ``max_iter`` without ``convergence_iter``
    stable sweeps, ``converged`` is False and the labels of the final
    state are still returned (falling back to a single cluster around the
    most exemplar-like point if no exemplar emerged at all).
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise DataError("affinity_propagation: empty input")
    if not np.all(np.isfinite(x)):
        raise DataError("affinity_propagation: non-finite point coordinates")

    s = _similarity_matrix(x, params.similarity)
    preference = float(np.median(s)) if params.preference is None else float(params.preference)

    off_diag = s[~np.eye(n, dtype=bool)]
    if n == 1 or (off_diag.size and np.all(off_diag == off_diag[0])):
        # Degenerate input: message passing cannot break the symmetry, so
        # return the configuration the energy function prefers, exactly as
        # the reference implementation does.
        if off_diag.size and preference > off_diag[0]:
            labels = tuple(range(n))
            return ApResult(labels=labels, exemplars=labels, n_iter=0, converged=True)
        return ApResult(labels=(0,) * n, exemplars=(0,), n_iter=0, converged=True)

    s = s.copy()
    s[np.diag_indices(n)] = preference + _TIE_BREAK_EPS * np.arange(n)

    availability = np.zeros((n, n))
    responsibility = np.zeros((n, n))
    tmp = np.zeros((n, n))
    exemplar_history = np.zeros((n, params.convergence_iter), dtype=bool)
    idx = np.arange(n)
    converged = False
    n_iter = 0

    for it in range(params.max_iter):
        n_iter = it + 1
        # Responsibilities: r(i,k) = s(i,k) - max_{k' != k} [a(i,k') + s(i,k')]
        np.add(availability, s, out=tmp)
        best = np.argmax(tmp, axis=1)
        best_val = tmp[idx, best]
        tmp[idx, best] = -np.inf
        second_val = np.max(tmp, axis=1)
        np.subtract(s, best_val[:, None], out=tmp)
        tmp[idx, best] = s[idx, best] - second_val
        responsibility = params.damping * responsibility + (1.0 - params.damping) * tmp

        # Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))
        np.maximum(responsibility, 0.0, out=tmp)
        tmp[np.diag_indices(n)] = responsibility[np.diag_indices(n)]
        tmp -= np.sum(tmp, axis=0)
        diag = tmp[np.diag_indices(n)].copy()
        np.clip(tmp, 0.0, np.inf, out=tmp)
        tmp[np.diag_indices(n)] = diag
        availability = params.damping * availability - (1.0 - params.damping) * tmp

        is_exemplar = (np.diag(availability) + np.diag(responsibility)) > 0.0
        exemplar_history[:, it % params.convergence_iter] = is_exemplar
        if it >= params.convergence_iter:
            seen = exemplar_history.sum(axis=1)
            stable = np.all((seen == params.convergence_iter) | (seen == 0))
            if stable and is_exemplar.any():
                converged = True
                break

    exemplars = np.flatnonzero(is_exemplar)
    if exemplars.size == 0:
        # No exemplar emerged before max_iter; keep the partition contract
        # by collapsing to the most exemplar-like point.
        fallback = int(np.argmax(np.diag(availability) + np.diag(responsibility)))
        return ApResult(
            labels=(0,) * n, exemplars=(fallback,), n_iter=n_iter, converged=False
        )

    assign = np.argmax(s[:, exemplars], axis=1)
    assign[exemplars] = np.arange(exemplars.size)
    # Refine each exemplar to the member maximizing within-cluster similarity.
    for k in range(exemplars.size):
        members = np.flatnonzero(assign == k)
        j = np.argmax(np.sum(s[np.ix_(members, members)], axis=0))
        exemplars[k] = members[j]
    assign = np.argmax(s[:, exemplars], axis=1)
    assign[exemplars] = np.arange(exemplars.size)
    point_exemplar = exemplars[assign]
    final_exemplars = np.unique(point_exemplar)
    labels = np.searchsorted(final_exemplars, point_exemplar)
    return ApResult(
        labels=tuple(int(v) for v in labels),
        exemplars=tuple(int(v) for v in final_exemplars),
        n_iter=n_iter,
        converged=converged,
    )


def cluster_distributions(
    result: ApResult, periods: Sequence[Period]
) -> tuple[np.ndarray, np.ndarray]:
    """Per-period probability vectors over the shared cluster index set."""
    if len(periods) != len(result.labels):
        raise DataError("cluster_distributions: one period tag per point required")
    k = result.n_clusters
    counts = {Period.T1: np.zeros(k), Period.T2: np.zeros(k)}
    for label, period in zip(result.labels, periods):
        counts[Period(period)][label] += 1
    for period, vec in counts.items():
        if vec.sum() == 0:
            raise DataError(f"cluster_distributions: no points in period {period.value}")
    p = counts[Period.T1] / counts[Period.T1].sum()
    q = counts[Period.T2] / counts[Period.T2].sum()
    return p, q


def jsd(p, q) -> float:
    """Jensen-Shannon divergence with base-2 logs, in [0, 1].

    Defined as the mean of the two KL divergences against the midpoint
    distribution, with 0 * log(0/x) taken as 0.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise DataError("jsd: distributions must be equal-length 1-d vectors")
    if np.any(p < 0) or np.any(q < 0):
        raise DataError("jsd: negative probability entry")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise DataError("jsd: inputs must each sum to 1 within 1e-9")
    m = (p + q) / 2.0

    def kl(a: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / m[mask])))

    value = 0.5 * kl(p) + 0.5 * kl(q)
    return min(max(value, 0.0), 1.0)


def ap_result_to_csv(result: ApResult, uids: Sequence[str]) -> str:
    """CSV rows (uid, label, is_exemplar) for one clustering run."""
    if len(uids) != len(result.labels):
        raise DataError("one uid per clustered point required")
    exemplar_set = set(result.exemplars)
    lines = ["uid,label,is_exemplar"]
    for i, (uid, label) in enumerate(zip(uids, result.labels)):
        lines.append(f"{uid},{label},{str(i in exemplar_set).lower()}")
    return "\n".join(lines) + "\n"


def distributions_to_csv(p: np.ndarray, q: np.ndarray) -> str:
    lines = ["cluster,p,q"]
    for i, (pi, qi) in enumerate(zip(p, q)):
        lines.append(f"{i},{float(pi)!r},{float(qi)!r}")
    return "\n".join(lines) + "\n"
