"""Point cloud distances and ordering-locality scores."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cloud_core import SCHEMES, as_cloud, order_by
from .errors import DomainError
from .hilbert_codec import CurveConfig
from .ot_sinkhorn import SinkhornParams, exact_emd, sinkhorn_distance

EMD_SINKHORN_DEFAULT = SinkhornParams(epsilon=1e-3, max_iters=10**4, tol=1e-9)


def _nonempty_pair(X, Y):
    X = as_cloud(X, dims=None)
    Y = as_cloud(Y, dims=None)
    if len(X) == 0 or len(Y) == 0:
        raise DomainError("chamfer distance needs non-empty clouds")
    if X.shape[1] != Y.shape[1]:
        raise DomainError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return X, Y


def chamfer(X, Y) -> float:
    """Symmetric Chamfer distance with squared Euclidean, mean-reduced terms."""
    X, Y = _nonempty_pair(X, Y)
    fwd, _ = cKDTree(Y).query(X)
    bwd, _ = cKDTree(X).query(Y)
    return float(np.mean(fwd**2) + np.mean(bwd**2))


def emd(X, Y, mode: str = "exact", params: SinkhornParams = EMD_SINKHORN_DEFAULT,
        metric: str = "sq_euclidean") -> float:
    """Earth mover's distance, either exact or as the Sinkhorn transport cost.

    The Sinkhorn mode drops the entropy term so both modes estimate the same
    mass-normalised quantity.
    """
    X = as_cloud(X, dims=None)
    Y = as_cloud(Y, dims=None)
    if len(X) != len(Y):
        raise DomainError(f"EMD needs equal cardinality, got {len(X)} and {len(Y)}")
    if mode == "exact":
        return exact_emd(X, Y, metric)
    if mode == "sinkhorn":
        return sinkhorn_distance(X, Y, params, metric).transport_cost
    raise DomainError(f"unknown EMD mode {mode!r}")


def _check_perm(perm, n: int) -> np.ndarray:
    perm = np.asarray(perm)
    if perm.shape != (n,) or not np.issubdtype(perm.dtype, np.integer):
        raise DomainError(f"permutation must be {n} integers")
    seen = np.zeros(n, dtype=bool)
    if ((perm < 0) | (perm >= n)).any():
        raise DomainError("permutation entry out of range")
    seen[perm] = True
    if not seen.all():
        raise DomainError("permutation has repeated entries")
    return perm


def locality_score(points, perm) -> float:
    """Mean Euclidean distance between consecutive points in ``perm`` order."""
    pc = as_cloud(points, dims=None)
    if len(pc) < 2:
        raise DomainError("locality score needs at least two points")
    perm = _check_perm(perm, len(pc))
    steps = np.diff(pc[perm], axis=0)
    return float(np.sqrt((steps**2).sum(axis=1)).mean())


def mean_nn_distance(points) -> float:
    pc = as_cloud(points, dims=None)
    d, _ = cKDTree(pc).query(pc, k=2)
    return float(d[:, 1].mean())


@dataclass
class LocalityReport:
    schemes: tuple[str, ...]
    mean_distance: dict[str, float] = field(default_factory=dict)
    normalized: dict[str, float] = field(default_factory=dict)

    def rows(self):
        for s in self.schemes:
            yield s, self.mean_distance[s], self.normalized[s]


def compare_orderings(points, cfg: CurveConfig | None = None) -> LocalityReport:
    """Locality of the hilbert, morton and lex orderings of one cloud.

    The normalised score divides by the mean nearest-neighbour distance, so a
    perfect walk through a regular grid scores 1. It is NaN when every point
    coincides with another.
    """
    pc = as_cloud(points)
    if len(pc) < 2:
        raise DomainError("locality comparison needs at least two points")
    nn = mean_nn_distance(pc)
    report = LocalityReport(SCHEMES)
    for scheme in SCHEMES:
        score = locality_score(pc, order_by(pc, scheme, cfg))
        report.mean_distance[scheme] = score
        report.normalized[scheme] = score / nn if nn > 0 else float("nan")
    return report
