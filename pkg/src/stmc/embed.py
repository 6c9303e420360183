"""Kuratowski embeddings of finite (timed) metric spaces into sup-norm space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import StructureError, TimedMetricSpace

SCHEMA = "cloud-v1"


@dataclass(frozen=True, eq=False)
class EmbeddedCloud:
    points: np.ndarray  # (n, dim); column 0 is tau when timed
    timed: bool
    landmark_ids: tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def tau(self) -> np.ndarray:
        if not self.timed:
            raise StructureError("untimed cloud has no time coordinate")
        return self.points[:, 0]

    def pairwise(self) -> np.ndarray:
        return sup_dist(self.points, self.points)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "dim": self.dim,
            "timed": self.timed,
            "landmark_ids": list(self.landmark_ids),
            "points": self.points.tolist(),
        }


def cloud_from_json(doc: dict) -> EmbeddedCloud:
    if doc.get("schema") != SCHEMA:
        raise StructureError(f"expected schema {SCHEMA!r}")
    pts = np.asarray(doc["points"], float).reshape(-1, int(doc["dim"]))
    return EmbeddedCloud(pts, bool(doc["timed"]), tuple(doc["landmark_ids"]))


def _landmarks(space: TimedMetricSpace, order: Sequence[str]) -> np.ndarray:
    idx = np.array([space.index(p) for p in order], dtype=int)
    missing = set(range(space.n)) - set(idx.tolist())
    if missing:
        names = sorted(space.point_ids[i] for i in missing)
        raise StructureError(f"landmark order must cover every point; missing {names}")
    return idx


def kuratowski(space: TimedMetricSpace, landmark_order: Sequence[str] | None = None) -> EmbeddedCloud:
    """x -> (d(l_1, x), ..., d(l_k, x)); an isometry for the sup norm."""
    order = tuple(space.point_ids if landmark_order is None else landmark_order)
    idx = _landmarks(space, order)
    return EmbeddedCloud(space.dist[idx].T.copy(), False, order)


def timed_kuratowski(space: TimedMetricSpace, landmark_order: Sequence[str] | None = None) -> EmbeddedCloud:
    """x -> (tau(x), d(l_1, x), ..., d(l_k, x)).

    Prepending tau keeps distances because |tau(x) - tau(y)| <= d(x, y).
    """
    cloud = kuratowski(space, landmark_order)
    pts = np.column_stack([space.tau, cloud.points]) if space.n else np.zeros((0, cloud.dim + 1))
    return EmbeddedCloud(pts, True, cloud.landmark_ids)


def sup_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.abs(A[:, None, :] - B[None, :, :]).max(axis=2, initial=0.0)


def hausdorff_from_cost(C: np.ndarray) -> float:
    """Hausdorff distance given the cross-distance matrix between two sets."""
    if C.size == 0:
        return 0.0 if C.shape == (0, 0) else float("inf")
    return float(max(C.min(axis=1).max(), C.min(axis=0).max()))


def hausdorff_sup(A: EmbeddedCloud, B: EmbeddedCloud) -> float:
    if A.dim != B.dim:
        raise StructureError(f"dimension mismatch: {A.dim} vs {B.dim}")
    if A.timed != B.timed:
        raise StructureError("cannot compare a timed cloud with an untimed one")
    return hausdorff_from_cost(sup_dist(A.points, B.points))


def hausdorff_1d(a, b) -> float:
    """Hausdorff distance between two finite subsets of the real line."""
    a = np.sort(np.asarray(a, float))
    b = np.sort(np.asarray(b, float))
    if len(a) == 0 or len(b) == 0:
        return 0.0 if len(a) == len(b) else float("inf")

    def one_sided(u, v):
        pos = np.clip(np.searchsorted(v, u), 1, len(v) - 1) if len(v) > 1 else np.zeros(len(u), int)
        left = np.abs(u - v[np.maximum(pos - 1, 0)])
        right = np.abs(u - v[pos])
        return float(np.minimum(left, right).max())

    return max(one_sided(a, b), one_sided(b, a))
