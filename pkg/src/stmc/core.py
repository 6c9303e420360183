"""Finite timed metric spaces.

A :class:`TimedMetricSpace` is a finite point set carrying a symmetric
distance matrix and a Lipschitz-1 time function.  Everything else in the
package produces or consumes these.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np

SCHEMA = "tms-v1"

# Slack for floating-point round-off in "exact" comparisons (eps=0).  Shortest
# path sums telescope |dtau| only up to a few ulps.
FP_GUARD = 1e-12

MAX_ISOMETRY_N = 10


class StructureError(ValueError):
    """Malformed input: wrong shapes, unknown ids, non-finite values."""


class CapabilityError(RuntimeError):
    """Requested computation exceeds a guarded size limit."""


@dataclass(frozen=True, eq=False)
class TimedMetricSpace:
    point_ids: tuple[str, ...]
    tau: np.ndarray
    dist: np.ndarray
    basepoint: str | None = None
    initial_set: tuple[str, ...] | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        ids = tuple(str(p) for p in self.point_ids)
        n = len(ids)
        if len(set(ids)) != n:
            raise StructureError("duplicate point ids")
        tau = np.array(self.tau, dtype=np.float64).reshape(-1)
        dist = np.array(self.dist, dtype=np.float64)
        if n == 0:
            dist = dist.reshape(0, 0)
        if tau.shape != (n,):
            raise StructureError(f"tau has shape {tau.shape}, expected ({n},)")
        if dist.shape != (n, n):
            raise StructureError(f"dist has shape {dist.shape}, expected ({n}, {n})")
        if not (np.all(np.isfinite(tau)) and np.all(np.isfinite(dist))):
            raise StructureError("non-finite tau or distance values")
        tau.setflags(write=False)
        dist.setflags(write=False)
        object.__setattr__(self, "point_ids", ids)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "dist", dist)
        if self.basepoint is not None and self.basepoint not in ids:
            raise StructureError(f"basepoint {self.basepoint!r} is not a point id")
        if self.initial_set is not None:
            init = tuple(str(p) for p in self.initial_set)
            missing = set(init) - set(ids)
            if missing:
                raise StructureError(f"initial_set ids not in space: {sorted(missing)}")
            object.__setattr__(self, "initial_set", init)

    @property
    def n(self) -> int:
        return len(self.point_ids)

    @property
    def empty(self) -> bool:
        return self.n == 0

    def index(self, point_id: str) -> int:
        try:
            return self.point_ids.index(point_id)
        except ValueError:
            raise StructureError(f"unknown point id {point_id!r}") from None

    @property
    def basepoint_index(self) -> int | None:
        return None if self.basepoint is None else self.index(self.basepoint)

    @property
    def initial_indices(self) -> np.ndarray | None:
        if self.initial_set is None:
            return None
        return np.array([self.index(p) for p in self.initial_set], dtype=int)

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def subspace(self, indices: Iterable[int], **meta) -> "TimedMetricSpace":
        """Restriction to ``indices`` (ambient distances, markers kept if inside)."""
        idx = np.asarray(list(indices), dtype=int)
        ids = tuple(self.point_ids[i] for i in idx)
        keep = set(ids)
        base = self.basepoint if self.basepoint in keep else None
        init = None
        if self.initial_set is not None:
            init = tuple(p for p in self.initial_set if p in keep) or None
        return TimedMetricSpace(
            ids,
            self.tau[idx],
            self.dist[np.ix_(idx, idx)],
            basepoint=base,
            initial_set=init,
            meta={**self.meta, **meta},
        )

    def relabeled(self, perm: Sequence[int], prefix: str | None = None) -> "TimedMetricSpace":
        """Copy with points reordered by ``perm`` (new point k is old point perm[k])."""
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise StructureError("perm is not a permutation")
        if prefix is None:
            ids = tuple(self.point_ids[i] for i in perm)
            rename = {p: p for p in self.point_ids}
        else:
            ids = tuple(f"{prefix}{k}" for k in range(self.n))
            rename = {self.point_ids[i]: ids[k] for k, i in enumerate(perm)}
        base = None if self.basepoint is None else rename[self.basepoint]
        init = None if self.initial_set is None else tuple(rename[p] for p in self.initial_set)
        return TimedMetricSpace(
            ids,
            self.tau[perm],
            self.dist[np.ix_(perm, perm)],
            basepoint=base,
            initial_set=init,
            meta=dict(self.meta),
        )

    def with_markers(self, basepoint=..., initial_set=..., **meta) -> "TimedMetricSpace":
        kw = {}
        if basepoint is not ...:
            kw["basepoint"] = basepoint
        if initial_set is not ...:
            kw["initial_set"] = None if initial_set is None else tuple(initial_set)
        return replace(self, meta={**self.meta, **meta}, **kw)


def from_arrays(tau, dist, ids=None, **kw) -> TimedMetricSpace:
    tau = np.asarray(tau, dtype=float)
    if ids is None:
        ids = [f"p{i}" for i in range(len(tau))]
    return TimedMetricSpace(tuple(ids), tau, np.asarray(dist, dtype=float), **kw)


def empty_space(**meta) -> TimedMetricSpace:
    return TimedMetricSpace((), np.zeros(0), np.zeros((0, 0)), meta=dict(meta))


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str
    count: int
    indices: tuple[int, ...]
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    skipped: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def get(self, kind: str) -> Violation | None:
        for v in self.violations:
            if v.kind == kind:
                return v
        return None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "count": v.count, "indices": list(v.indices), "magnitude": v.magnitude}
                for v in self.violations
            ],
            "skipped": list(self.skipped),
        }


def _worst(kind: str, excess: np.ndarray) -> Violation | None:
    bad = excess > 0
    count = int(bad.sum())
    if not count:
        return None
    flat = int(np.argmax(excess))
    idx = np.unravel_index(flat, excess.shape)
    return Violation(kind, count, tuple(int(i) for i in idx), float(excess[idx]))


def _triangle_excess(d: np.ndarray, tol: float) -> Violation | None:
    n = d.shape[0]
    worst, worst_idx, count = 0.0, None, 0
    for k in range(n):
        # d(i,j) - d(i,k) - d(k,j)
        ex = d - d[:, k, None] - d[None, k, :]
        bad = ex > tol
        c = int(bad.sum())
        if c:
            count += c
            flat = int(np.argmax(ex))
            i, j = divmod(flat, n)
            if ex[i, j] > worst:
                worst, worst_idx = float(ex[i, j]), (i, k, j)
    if count == 0:
        return None
    return Violation("triangle", count, worst_idx, worst)


def validate(space: TimedMetricSpace, tol: float = 1e-9, *, triangle: bool | None = None) -> ValidationReport:
    """Check every timed-metric-space invariant, reporting the worst offenders.

    ``triangle=None`` checks the O(n^3) triangle inequality only for n <= 1200;
    skipped checks are listed in ``report.skipped``.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    d, tau, n = space.dist, space.tau, space.n
    out: list[Violation] = []
    skipped: list[str] = []
    if n == 0:
        return ValidationReport(())

    diag = np.abs(np.diag(d))
    v = _worst("diagonal", np.where(diag > tol, diag, 0.0)[:, None])
    if v:
        out.append(Violation(v.kind, v.count, (v.indices[0], v.indices[0]), v.magnitude))
    asym = np.abs(d - d.T)
    if v := _worst("symmetry", np.where(asym > tol, asym, 0.0)):
        out.append(v)
    if v := _worst("negative", np.where(-d > tol, -d, 0.0)):
        out.append(v)
    off = ~np.eye(n, dtype=bool)
    short = np.where(off & (d <= tol), tol - d + np.finfo(float).tiny, 0.0)
    if v := _worst("definiteness", short):
        out.append(Violation(v.kind, v.count, v.indices, float(d[v.indices])))
    if triangle is None:
        triangle = n <= 1200
    if triangle:
        if v := _triangle_excess(d, tol):
            out.append(v)
    else:
        skipped.append("triangle")
    lip = np.abs(tau[:, None] - tau[None, :]) - d
    if v := _worst("lipschitz", np.where(lip > tol, lip, 0.0)):
        out.append(v)

    b = space.basepoint_index
    if b is not None:
        ex = np.abs(d[b] - tau)
        ex[b] = max(ex[b], abs(tau[b]))
        if v := _worst("basepoint", np.where(ex > tol, ex, 0.0)[None, :]):
            out.append(Violation(v.kind, v.count, (b, v.indices[1]), v.magnitude))
    init = space.initial_indices
    if init is not None:
        if len(init) == 0:
            out.append(Violation("initial_set", 1, (), float("inf")))
        else:
            ex = np.abs(d[:, init].min(axis=1) - tau)
            ex[init] = np.maximum(ex[init], np.abs(tau[init]))
            if v := _worst("initial_set", np.where(ex > tol, ex, 0.0)[:, None]):
                out.append(Violation(v.kind, v.count, (v.indices[0],), v.magnitude))
    return ValidationReport(tuple(out), tuple(skipped))


# ---------------------------------------------------------------------------
# causal structure


@dataclass(frozen=True, eq=False)
class CausalRelation:
    """``pairs[p, q]`` is True iff q lies in the causal past of p."""

    pairs: np.ndarray
    eps: float


def causal_relation(space: TimedMetricSpace, eps: float = 0.0) -> CausalRelation:
    if eps < 0:
        raise ValueError("eps must be >= 0")
    dt = space.tau[:, None] - space.tau[None, :]
    scale = max(1.0, float(np.abs(space.tau).max(initial=0.0)), space.diameter())
    guard = FP_GUARD * scale
    rel = (dt >= -guard) & (np.abs(space.dist - dt) <= eps + guard)
    np.fill_diagonal(rel, True)
    rel.setflags(write=False)
    return CausalRelation(rel, float(eps))


@dataclass(frozen=True)
class AxiomReport:
    reflexive: bool
    transitive: bool
    antisymmetric: bool
    transitivity_violations: int
    antisymmetry_violations: int
    counterexamples: dict[str, tuple[int, ...]]
    eps: float

    @property
    def ok(self) -> bool:
        return self.reflexive and self.transitive and self.antisymmetric

    def to_dict(self) -> dict:
        return {
            "reflexive": self.reflexive,
            "transitive": self.transitive,
            "antisymmetric": self.antisymmetric,
            "transitivity_violations": self.transitivity_violations,
            "antisymmetry_violations": self.antisymmetry_violations,
            "counterexamples": {k: list(v) for k, v in self.counterexamples.items()},
            "eps": self.eps,
            "ok": self.ok,
        }


def check_causal_axioms(rel: CausalRelation, space: TimedMetricSpace) -> AxiomReport:
    """Reflexivity, transitivity and antisymmetry of a derived causal relation.

    At eps > 0 the relation is only approximately an order; violations are
    counted but the caller decides what to make of them.
    """
    R = rel.pairs
    n = R.shape[0]
    if R.shape != (space.n, space.n):
        raise StructureError("relation does not match space size")
    cex: dict[str, tuple[int, ...]] = {}
    refl = bool(np.all(np.diag(R))) if n else True
    if not refl:
        cex["reflexive"] = (int(np.argmin(np.diag(R))),)

    Ri = R.astype(np.int32)
    reach2 = (Ri @ Ri) > 0  # exists q with R(p,q) and R(q,r)
    bad_t = reach2 & ~R
    n_trans = int(bad_t.sum())
    if n_trans:
        p, r = map(int, np.argwhere(bad_t)[0])
        q = int(np.argmax(R[p] & R[:, r]))
        cex["transitive"] = (p, q, r)

    same = (np.abs(space.tau[:, None] - space.tau[None, :]) == 0) & (space.dist == 0)
    bad_a = R & R.T & ~np.eye(n, dtype=bool) & ~same
    n_anti = int(bad_a.sum()) // 2
    if n_anti:
        cex["antisymmetric"] = tuple(int(i) for i in np.argwhere(bad_a)[0])
    return AxiomReport(refl, n_trans == 0, n_anti == 0, n_trans, n_anti, cex, rel.eps)


# ---------------------------------------------------------------------------
# restrictions


def restrict_level(space: TimedMetricSpace, t: float, half_width: float) -> TimedMetricSpace:
    if half_width < 0:
        raise ValueError("half_width must be >= 0")
    idx = np.flatnonzero(np.abs(space.tau - t) <= half_width)
    sub = space.subspace(idx, level=float(t), level_half_width=float(half_width))
    return sub.with_markers(basepoint=None, initial_set=None, empty=sub.empty)


def restrict_strip(space: TimedMetricSpace, s: float, t: float) -> TimedMetricSpace:
    """Points with s <= tau <= t, ambient distances, time shifted to start at s."""
    if s > t:
        raise ValueError("strip requires s <= t")
    idx = np.flatnonzero((space.tau >= s) & (space.tau <= t))
    offset = float(space.meta.get("tau_offset", 0.0)) + float(s)
    sub = space.subspace(idx)
    original = space.meta.get("tau_original")
    orig_tau = (np.asarray(original)[idx] if original is not None else space.tau[idx]).tolist()
    return TimedMetricSpace(
        sub.point_ids,
        sub.tau - s,
        sub.dist,
        meta={
            **space.meta,
            "strip": [float(s), float(t)],
            "tau_offset": offset,
            "tau_original": orig_tau,
            "empty": sub.empty,
        },
    )


# ---------------------------------------------------------------------------
# isometry search


def find_time_isometry(
    X: TimedMetricSpace,
    Y: TimedMetricSpace,
    tol: float = 1e-9,
    *,
    preserve_markers: bool = False,
) -> list[int] | None:
    """Search for a distance- and time-preserving bijection X -> Y.

    Returns ``F`` with ``F[i]`` the index in Y of the image of X's point i,
    or None.  With ``preserve_markers`` the bijection must also carry the
    basepoint to the basepoint and the initial set onto the initial set.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    n = X.n
    if n != Y.n:
        return None
    if n > MAX_ISOMETRY_N:
        raise CapabilityError(f"isometry search limited to {MAX_ISOMETRY_N} points, got {n}")
    if n == 0:
        return []

    allowed = np.abs(X.tau[:, None] - Y.tau[None, :]) <= tol
    if preserve_markers:
        if (X.basepoint is None) != (Y.basepoint is None):
            return None
        if X.basepoint is not None:
            bx, by = X.basepoint_index, Y.basepoint_index
            allowed[bx, :] = False
            allowed[:, by] = False
            allowed[bx, by] = abs(X.tau[bx] - Y.tau[by]) <= tol
        if (X.initial_set is None) != (Y.initial_set is None):
            return None
        if X.initial_set is not None:
            mx = np.zeros(n, bool)
            my = np.zeros(n, bool)
            mx[X.initial_indices] = True
            my[Y.initial_indices] = True
            if mx.sum() != my.sum():
                return None
            allowed &= mx[:, None] == my[None, :]

    return match_isometry(X.dist, Y.dist, allowed, tol, order_key=X.tau, near=(X.tau, Y.tau))


def match_isometry(dX, dY, allowed, tol=1e-9, *, max_steps=None, order_key=None, near=None):
    """Backtracking search for a bijection within ``allowed`` preserving distances to ``tol``.

    ``max_steps`` caps the number of tried assignments; running out returns None.
    """
    n = dX.shape[0]
    if n != dY.shape[0]:
        return None
    if n == 0:
        return []
    key = np.zeros(n) if order_key is None else order_key
    # most constrained first: fewest candidates, then by key
    order = sorted(range(n), key=lambda i: (int(allowed[i].sum()), key[i]))
    if near is None:
        cands = [np.flatnonzero(allowed[i]).tolist() for i in range(n)]
    else:
        tX, tY = near
        cands = [sorted(np.flatnonzero(allowed[i]).tolist(), key=lambda j: abs(tY[j] - tX[i])) for i in range(n)]
    image = [-1] * n
    used = [False] * n
    placed = np.zeros(n, int)
    images = np.zeros(n, int)
    steps = [0]

    class _Out(Exception):
        pass

    def extend(k: int) -> bool:
        if k == n:
            return True
        i = order[k]
        for j in cands[i]:
            if used[j]:
                continue
            steps[0] += 1
            if max_steps is not None and steps[0] > max_steps:
                raise _Out
            if k and np.abs(dX[i, placed[:k]] - dY[j, images[:k]]).max() > tol:
                continue
            image[i], used[j] = j, True
            placed[k], images[k] = i, j
            if extend(k + 1):
                return True
            image[i], used[j] = -1, False
        return False

    try:
        return list(image) if extend(0) else None
    except _Out:
        return None


# ---------------------------------------------------------------------------
# serialization


def _check_finite(values, what: str):
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise StructureError(f"{what}: non-finite or non-numeric value {v!r}")


def to_json(space: TimedMetricSpace) -> dict:
    iu = np.triu_indices(space.n, k=1)
    doc = {
        "schema": SCHEMA,
        "points": [{"id": p, "tau": float(t)} for p, t in zip(space.point_ids, space.tau)],
        "dist": {"format": "dense-upper", "values": space.dist[iu].tolist()},
        "meta": _jsonable(space.meta),
    }
    if space.basepoint is not None:
        doc["basepoint"] = space.basepoint
    if space.initial_set is not None:
        doc["initial_set"] = list(space.initial_set)
    return doc


def from_json(doc: dict) -> TimedMetricSpace:
    if doc.get("schema") != SCHEMA:
        raise StructureError(f"expected schema {SCHEMA!r}, got {doc.get('schema')!r}")
    pts = doc["points"]
    ids = [str(p["id"]) for p in pts]
    tau = [p["tau"] for p in pts]
    _check_finite(tau, "tau")
    dist = doc["dist"]
    if dist.get("format") != "dense-upper":
        raise StructureError(f"unsupported dist format {dist.get('format')!r}")
    vals = dist["values"]
    _check_finite(vals, "dist")
    n = len(ids)
    if len(vals) != n * (n - 1) // 2:
        raise StructureError(f"dense-upper needs {n * (n - 1) // 2} values, got {len(vals)}")
    D = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    D[iu] = vals
    D = D + D.T
    return TimedMetricSpace(
        tuple(ids),
        np.array(tau, dtype=float),
        D,
        basepoint=doc.get("basepoint"),
        initial_set=doc.get("initial_set"),
        meta=dict(doc.get("meta", {})),
    )


def dumps(space: TimedMetricSpace) -> str:
    return json.dumps(to_json(space), sort_keys=True)


def load(path) -> TimedMetricSpace:
    with open(path) as fh:
        return from_json(json.load(fh, parse_constant=_reject_constant))


def save(space: TimedMetricSpace, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_json(space), fh, sort_keys=True, indent=1)
        fh.write("\n")


def content_hash(space: TimedMetricSpace) -> str:
    doc = to_json(space)
    doc.pop("meta", None)
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _reject_constant(name):
    raise StructureError(f"JSON constant {name} not allowed")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
