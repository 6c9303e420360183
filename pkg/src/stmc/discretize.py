"""Causal graphs sampled from analytic models.

Nodes are sampled on a product grid, edges join causally related nodes that
lie within a coordinate window of each other.  Each edge carries two weights:
``|dtau|`` for null-distance shortest paths and the proper time of the
straight segment for the longest-chain estimate of cosmological time.

A chain alternating future and past hops telescopes inside each monotone run,
so shortest paths over single undirected causal edges realize the discrete
null distance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from . import models as M
from .core import StructureError, TimedMetricSpace, ValidationReport, validate

SCHEMA = "cgraph-v1"
N_QUAD = 64
EDGE_CHUNK = 200_000


class DisconnectedGraphError(RuntimeError):
    def __init__(self, i: int, j: int, ids: Sequence[str]):
        self.pair = (ids[i], ids[j])
        super().__init__(f"graph is disconnected: no causal chain joins {ids[i]} and {ids[j]}")


class AugmentationError(ValueError):
    """The space cannot be glued to a big-bang point."""

    def __init__(self, msg: str, report: ValidationReport | None = None):
        super().__init__(msg)
        self.report = report


# ---------------------------------------------------------------------------
# sampling


def _time_axis(model: M.SpacetimeModel, nt: int, t_range) -> np.ndarray:
    lo, hi = t_range if t_range is not None else model.window
    if not lo < hi:
        raise ValueError(f"degenerate time range ({lo}, {hi})")
    if lo < model.t_lo or hi > model.t_hi:
        raise ValueError("t_range must lie inside the model window")
    open_lo = model.open_below and lo == model.t_lo
    open_hi = model.open_above and hi == model.t_hi
    if open_lo and open_hi:
        return lo + (hi - lo) * (np.arange(nt) + 0.5) / nt
    if open_lo:
        # never sample the singular slice: start at one cell above it
        return lo + (hi - lo) * np.arange(1, nt + 1) / nt
    if open_hi:
        return lo + (hi - lo) * np.arange(nt) / nt
    return np.linspace(lo, hi, nt)


def sample_grid(
    model: M.SpacetimeModel,
    nt: int,
    nx: int | Sequence[int],
    *,
    t_range: tuple[float, float] | None = None,
    jitter: float = 0.0,
    seed: int | None = None,
) -> list[M.ModelPoint]:
    """Regular product grid over the time window and the spatial domain.

    Periodic factors get ``nx`` equally spaced angles starting at 0, Euclidean
    boxes a closed linspace.  Region models keep only grid points inside the
    region.  ``jitter`` moves every node by a uniform fraction of a cell
    (seeded), which is how independent samplings of one model are produced.
    """
    dim = model.spatial.dim
    nxs = (int(nx),) * dim if np.ndim(nx) == 0 else tuple(int(v) for v in nx)
    if nt < 2 or len(nxs) != dim or min(nxs) < 2:
        raise ValueError("need nt >= 2 and nx >= 2 along every spatial axis")
    ts = _time_axis(model, nt, t_range)
    axes = []
    periodic = model.spatial.type != "euclidean"
    for (a, b), k in zip(M.spatial_box(model), nxs):
        axes.append(a + (b - a) * np.arange(k) / k if periodic else np.linspace(a, b, k))
    mesh = np.meshgrid(ts, *axes, indexing="ij")
    t = mesh[0].ravel()
    x = np.stack([m.ravel() for m in mesh[1:]], axis=1)
    if jitter:
        rng = np.random.default_rng(seed)
        dt = (ts[-1] - ts[0]) / max(nt - 1, 1)
        t = t + jitter * dt * rng.uniform(-0.5, 0.5, t.shape)
        lo, hi = t_range if t_range is not None else model.window
        t = np.clip(t, lo, hi)
        for k, ((a, b), n) in enumerate(zip(M.spatial_box(model), nxs)):
            x[:, k] += jitter * (b - a) / n * rng.uniform(-0.5, 0.5, len(t))
        if periodic:
            x = np.mod(x, 2 * math.pi)
    keep = M.region_mask(model, t, x)
    return [M.ModelPoint(ti, tuple(xi)) for ti, xi in zip(t[keep], x[keep])]


# ---------------------------------------------------------------------------
# graph


@dataclass(eq=False)
class CausalGraph:
    model: M.SpacetimeModel
    t: np.ndarray
    x: np.ndarray
    tau: np.ndarray
    src: np.ndarray  # past endpoint q of each edge
    dst: np.ndarray  # future endpoint p
    w_null: np.ndarray
    w_proper: np.ndarray
    window_radius: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f"n{i}" for i in range(self.n))

    @property
    def nodes(self) -> list[tuple[M.ModelPoint, float]]:
        return [(M.ModelPoint(t, tuple(x)), float(tau)) for t, x, tau in zip(self.t, self.x, self.tau)]

    def find(self, p: M.ModelPoint, tol: float = 1e-9) -> int:
        """Index of the node at ``p`` (angles compared modulo 2 pi)."""
        d = self.model.spatial.distance(self.x, np.repeat([p.x], self.n, axis=0))
        hit = np.flatnonzero((np.abs(self.t - p.t) <= tol) & (d <= tol))
        if len(hit) == 0:
            raise KeyError(f"no node at {p}")
        return int(hit[0])

    def undirected(self, mask: np.ndarray | None = None) -> csr_matrix:
        src, dst, w = self.src, self.dst, self.w_null
        if mask is not None:
            keep = mask[src] & mask[dst]
            src, dst, w = src[keep], dst[keep], w[keep]
        # dijkstra treats stored zeros as absent edges, keep them strictly positive
        w = np.maximum(w, np.finfo(float).tiny)
        return coo_matrix((w, (src, dst)), shape=(self.n, self.n)).tocsr()

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "model": self.model.to_json(),
            "window_radius": self.window_radius,
            "nodes": [
                {"id": f"n{i}", "t": float(t), "x": [float(v) for v in x], "tau": float(tau)}
                for i, (t, x, tau) in enumerate(zip(self.t, self.x, self.tau))
            ],
            "edges": [
                {"from": f"n{q}", "to": f"n{p}", "w_null": float(a), "w_proper": float(b)}
                for q, p, a, b in zip(self.src, self.dst, self.w_null, self.w_proper)
            ],
            "meta": dict(self.meta),
        }


def graph_from_json(doc: dict) -> CausalGraph:
    if doc.get("schema") != SCHEMA:
        raise StructureError(f"expected schema {SCHEMA!r}")
    model = M.model_from_json(doc["model"])
    nodes = doc["nodes"]
    index = {nd["id"]: i for i, nd in enumerate(nodes)}
    edges = doc["edges"]
    return CausalGraph(
        model,
        np.array([nd["t"] for nd in nodes], float),
        np.array([nd["x"] for nd in nodes], float).reshape(len(nodes), model.spatial.dim),
        np.array([nd["tau"] for nd in nodes], float),
        np.array([index[e["from"]] for e in edges], int),
        np.array([index[e["to"]] for e in edges], int),
        np.array([e["w_null"] for e in edges], float),
        np.array([e["w_proper"] for e in edges], float),
        float(doc["window_radius"]),
        dict(doc.get("meta", {})),
    )


def grid_spacing(model: M.SpacetimeModel, t: np.ndarray, x: np.ndarray) -> float:
    """Largest per-axis spacing of the node set, spatial axes in arc length."""
    coords = np.column_stack([t, model.spatial.to_arclength(x)])
    gaps = []
    for k in range(coords.shape[1]):
        u = np.unique(np.round(coords[:, k], 12))
        if len(u) > 1:
            gaps.append(float(np.max(np.diff(u))))
    return max(gaps) if gaps else 0.0


def build_causal_graph(
    model: M.SpacetimeModel,
    nodes: Sequence[M.ModelPoint],
    window_radius: float | None = None,
    *,
    n_quad: int = N_QUAD,
) -> CausalGraph:
    """Join causally related node pairs within ``window_radius``.

    The window is a Chebyshev ball in coordinates (t, arc-length position)
    and defaults to four grid cells.
    """
    t = np.array([p.t for p in nodes], float)
    x = np.array([p.x for p in nodes], float).reshape(len(nodes), model.spatial.dim)
    if len(t) and not np.all(M.region_mask(model, t, x)):
        raise M.ModelError("some nodes lie outside the model domain")
    tau = M.tau_of(model, t)
    spacing = grid_spacing(model, t, x)
    if window_radius is None:
        window_radius = 4 * spacing
    if window_radius <= 0:
        raise ValueError("window_radius must be > 0")

    src, dst = _candidate_pairs(model, t, x, window_radius)
    # orient past -> future; equal times are never causal between distinct nodes
    swap = t[src] > t[dst]
    src, dst = np.where(swap, dst, src), np.where(swap, src, dst)
    keep = t[src] < t[dst]
    src, dst = src[keep], dst[keep]

    parts_s, parts_d, parts_w = [], [], []
    for lo in range(0, len(src), EDGE_CHUNK):
        s, d = src[lo : lo + EDGE_CHUNK], dst[lo : lo + EDGE_CHUNK]
        ok = M.causal_mask(model, t[d], x[d], t[s], x[s])
        s, d = s[ok], d[ok]
        parts_s.append(s)
        parts_d.append(d)
        parts_w.append(M.proper_time_batch(model, t[d], x[d], t[s], x[s], n_quad))
    src = np.concatenate(parts_s) if parts_s else np.zeros(0, int)
    dst = np.concatenate(parts_d) if parts_d else np.zeros(0, int)
    w_proper = np.concatenate(parts_w) if parts_w else np.zeros(0)
    order = np.lexsort((dst, src))
    src, dst, w_proper = src[order], dst[order], w_proper[order]
    w_null = tau[dst] - tau[src]
    w_proper = np.minimum(w_proper, w_null)
    meta = {"window_radius": float(window_radius), "grid_spacing": spacing, "n_quad": n_quad}
    if model.region is not None and model.region.type == "past_of_ring":
        meta["causal_test"] = f"segment sampled at {M.RING_SEGMENT_SAMPLES} interior points"
    return CausalGraph(model, t, x, tau, src, dst, w_null, w_proper, float(window_radius), meta)


def _candidate_pairs(model, t, x, radius):
    coords = np.column_stack([t - t.min(initial=0.0), model.spatial.to_arclength(x)])
    if len(t) < 2:
        return np.zeros(0, int), np.zeros(0, int)
    periods = model.spatial.periods
    if any(L is not None for L in periods):
        span = float(coords[:, 0].max()) + 2 * radius + 1.0
        box = [span] + [L if L is not None else float(np.ptp(coords[:, k + 1])) + 2 * radius + 1.0
                        for k, L in enumerate(periods)]
        coords = coords.copy()
        for k, L in enumerate(periods):
            if L is None:
                coords[:, k + 1] -= coords[:, k + 1].min()
            else:
                coords[:, k + 1] = np.mod(coords[:, k + 1], L)
        tree = cKDTree(coords, boxsize=box)
    else:
        tree = cKDTree(coords)
    pairs = tree.query_pairs(radius * (1 + 1e-12), p=np.inf, output_type="ndarray")
    return pairs[:, 0].astype(int), pairs[:, 1].astype(int)


# ---------------------------------------------------------------------------
# null distance


def _threads(threads: int | None) -> int:
    return max(1, int(threads or 1))


def _dijkstra_rows(graph_csr, sources, threads):
    sources = np.asarray(sources, int)
    threads = _threads(threads)
    if threads == 1 or len(sources) < 2 * threads:
        return dijkstra(graph_csr, directed=False, indices=sources)
    chunks = np.array_split(sources, threads)
    with ThreadPoolExecutor(threads) as ex:
        rows = list(ex.map(lambda c: dijkstra(graph_csr, directed=False, indices=c), chunks))
    return np.vstack(rows)


def null_distances_from(
    graph: CausalGraph,
    sources: Sequence[int],
    mask: np.ndarray | None = None,
    threads: int | None = None,
) -> np.ndarray:
    """Shortest-path null distances from ``sources`` to every node (inf if unreachable).

    With ``mask`` only nodes where it is True (and edges between them) are used.
    """
    D = _dijkstra_rows(graph.undirected(mask), sources, threads)
    if mask is not None:
        D[:, ~mask] = np.inf
    return D


def _all_pairs(graph: CausalGraph, idx: np.ndarray, mask, threads) -> np.ndarray:
    D = null_distances_from(graph, idx, mask, threads)[:, idx]
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0.0)
    bad = np.argwhere(~np.isfinite(D))
    if len(bad):
        i, j = bad[0]
        raise DisconnectedGraphError(idx[i], idx[j], graph.ids)
    return D


def null_distance_matrix(graph: CausalGraph, threads: int | None = None) -> TimedMetricSpace:
    idx = np.arange(graph.n)
    D = _all_pairs(graph, idx, None, threads)
    return TimedMetricSpace(
        graph.ids,
        graph.tau,
        D,
        meta={"source": "null_distance", "model": graph.model.to_json(), **graph.meta},
    )


def strip_mask(graph: CausalGraph, s: float, t: float) -> np.ndarray:
    if s > t:
        raise ValueError("strip requires s <= t")
    return (graph.tau >= s) & (graph.tau <= t)


def strip_null_distance(graph: CausalGraph, s: float, t: float, threads: int | None = None) -> TimedMetricSpace:
    """Null distance of the strip s <= tau <= t using only chains inside it.

    Time is shifted to start at s.  Distances dominate the ambient ones
    restricted to the strip because fewer chains are available.
    """
    mask = strip_mask(graph, s, t)
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        raise StructureError(f"strip [{s}, {t}] contains no nodes")
    D = _all_pairs(graph, idx, mask, threads)
    ids = graph.ids
    return TimedMetricSpace(
        tuple(ids[i] for i in idx),
        graph.tau[idx] - s,
        D,
        meta={
            "source": "strip_null_distance",
            "strip": [float(s), float(t)],
            "tau_offset": float(s),
            "tau_original": graph.tau[idx].tolist(),
            **graph.meta,
        },
    )


# ---------------------------------------------------------------------------
# cosmological time and generators


def cosmological_time(graph: CausalGraph) -> np.ndarray:
    """Longest proper-time chain ending at each node (0 on minimal nodes).

    Edges strictly increase t, so processing nodes slice by slice in order
    of t is a topological order.
    """
    if np.any(graph.t[graph.src] >= graph.t[graph.dst]):
        raise RuntimeError("causal graph has an edge that does not increase t; not a DAG")
    tau_hat = np.zeros(graph.n)
    order = np.argsort(graph.t[graph.dst], kind="stable")
    dst_t = graph.t[graph.dst][order]
    cuts = np.flatnonzero(np.diff(dst_t)) + 1
    for block in np.split(order, cuts):
        np.maximum.at(tau_hat, graph.dst[block], tau_hat[graph.src[block]] + graph.w_proper[block])
    return tau_hat


def generator(graph: CausalGraph, node: int, tau_hat: np.ndarray | None = None) -> list[int]:
    """Chain of argmax predecessors from ``node`` down to a minimal node.

    Ties go to the spatially closest predecessor, then the lowest index.
    """
    if tau_hat is None:
        tau_hat = cosmological_time(graph)
    incoming = _incoming(graph)
    chain = [int(node)]
    cur = int(node)
    while True:
        edges = incoming.get(cur)
        if edges is None or len(edges) == 0:
            return chain
        vals = tau_hat[graph.src[edges]] + graph.w_proper[edges]
        best = vals.max()
        tied = edges[vals >= best - 1e-15 * max(1.0, abs(best))]
        if len(tied) > 1:
            q = graph.src[tied]
            sep = graph.model.spatial.distance(graph.x[q], np.repeat(graph.x[[cur]], len(q), axis=0))
            pick = np.lexsort((q, np.round(sep, 12)))[0]
            e = tied[pick]
        else:
            e = tied[0]
        cur = int(graph.src[e])
        chain.append(cur)


def _incoming(graph: CausalGraph) -> dict[int, np.ndarray]:
    order = np.argsort(graph.dst, kind="stable")
    d = graph.dst[order]
    cuts = np.flatnonzero(np.diff(d)) + 1
    return {int(graph.dst[blk[0]]): blk for blk in np.split(order, cuts) if len(blk)}


# ---------------------------------------------------------------------------
# big bang and initial data


def lowest_level_ratio(space: TimedMetricSpace, level_tol: float = 1e-9) -> float:
    if space.n < 2:
        return 0.0
    low = np.flatnonzero(space.tau <= space.tau.min() + level_tol)
    diam = space.diameter()
    return float(space.dist[np.ix_(low, low)].max() / diam) if diam > 0 else 0.0


def augment_big_bang(
    space: TimedMetricSpace,
    *,
    guard: float = 0.25,
    close_paths: bool = True,
    point_id: str = "p_BB",
    tol: float = 1e-9,
) -> TimedMetricSpace:
    """Glue a point at tau = 0 with d(p_BB, x) = tau(x) and make it the basepoint.

    With ``close_paths`` distances become min(d(x, y), tau(x) + tau(y)), the
    metric generated by the new point; without it the old distances are kept
    and the result must already satisfy the triangle inequality.  A guard flag
    is raised in ``meta`` when the lowest level is not small compared with
    the whole space, i.e. the input does not look like it shrinks to a point.
    """
    if point_id in space.point_ids:
        raise AugmentationError(f"point id {point_id!r} already present")
    if space.n and space.tau.min() <= 0:
        raise AugmentationError("every point needs tau > 0 to sit at positive distance from p_BB")
    n = space.n
    D = np.zeros((n + 1, n + 1))
    inner = space.dist
    if close_paths:
        inner = np.minimum(inner, space.tau[:, None] + space.tau[None, :])
        np.fill_diagonal(inner, 0.0)
    D[:n, :n] = inner
    D[n, :n] = D[:n, n] = space.tau
    ratio = lowest_level_ratio(space)
    out = TimedMetricSpace(
        space.point_ids + (point_id,),
        np.append(space.tau, 0.0),
        D,
        basepoint=point_id,
        meta={
            **space.meta,
            "big_bang": {
                "lowest_level_ratio": ratio,
                "guard": guard,
                "flagged": bool(ratio > guard),
                "close_paths": close_paths,
                "distances_shortened": int(np.sum(inner < space.dist - tol)) // 2,
            },
        },
    )
    rep = validate(out, tol)
    if not rep.ok:
        raise AugmentationError(f"augmented space is invalid: {sorted(rep.kinds())}", rep)
    return out


def mark_initial_set(space: TimedMetricSpace, tol: float = 1e-9, slack: float = 0.0) -> TimedMetricSpace:
    """Mark {tau <= tol} as the initial set and record how well tau = d(., M) holds."""
    init = np.flatnonzero(space.tau <= tol)
    if len(init) == 0:
        raise StructureError(f"no point has tau <= {tol}")
    resid = np.abs(space.dist[:, init].min(axis=1) - space.tau)
    worst = int(np.argmax(resid))
    ids = space.point_ids
    return space.with_markers(
        basepoint=None,
        initial_set=[ids[i] for i in init],
        initial_data={
            "tol": tol,
            "slack": slack,
            "worst_residual": float(resid[worst]),
            "worst_point": ids[worst],
            "holds": bool(resid[worst] <= tol + slack),
        },
    )
