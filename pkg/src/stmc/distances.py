"""Certified bounds on Gromov-Hausdorff-type distances between timed metric spaces.

Every operation returns a :class:`DistanceBound` ``[lower, upper]``.  Small
inputs are solved exactly by branch-and-bound over correspondences; larger
ones get cheap lower bounds plus the best correspondence a seeded local
search finds.

Correspondences are written ``R(f, g) = {(x, f(x))} U {(g(y), y)}`` for maps
``f: X -> Y`` and ``g: Y -> X``.  Every minimal correspondence has this form,
and for the GH, kappa-GH and tau-H objectives (all monotone in R) minimal
correspondences suffice.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import CapabilityError, TimedMetricSpace, content_hash, match_isometry, restrict_level, restrict_strip, validate
from .embed import hausdorff_1d, hausdorff_from_cost

SCHEMA = "bound-v1"
DEFAULT_SEED = 0x5EED
INF = math.inf
EXACT_HARD_LIMIT = 6
ISOMETRY_STEPS = 50
OPS = ("gh", "kappa_gh", "timeless", "level_sup", "level_lp", "strip_sup", "strip_lp", "tau_h", "bb_gh", "fd_hh")


class PreconditionError(ValueError):
    """Inputs lack what an operation needs (basepoint, initial set, points)."""


@dataclass(frozen=True)
class Options:
    exact_max_n: int = 4
    budget: int = 10_000
    seed: int = DEFAULT_SEED
    restarts: int = 1
    search_max_n: int = 256
    saturate: bool = True
    normalized: bool = False  # p-th root for the lp variants; off by default

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("search budget must be > 0")
        if self.exact_max_n > EXACT_HARD_LIMIT:
            raise CapabilityError(f"exact enumeration is limited to n <= {EXACT_HARD_LIMIT}")


@dataclass(frozen=True)
class Correspondence:
    pairs: tuple[tuple[int, int], ...]
    shape: tuple[int, int]

    def __post_init__(self):
        pairs = tuple(sorted({(int(a), int(b)) for a, b in self.pairs}))
        nx, ny = self.shape
        if not pairs:
            raise ValueError("a correspondence needs at least one pair")
        if {a for a, _ in pairs} != set(range(nx)) or {b for _, b in pairs} != set(range(ny)):
            raise ValueError("both projections of a correspondence must be surjective")
        object.__setattr__(self, "pairs", pairs)

    def transpose(self) -> "Correspondence":
        return Correspondence(tuple((b, a) for a, b in self.pairs), self.shape[::-1])

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        p = np.array(self.pairs, dtype=int)
        return p[:, 0], p[:, 1]


@dataclass(frozen=True)
class DistanceBound:
    op: str
    lower: float
    upper: float
    method: tuple[str, ...]
    witness: Correspondence | None = None
    seed: int | None = None
    evals: int = 0
    inputs: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, up = float(self.lower), float(self.upper)
        if not lo <= up + 1e-12 * max(1.0, abs(up)) and not (math.isinf(lo) and math.isinf(up)):
            raise AssertionError(f"{self.op}: lower {lo} exceeds upper {up}")
        object.__setattr__(self, "lower", min(lo, up))
        object.__setattr__(self, "upper", up)

    @property
    def exact(self) -> bool:
        return "brute" in self.method

    def to_json(self, ids_x: Sequence[str] | None = None, ids_y: Sequence[str] | None = None) -> dict:
        wit = None
        if self.witness is not None:
            wit = [
                [ids_x[a] if ids_x else a, ids_y[b] if ids_y else b] for a, b in self.witness.pairs
            ]
        return {
            "schema": SCHEMA,
            "op": self.op,
            "lower": _num(self.lower),
            "upper": _num(self.upper),
            "method": list(self.method),
            "witness_pairs": wit,
            "seed": self.seed,
            "evals": self.evals,
            "inputs": list(self.inputs),
            **({"extra": self.extra} if self.extra else {}),
        }


def _num(v: float):
    return "inf" if v == INF else float(v)


def parse_num(v) -> float:
    return INF if v == "inf" else float(v)


# ---------------------------------------------------------------------------
# lower bounds


def _values(d: np.ndarray) -> np.ndarray:
    # 0 belongs to the value set: two points may share a partner
    n = d.shape[0]
    return np.append(d[np.triu_indices(n, k=1)], 0.0)


def gh_lower_bound(dX: np.ndarray, dY: np.ndarray, local_limit: int = 40_000) -> float:
    """Max of cheap GH lower bounds; each term is <= dis(R) / 2 for every R."""
    nx, ny = dX.shape[0], dY.shape[0]
    terms = [0.5 * abs(dX.max(initial=0.0) - dY.max(initial=0.0))]
    terms.append(0.5 * hausdorff_1d(_values(dX), _values(dY)))
    terms.append(0.5 * hausdorff_1d(dX.max(axis=1), dY.max(axis=1)))
    if nx * ny <= local_limit:
        # row profiles: a related pair (x, y) has d_H(dX[x], dY[y]) <= dis(R)
        rows_x = np.sort(dX, axis=1)
        rows_y = np.sort(dY, axis=1)
        C = np.empty((nx, ny))
        for i in range(nx):
            for j in range(ny):
                C[i, j] = hausdorff_1d(rows_x[i], rows_y[j])
        terms.append(0.5 * hausdorff_from_cost(C))
    return float(max(terms))


# ---------------------------------------------------------------------------
# objectives on a correspondence


def distortion(dX, dY, rx, ry) -> float:
    return float(np.abs(dX[np.ix_(rx, rx)] - dY[np.ix_(ry, ry)]).max(initial=0.0))


def kappa_cost(dX, dY, rx, ry) -> np.ndarray:
    """cost[x, y] = max over related (x', y') of |dX(x', x) - dY(y', y)|."""
    A = np.zeros((dX.shape[0], dY.shape[0]))
    for a, b in zip(rx, ry):
        np.maximum(A, np.abs(dX[a][:, None] - dY[b][None, :]), out=A)
    return A


@dataclass(frozen=True)
class _Problem:
    kind: str
    dX: np.ndarray
    dY: np.ndarray
    T: np.ndarray | None = None  # |tau_X - tau_Y| for tau_h
    bx: int | None = None
    by: int | None = None
    mx: np.ndarray | None = None
    my: np.ndarray | None = None

    @property
    def shape(self):
        return self.dX.shape[0], self.dY.shape[0]

    def value(self, rx, ry, exact_limit: int = 2_000_000) -> float:
        """Objective (or, for large inputs, a certified upper bound on it) at R."""
        dis = distortion(self.dX, self.dY, rx, ry)
        k = self.kind
        if k == "gh":
            return 0.5 * dis
        if k in ("bb", "fd"):
            return dis + self._glue_extra(rx, ry)
        nx, ny = self.shape
        if nx * ny * len(rx) <= exact_limit:
            A = kappa_cost(self.dX, self.dY, rx, ry)
            if k == "tau_h":
                A = np.maximum(A, self.T)
            return hausdorff_from_cost(A)
        # diagonal bound: each related pair realizes a cost <= max(tau gap, dis)
        if k == "tau_h":
            return max(dis, float(self.T[rx, ry].max()))
        return dis

    def _glue_extra(self, rx, ry) -> float:
        dX, dY = self.dX, self.dY
        if self.kind == "bb":
            return float((dX[self.bx, rx] + dY[ry, self.by]).min())
        to_my = dY[:, self.my].min(axis=1)
        to_mx = dX[:, self.mx].min(axis=1)
        a = (dX[np.ix_(self.mx, rx)] + to_my[ry][None, :]).min(axis=1).max()
        b = (dY[np.ix_(self.my, ry)] + to_mx[rx][None, :]).min(axis=1).max()
        return float(max(a, b))

    def partial_bound(self, A: np.ndarray, dis: float) -> float:
        k = self.kind
        if k == "gh":
            return 0.5 * dis
        if k in ("bb", "fd"):
            return dis
        if k == "tau_h":
            A = np.maximum(A, self.T)
        return hausdorff_from_cost(A)

    def saturate(self, rx, ry):
        """Add pairs that keep the distortion, which can only help the gluing terms."""
        rx, ry = list(rx), list(ry)
        A = kappa_cost(self.dX, self.dY, rx, ry)
        dis = distortion(self.dX, self.dY, rx, ry)
        present = np.zeros(A.shape, bool)
        present[rx, ry] = True
        while True:
            cand = np.argwhere(~present & (A <= dis))
            if not len(cand):
                return np.array(rx), np.array(ry)
            x, y = min(map(tuple, cand), key=lambda p: (A[p], p))
            rx.append(int(x))
            ry.append(int(y))
            present[x, y] = True
            np.maximum(A, np.abs(self.dX[x][:, None] - self.dY[y][None, :]), out=A)


class _Stop(Exception):
    pass


def _branch_and_bound(prob: _Problem, upper0: float, R0, lower: float, saturate: bool):
    """Exact minimum of the objective over correspondences R(f, g)."""
    dX, dY = prob.dX, prob.dY
    nx, ny = prob.shape
    best = [upper0, R0]
    evals = [0]
    tol = 1e-12
    base = prob.T if prob.T is not None else np.zeros((nx, ny))

    def leaf(A, dis, rx, ry):
        evals[0] += 1
        rx, ry = np.array(rx), np.array(ry)
        if prob.kind in ("bb", "fd"):
            if saturate:
                rx, ry = prob.saturate(rx, ry)
            v = prob.value(rx, ry)
        else:
            v = prob.partial_bound(A, dis)
        if v < best[0] - 1e-15:
            best[0], best[1] = v, (rx.copy(), ry.copy())
            if best[0] <= lower + tol:
                raise _Stop

    def extend(A, dis, x, rx, ry):
        return (
            np.maximum(A, np.abs(dX[x[0]][:, None] - dY[x[1]][None, :])),
            max(dis, float(A[x])),
            rx + [x[0]],
            ry + [x[1]],
        )

    x_order = list(range(nx))

    def assign_x(k, A, dis, rx, ry, covered):
        if k == nx:
            return cover_y(0, A, dis, rx, ry, covered)
        x = x_order[k]
        keys = np.maximum(A[x], base[x])
        for y in np.argsort(keys, kind="stable"):
            y = int(y)
            A2, dis2, rx2, ry2 = extend(A, dis, (x, y), rx, ry)
            if prob.partial_bound(A2, dis2) >= best[0] - 1e-15:
                continue
            covered[y] += 1
            assign_x(k + 1, A2, dis2, rx2, ry2, covered)
            covered[y] -= 1

    def cover_y(y, A, dis, rx, ry, covered):
        while y < ny and covered[y]:
            y += 1
        if y == ny:
            return leaf(A, dis, rx, ry)
        keys = np.maximum(A[:, y], base[:, y])
        for x in np.argsort(keys, kind="stable"):
            A2, dis2, rx2, ry2 = extend(A, dis, (int(x), y), rx, ry)
            if prob.partial_bound(A2, dis2) >= best[0] - 1e-15:
                continue
            cover_y(y + 1, A2, dis2, rx2, ry2, covered)

    try:
        assign_x(0, np.zeros((nx, ny)), 0.0, [], [], np.zeros(ny, int))
    except _Stop:
        pass
    return best[0], best[1], evals[0]


# ---------------------------------------------------------------------------
# heuristic search


def _rank_map(tX, tY) -> np.ndarray:
    """x of tau-rank i goes to the y of proportional tau-rank."""
    nx, ny = len(tX), len(tY)
    ox = np.lexsort((np.arange(nx), tX))
    oy = np.lexsort((np.arange(ny), tY))
    f = np.empty(nx, int)
    ranks = np.round(np.arange(nx) * (ny - 1) / max(nx - 1, 1)).astype(int)
    f[ox] = oy[ranks]
    return f


def _relation(f, g):
    nx, ny = len(f), len(g)
    rx = np.concatenate([np.arange(nx), g])
    ry = np.concatenate([f, np.arange(ny)])
    key = np.unique(rx * ny + ry)
    return key // ny, key % ny


def _isometry_candidate(prob: _Problem, tX, tY, max_n: int):
    """A structure-preserving bijection when one turns up within a bounded search."""
    nx, ny = prob.shape
    if nx != ny or nx == 0 or nx > max_n:
        return None
    tol = 1e-9 * max(1.0, float(prob.dX.max()))
    if prob.kind in ("tau_h", "bb", "fd"):
        allowed = np.abs(tX[:, None] - tY[None, :]) <= tol
    else:
        allowed = np.ones((nx, ny), bool)
    # sorted distance rows must agree
    rows_x, rows_y = np.sort(prob.dX, axis=1), np.sort(prob.dY, axis=1)
    for i in range(nx):
        allowed[i] &= np.abs(rows_y - rows_x[i]).max(axis=1) <= tol
    if prob.kind == "bb":
        allowed[prob.bx, :] = False
        allowed[:, prob.by] = False
        allowed[prob.bx, prob.by] = True
    elif prob.kind == "fd":
        mx, my = np.zeros(nx, bool), np.zeros(ny, bool)
        mx[prob.mx], my[prob.my] = True, True
        allowed &= mx[:, None] == my[None, :]
    f = match_isometry(prob.dX, prob.dY, allowed, tol, max_steps=ISOMETRY_STEPS * nx, order_key=tX)
    return None if f is None else np.asarray(f)


def _candidates(prob: _Problem, tX, tY, max_n: int):
    nx, ny = prob.shape
    cands = []
    if nx == ny:
        cands.append((np.arange(nx), np.arange(ny)))
    cands.append((_rank_map(tX, tY), _rank_map(tY, tX)))
    iso = _isometry_candidate(prob, tX, tY, max_n)
    if iso is not None:
        cands.insert(0, (iso, np.argsort(iso)))
    if prob.kind == "bb":
        extra = []
        for f, g in cands:
            f, g = f.copy(), g.copy()
            f[prob.bx], g[prob.by] = prob.by, prob.bx
            extra.append((f, g))
        cands += extra
    return cands


def _local_search(prob: _Problem, tX, tY, opts: Options, budget: int):
    """Best of the seeded candidates, then simulated annealing on (f, g)."""
    nx, ny = prob.shape
    evals = 0
    best_val, best_fg = INF, None
    for f, g in _candidates(prob, tX, tY, opts.search_max_n):
        v = prob.value(*_relation(f, g))
        evals += 1
        if v < best_val:
            best_val, best_fg = v, (f, g)
    if max(nx, ny) > opts.search_max_n or nx * ny == 1 or budget <= 1:
        return best_val, _relation(*best_fg), evals, False
    for r in range(opts.restarts):
        rng = np.random.default_rng([opts.seed, r])
        f, g = (a.copy() for a in best_fg)
        cur = best_val
        temp0 = max(cur, 1e-3) * 0.05
        steps = max(1, budget // opts.restarts)
        for step in range(steps):
            temp = temp0 * (1 - step / steps) + 1e-12
            f2, g2 = f.copy(), g.copy()
            if rng.random() < nx / (nx + ny):
                f2[rng.integers(nx)] = rng.integers(ny)
            else:
                g2[rng.integers(ny)] = rng.integers(nx)
            v = prob.value(*_relation(f2, g2))
            evals += 1
            if v <= cur or rng.random() < math.exp(-(v - cur) / temp):
                f, g, cur = f2, g2, v
                if cur < best_val:
                    best_val, best_fg = cur, (f.copy(), g.copy())
    return best_val, _relation(*best_fg), evals, True


# ---------------------------------------------------------------------------
# driver


def _canonical(X: TimedMetricSpace, Y: TimedMetricSpace):
    hx, hy = content_hash(X), content_hash(Y)
    return (hx, hy, False) if hx <= hy else (hy, hx, True)


def _solve(
    op: str,
    kind: str,
    X: TimedMetricSpace,
    Y: TimedMetricSpace,
    opts: Options,
    lower_fn: Callable[[TimedMetricSpace, TimedMetricSpace], float],
) -> DistanceBound:
    hx, hy, swapped = _canonical(X, Y)
    if swapped:
        X, Y = Y, X
    prob = _make_problem(kind, X, Y)
    lower = lower_fn(X, Y)
    nx, ny = prob.shape
    exact = max(nx, ny) <= opts.exact_max_n
    upper, (rx, ry), evals, searched = _local_search(prob, X.tau, Y.tau, opts, 1 if exact else opts.budget)
    method = ["local_search"] if searched else ["candidates"]
    if exact:
        if max(nx, ny) >= 5:
            warnings.warn(f"exact enumeration at n = {max(nx, ny)} can take seconds", RuntimeWarning, stacklevel=3)
        exact_val, R, n_leaves = _branch_and_bound(prob, upper, (rx, ry), lower, opts.saturate)
        evals += n_leaves
        upper, (rx, ry) = exact_val, R
        if kind in ("bb", "fd"):
            method = ["enumerated"]
        else:
            lower = upper
            method = ["brute"]
    elif kind in ("bb", "fd") and opts.saturate and max(nx, ny) <= 60:
        rx, ry = prob.saturate(rx, ry)
        upper = min(upper, prob.value(rx, ry))
    if kind in ("bb", "fd"):
        method.insert(0, "gluing")
    if lower > 0 and "brute" not in method:
        method.append("projection_lb")
    W = Correspondence(tuple(zip(rx.tolist(), ry.tolist())), (nx, ny))
    if swapped:
        W = W.transpose()
    return DistanceBound(op, lower, upper, tuple(method), W, opts.seed, evals, (hx, hy) if not swapped else (hy, hx))


def _make_problem(kind: str, X: TimedMetricSpace, Y: TimedMetricSpace) -> _Problem:
    if kind == "tau_h":
        return _Problem(kind, X.dist, Y.dist, T=np.abs(X.tau[:, None] - Y.tau[None, :]))
    if kind == "bb":
        return _Problem(kind, X.dist, Y.dist, bx=X.basepoint_index, by=Y.basepoint_index)
    if kind == "fd":
        return _Problem(kind, X.dist, Y.dist, mx=X.initial_indices, my=Y.initial_indices)
    return _Problem(kind, X.dist, Y.dist)


def _gh_lower(X, Y):
    return gh_lower_bound(X.dist, Y.dist)


def _tau_lower(X, Y):
    return max(gh_lower_bound(X.dist, Y.dist), hausdorff_1d(X.tau, Y.tau))


def _empty_case(op, X, Y, opts) -> DistanceBound | None:
    if X.n and Y.n:
        return None
    v = 0.0 if X.n == Y.n else INF
    return DistanceBound(op, v, v, ("empty",), None, opts.seed, 0, (content_hash(X), content_hash(Y)))


def _require_nonempty(op, X, Y):
    if X.empty or Y.empty:
        raise PreconditionError(f"{op} needs two nonempty spaces")


def gh(X: TimedMetricSpace, Y: TimedMetricSpace, opts: Options | None = None) -> DistanceBound:
    """Gromov-Hausdorff distance, half the least distortion of a correspondence.

    Empty against nonempty is +inf; two empty spaces are at distance 0.
    """
    opts = opts or Options()
    return _empty_case("gh", X, Y, opts) or _solve("gh", "gh", X, Y, opts, _gh_lower)


def timeless_sgh(X, Y, opts: Options | None = None) -> DistanceBound:
    """GH distance of the underlying metric spaces; time plays no role."""
    b = gh(X, Y, opts)
    return DistanceBound("timeless", b.lower, b.upper, b.method, b.witness, b.seed, b.evals, b.inputs)


def kappa_gh(X, Y, opts: Options | None = None) -> DistanceBound:
    """Least Hausdorff distance between Kuratowski images over paired landmark orders."""
    opts = opts or Options()
    _require_nonempty("kappa_gh", X, Y)
    return _solve("kappa_gh", "kappa", X, Y, opts, _gh_lower)


def tau_h(X, Y, opts: Options | None = None) -> DistanceBound:
    """Same as kappa_gh with time prepended as coordinate 0 of each embedding."""
    opts = opts or Options()
    _require_nonempty("tau_h", X, Y)
    return _solve("tau_h", "tau_h", X, Y, opts, _tau_lower)


def _check_basepoint(S: TimedMetricSpace, tol=1e-9):
    if S.basepoint is None:
        raise PreconditionError("bb_gh needs a basepoint on both spaces")
    if validate(S, tol, triangle=False).get("basepoint"):
        raise PreconditionError(f"basepoint {S.basepoint!r} does not satisfy d(p_BB, x) = tau(x)")


def _check_initial(S: TimedMetricSpace, tol=1e-9):
    if not S.initial_set:
        raise PreconditionError("fd_hh needs an initial set on both spaces")
    if validate(S, tol, triangle=False).get("initial_set"):
        raise PreconditionError("initial set does not satisfy tau = distance to the set")


def bb_gh(X, Y, opts: Options | None = None, tol: float = 1e-9) -> DistanceBound:
    """Pointed distance: Hausdorff term plus the distance between the basepoints.

    Upper bounds come from gluing X and Y along a correspondence; the lower
    bound uses that tau is the distance to the basepoint.
    """
    opts = opts or Options()
    _require_nonempty("bb_gh", X, Y)
    _check_basepoint(X, tol)
    _check_basepoint(Y, tol)
    return _solve("bb_gh", "bb", X, Y, opts, _tau_lower)


def fd_hh(X, Y, opts: Options | None = None, tol: float = 1e-9) -> DistanceBound:
    """Hausdorff distance of the spaces plus that of their initial sets, in one gluing."""
    opts = opts or Options()
    _require_nonempty("fd_hh", X, Y)
    _check_initial(X, tol)
    _check_initial(Y, tol)
    return _solve("fd_hh", "fd", X, Y, opts, _tau_lower)


# ---------------------------------------------------------------------------
# level and strip distances


@dataclass(frozen=True)
class Bins:
    centers: tuple[float, ...]
    half_width: float = 0.0

    def widths(self, lo: float, hi: float) -> np.ndarray:
        c = np.asarray(self.centers, float)
        if len(c) == 1:
            return np.array([hi - lo])
        mid = (c[1:] + c[:-1]) / 2
        edges = np.clip(np.concatenate([[lo], mid, [hi]]), lo, hi)
        return np.diff(edges)


def tau_range(X: TimedMetricSpace, Y: TimedMetricSpace) -> tuple[float, float]:
    """Joint time range over both inputs."""
    taus = np.concatenate([X.tau, Y.tau])
    if not len(taus):
        raise PreconditionError("both spaces are empty")
    return float(taus.min()), float(taus.max())


def default_bins(X, Y, decimals: int = 9) -> Bins:
    """One bin per distinct time value present in either space."""
    c = np.unique(np.round(np.concatenate([X.tau, Y.tau]), decimals))
    return Bins(tuple(c.tolist()), 10.0 ** -decimals)


def _check_cover(bins: Bins, lo: float, hi: float):
    if not bins.centers:
        raise ValueError("no bins")
    c = bins.centers
    if min(c) - bins.half_width > lo + 1e-9 or max(c) + bins.half_width < hi - 1e-9:
        raise ValueError(f"bin centers do not cover the time range [{lo}, {hi}]")


def _per_bin(X, Y, bins, opts):
    out = []
    for c in bins.centers:
        out.append(gh(restrict_level(X, c, bins.half_width), restrict_level(Y, c, bins.half_width), opts))
    return out


def _combine_sup(op, parts, opts, X, Y, extra) -> DistanceBound:
    lo = max(b.lower for b in parts)
    up = max(b.upper for b in parts)
    tags = sorted({t for b in parts for t in b.method})
    return DistanceBound(op, lo, up, tuple(tags), None, opts.seed, sum(b.evals for b in parts),
                         (content_hash(X), content_hash(Y)), extra)


def _combine_sum(op, parts, weights, p, opts, X, Y, extra) -> DistanceBound:
    def total(vals):
        s = float(sum(w * v**p for w, v in zip(weights, vals) if w > 0 or v == INF))
        return s ** (1 / p) if opts.normalized and s != INF else s

    lo = total([b.lower for b in parts])
    up = total([b.upper for b in parts])
    tags = sorted({t for b in parts for t in b.method})
    return DistanceBound(op, lo, up, tuple(tags), None, opts.seed, sum(b.evals for b in parts),
                         (content_hash(X), content_hash(Y)), extra)


def level_sup_gh(X, Y, bins: Bins | None = None, opts: Options | None = None) -> DistanceBound:
    """Worst GH distance between corresponding time levels."""
    opts = opts or Options()
    bins = bins or default_bins(X, Y)
    lo, hi = tau_range(X, Y)
    _check_cover(bins, lo, hi)
    parts = _per_bin(X, Y, bins, opts)
    return _combine_sup("level_sup", parts, opts, X, Y,
                        {"per_bin": [[c, _num(b.lower), _num(b.upper)] for c, b in zip(bins.centers, parts)]})


def level_lp_gh(X, Y, p: float, bins: Bins | None = None, opts: Options | None = None) -> DistanceBound:
    """Riemann sum of width * gh^p over the time levels (no p-th root unless normalized)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    opts = opts or Options()
    bins = bins or default_bins(X, Y)
    lo, hi = tau_range(X, Y)
    _check_cover(bins, lo, hi)
    parts = _per_bin(X, Y, bins, opts)
    return _combine_sum("level_lp", parts, bins.widths(lo, hi), p, opts, X, Y, {"p": p})


def default_strip_grid(X, Y, k: int = 4) -> list[tuple[float, float]]:
    lo, hi = tau_range(X, Y)
    levels = np.linspace(lo, hi, k)
    return [(float(s), float(t)) for i, s in enumerate(levels) for t in levels[i:]]


def _per_strip(X, Y, grid, opts):
    if not grid:
        raise ValueError("empty strip grid")
    out = []
    for s, t in grid:
        if s > t:
            raise ValueError(f"strip ({s}, {t}) has s > t")
        out.append(gh(restrict_strip(X, s, t), restrict_strip(Y, s, t), opts))
    return out


def strip_sup_gh(X, Y, grid: Sequence[tuple[float, float]] | None = None, opts: Options | None = None) -> DistanceBound:
    """Worst GH distance between corresponding strips s <= tau <= t."""
    opts = opts or Options()
    grid = list(grid) if grid is not None else default_strip_grid(X, Y)
    parts = _per_strip(X, Y, grid, opts)
    return _combine_sup("strip_sup", parts, opts, X, Y,
                        {"per_strip": [[s, t, _num(b.lower), _num(b.upper)] for (s, t), b in zip(grid, parts)]})


def strip_lp_gh(X, Y, p: float, grid=None, opts: Options | None = None) -> DistanceBound:
    """Double Riemann sum over (s, t) of w_s * w_t * gh^p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    opts = opts or Options()
    grid = list(grid) if grid is not None else default_strip_grid(X, Y)
    parts = _per_strip(X, Y, grid, opts)
    lo, hi = tau_range(X, Y)
    s_vals = sorted({s for s, _ in grid})
    t_vals = sorted({t for _, t in grid})
    ws = dict(zip(s_vals, Bins(tuple(s_vals)).widths(lo, hi)))
    wt = dict(zip(t_vals, Bins(tuple(t_vals)).widths(lo, hi)))
    weights = [ws[s] * wt[t] for s, t in grid]
    return _combine_sum("strip_lp", parts, weights, p, opts, X, Y, {"p": p})


def compute(op: str, X, Y, opts: Options | None = None, *, p: float = 1.0, bins: Bins | None = None, grid=None):
    """Dispatch by operation name (underscores or dashes)."""
    op = op.replace("-", "_")
    op = {"kappa": "kappa_gh", "timeless_sgh": "timeless", "bb": "bb_gh", "fd": "fd_hh"}.get(op, op)
    if op == "gh":
        return gh(X, Y, opts)
    if op == "kappa_gh":
        return kappa_gh(X, Y, opts)
    if op == "timeless":
        return timeless_sgh(X, Y, opts)
    if op == "tau_h":
        return tau_h(X, Y, opts)
    if op == "bb_gh":
        return bb_gh(X, Y, opts)
    if op == "fd_hh":
        return fd_hh(X, Y, opts)
    if op == "level_sup":
        return level_sup_gh(X, Y, bins, opts)
    if op == "level_lp":
        return level_lp_gh(X, Y, p, bins, opts)
    if op == "strip_sup":
        return strip_sup_gh(X, Y, grid, opts)
    if op == "strip_lp":
        return strip_lp_gh(X, Y, p, grid, opts)
    raise ValueError(f"unknown operation {op!r}; choose from {OPS}")
