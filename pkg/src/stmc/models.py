"""Analytic space-time models with exact causal predicates.

Two kinds are supported: warped products ``-dt^2 + f(t)^2 h`` over a flat
spatial factor (circle, flat 2-torus, Euclidean box) and regions of Minkowski
space.  The warp catalog is closed so that the light-cone integral
``int dt / f(t)`` has a closed form and ``is_causal`` stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SCHEMA = "model-v1"

WARPS = ("const", "linear", "one_minus_t", "sinusoidal")
SPATIAL = ("circle", "flat_torus", "euclidean")
KINDS = ("warped_product", "minkowski_region")
REGIONS = ("strip", "past_of_point", "past_of_ring")

RING_SEGMENT_SAMPLES = 32


class ModelError(ValueError):
    """Invalid model description or a point outside the model's domain."""


@dataclass(frozen=True)
class Warp:
    family: str
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in WARPS:
            raise ModelError(f"unknown warp family {self.family!r}; catalog is {WARPS}")
        p = {k: float(v) for k, v in self.params.items()}
        if self.family == "const":
            p.setdefault("c", 1.0)
            if p["c"] <= 0:
                raise ModelError("const warp needs c > 0")
        elif self.family == "sinusoidal":
            p.setdefault("a", 0.0)
            p.setdefault("omega", 2 * math.pi)
            if abs(p["a"]) > 1:
                raise ModelError("sinusoidal warp needs |a| <= 1 so that f >= 0")
            if p["omega"] <= 0:
                raise ModelError("sinusoidal warp needs omega > 0")
        object.__setattr__(self, "params", p)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        fam, p = self.family, self.params
        if fam == "const":
            return np.full_like(t, p["c"])
        if fam == "linear":
            return t.copy()
        if fam == "one_minus_t":
            return 1.0 - t
        return 1.0 + p["a"] * np.sin(p["omega"] * t)

    def light_cone_radius(self, t_lo, t_hi):
        """``int_{t_lo}^{t_hi} ds / f(s)``, elementwise, +inf across a zero of f."""
        t_lo = np.asarray(t_lo, dtype=float)
        t_hi = np.asarray(t_hi, dtype=float)
        fam, p = self.family, self.params
        with np.errstate(divide="ignore", invalid="ignore"):
            if fam == "const":
                out = (t_hi - t_lo) / p["c"]
            elif fam == "linear":
                out = np.where(t_lo > 0, np.log(t_hi / t_lo), np.inf)
            elif fam == "one_minus_t":
                out = np.where(t_hi < 1, np.log((1 - t_lo) / (1 - t_hi)), np.inf)
            else:
                out = _sin_warp_integral(p["a"], p["omega"], t_lo, t_hi)
        return np.where(t_hi == t_lo, 0.0, out)

    def singular_times(self, t_lo: float, t_hi: float) -> list[float]:
        """Zeros of f inside [t_lo, t_hi]."""
        fam, p = self.family, self.params
        if fam == "linear":
            return [0.0] if t_lo <= 0 <= t_hi else []
        if fam == "one_minus_t":
            return [1.0] if t_lo <= 1 <= t_hi else []
        if fam == "sinusoidal" and abs(p["a"]) == 1:
            w, sgn = p["omega"], math.copysign(1.0, p["a"])
            base = -sgn * math.pi / 2
            k0 = math.ceil((w * t_lo - base) / (2 * math.pi))
            out = []
            k = k0
            while (base + 2 * math.pi * k) / w <= t_hi:
                out.append((base + 2 * math.pi * k) / w)
                k += 1
            return out
        return []

    def to_json(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}


def _sin_warp_integral(a, w, t_lo, t_hi):
    u0, u1 = w * t_lo, w * t_hi
    if abs(a) < 1:
        r = math.sqrt(1 - a * a)

        def G(u):
            k = np.round(u / (2 * math.pi))
            h = np.clip(u / 2 - math.pi * k, -math.pi / 2, math.pi / 2)
            return (2 / r) * (np.arctan((np.tan(h) + a) / r) + math.pi * k)

        return (G(u1) - G(u0)) / w
    # |a| = 1: 1 + sgn*sin(u) vanishes at u = -sgn*pi/2 + 2 pi k
    sgn = math.copysign(1.0, a)
    base = -sgn * math.pi / 2
    k_lo = np.ceil((u0 - base) / (2 * math.pi))
    crosses = base + 2 * math.pi * k_lo <= u1

    def F(u):
        return np.tan(u / 2 - sgn * math.pi / 4)

    return np.where(crosses, np.inf, (F(u1) - F(u0)) / w)


@dataclass(frozen=True)
class Spatial:
    type: str
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in SPATIAL:
            raise ModelError(f"unknown spatial type {self.type!r}; choose from {SPATIAL}")
        p = {k: float(v) for k, v in self.params.items()}
        if self.type == "circle":
            p.setdefault("L", 2 * math.pi)
            if p["L"] <= 0:
                raise ModelError("circle needs L > 0")
        elif self.type == "flat_torus":
            p.setdefault("L1", 2 * math.pi)
            p.setdefault("L2", 2 * math.pi)
            if min(p["L1"], p["L2"]) <= 0:
                raise ModelError("torus needs L1, L2 > 0")
        else:
            p.setdefault("dim", 1)
            p.setdefault("extent", 1.0)
            if p["dim"] not in (1, 2, 3):
                raise ModelError("euclidean dimension must be 1, 2 or 3")
            p["dim"] = int(p["dim"])
        object.__setattr__(self, "params", p)

    @property
    def dim(self) -> int:
        return {"circle": 1, "flat_torus": 2}.get(self.type) or int(self.params["dim"])

    @property
    def periods(self) -> tuple[float | None, ...]:
        """Arc-length period of each coordinate (None: not periodic)."""
        if self.type == "circle":
            return (self.params["L"],)
        if self.type == "flat_torus":
            return (self.params["L1"], self.params["L2"])
        return (None,) * self.dim

    def to_arclength(self, x) -> np.ndarray:
        """Coordinates in units of the unwarped spatial metric (angles -> arc length)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        out = x.copy()
        for k, L in enumerate(self.periods):
            if L is not None:
                out[:, k] = np.mod(x[:, k], 2 * math.pi) * (L / (2 * math.pi))
        return out

    def displacement(self, xa, xb) -> np.ndarray:
        """Shortest displacement xb - xa in arc-length units, shape (n, dim)."""
        a, b = self.to_arclength(xa), self.to_arclength(xb)
        d = b - a
        for k, L in enumerate(self.periods):
            if L is not None:
                d[:, k] = (d[:, k] + L / 2) % L - L / 2
        return d

    def distance(self, xa, xb) -> np.ndarray:
        return np.linalg.norm(self.displacement(xa, xb), axis=1)

    def to_json(self) -> dict:
        p = dict(self.params)
        if "dim" in p:
            p["dim"] = int(p["dim"])
        return {"type": self.type, "params": p}


@dataclass(frozen=True)
class Region:
    type: str = "strip"
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.type not in REGIONS:
            raise ModelError(f"unknown region {self.type!r}; choose from {REGIONS}")
        p = dict(self.params)
        if self.type == "past_of_point":
            if "apex" not in p:
                raise ModelError("past_of_point needs an apex (t, x...)")
            p["apex"] = tuple(float(v) for v in p["apex"])
        elif self.type == "past_of_ring":
            p["R"] = float(p["R"])
            p["tau_max"] = float(p["tau_max"])
            if not 0 < 3 * p["tau_max"] < p["R"]:
                raise ModelError("past_of_ring needs 0 < 3*tau_max < R")
        object.__setattr__(self, "params", p)

    def to_json(self) -> dict:
        p = dict(self.params)
        if "apex" in p:
            p["apex"] = list(p["apex"])
        return {"type": self.type, "params": p}


@dataclass(frozen=True)
class ModelPoint:
    t: float
    x: tuple[float, ...]

    def __post_init__(self):
        x = self.x
        if np.ndim(x) == 0:
            x = (x,)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", tuple(float(v) for v in x))


@dataclass(frozen=True)
class SpacetimeModel:
    kind: str
    spatial: Spatial
    warp: Warp = field(default_factory=lambda: Warp("const", {"c": 1.0}))
    window: tuple[float, float] = (0.0, 1.0)
    region: Region | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        lo, hi = (float(v) for v in self.window)
        if not 0 <= lo < hi:
            raise ModelError(f"window needs 0 <= t_lo < t_hi, got ({lo}, {hi})")
        object.__setattr__(self, "window", (lo, hi))
        if self.kind == "minkowski_region":
            if self.spatial.type != "euclidean":
                raise ModelError("minkowski regions need a euclidean spatial factor")
            if self.warp.family != "const" or self.warp.params["c"] != 1.0:
                raise ModelError("minkowski regions need warp const(1)")
            if self.region is None:
                object.__setattr__(self, "region", Region("strip"))
            reg = self.region
            if reg.type == "past_of_point" and len(reg.params["apex"]) != 1 + self.spatial.dim:
                raise ModelError("apex must have 1 + spatial dimension coordinates")
        elif self.region is not None:
            raise ModelError("regions only apply to minkowski_region models")
        sing = [s for s in self.warp.singular_times(lo, hi) if lo < s < hi]
        if sing and not (self.warp.family == "sinusoidal"):
            raise ModelError(f"warp vanishes inside the window at t={sing}")

    @property
    def t_lo(self) -> float:
        return self.window[0]

    @property
    def t_hi(self) -> float:
        return self.window[1]

    @property
    def open_below(self) -> bool:
        """True when the warp vanishes at t_lo (big-bang slice is not sampled)."""
        return self.t_lo in self.warp.singular_times(self.t_lo, self.t_lo)

    @property
    def open_above(self) -> bool:
        return self.t_hi in self.warp.singular_times(self.t_hi, self.t_hi)

    @property
    def degenerate_levels(self) -> list[float]:
        """Interior times where the warp touches zero (sinusoidal with |a| = 1)."""
        return [s for s in self.warp.singular_times(self.t_lo, self.t_hi) if self.t_lo < s < self.t_hi]

    def to_json(self) -> dict:
        doc = {
            "schema": SCHEMA,
            "kind": self.kind,
            "spatial": self.spatial.to_json(),
            "warp": self.warp.to_json(),
            "window": list(self.window),
        }
        if self.region is not None:
            doc["region"] = self.region.to_json()
        return doc


def model_from_json(doc: dict) -> SpacetimeModel:
    if doc.get("schema", SCHEMA) != SCHEMA:
        raise ModelError(f"expected schema {SCHEMA!r}")
    region = doc.get("region")
    return SpacetimeModel(
        kind=doc["kind"],
        spatial=Spatial(doc["spatial"]["type"], doc["spatial"].get("params", {})),
        warp=Warp(doc.get("warp", {}).get("family", "const"), doc.get("warp", {}).get("params", {})),
        window=tuple(doc["window"]),
        region=None if region is None else Region(region["type"], region.get("params", {})),
    )


def warped(spatial: Spatial, warp: Warp, window=(0.0, 1.0)) -> SpacetimeModel:
    return SpacetimeModel("warped_product", spatial, warp, tuple(window))


def minkowski(dim: int, window, region: Region | None = None, extent: float = 1.0) -> SpacetimeModel:
    return SpacetimeModel(
        "minkowski_region",
        Spatial("euclidean", {"dim": dim, "extent": extent}),
        Warp("const", {"c": 1.0}),
        tuple(window),
        region or Region("strip"),
    )


# ---------------------------------------------------------------------------
# domain


def _as_arrays(model: SpacetimeModel, pts) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pts, ModelPoint):
        pts = [pts]
    t = np.array([p.t for p in pts], dtype=float)
    x = np.array([p.x for p in pts], dtype=float).reshape(len(t), model.spatial.dim)
    return t, x


def time_ok(model: SpacetimeModel, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    lo_ok = t > model.t_lo if model.open_below else t >= model.t_lo
    hi_ok = t < model.t_hi if model.open_above else t <= model.t_hi
    return lo_ok & hi_ok


def region_mask(model: SpacetimeModel, t, x) -> np.ndarray:
    """Vectorized domain predicate (time window + spatial domain + region)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float).reshape(len(t), model.spatial.dim)
    ok = time_ok(model, t)
    sp = model.spatial
    if sp.type == "euclidean" and (model.region is None or model.region.type == "strip"):
        ok &= np.all(np.abs(x) <= sp.params["extent"] + 1e-12, axis=1)
    reg = model.region
    if reg is not None and reg.type == "past_of_point":
        apex = np.array(reg.params["apex"])
        r = np.linalg.norm(x - apex[1:], axis=1)
        ok &= (r < apex[0] - t) & (t < apex[0])
    elif reg is not None and reg.type == "past_of_ring":
        R, tmax = reg.params["R"], reg.params["tau_max"]
        ok &= np.abs(np.linalg.norm(x, axis=1) - R) < 3 * tmax - t
    return ok


def contains(model: SpacetimeModel, p: ModelPoint) -> bool:
    if len(p.x) != model.spatial.dim:
        return False
    t, x = _as_arrays(model, p)
    return bool(region_mask(model, t, x)[0])


def _require(model: SpacetimeModel, *pts: ModelPoint) -> None:
    for p in pts:
        if not contains(model, p):
            raise ModelError(f"point {p} is outside the model domain")


def region_contains(model: SpacetimeModel, p: ModelPoint) -> bool:
    if model.kind != "minkowski_region":
        raise ModelError("region_contains applies to minkowski_region models")
    return contains(model, p)


def region_diameter_bound(model: SpacetimeModel) -> float:
    """Upper bound on the null-distance diameter of a Minkowski region.

    For the ring region this is a hand-derived over-estimate: radial move to
    the ring (<= 3 tau_max), vertical move (<= tau_max), half the ring
    (<= pi R), radial move out (<= 3 tau_max).
    """
    if model.kind != "minkowski_region":
        raise ModelError("region_diameter_bound applies to minkowski_region models")
    reg = model.region
    lo, hi = model.window
    if reg.type == "past_of_point":
        t_p = reg.params["apex"][0]
        return abs(hi - lo) + 2 * (t_p - lo)
    if reg.type == "past_of_ring":
        if model.spatial.dim == 1:
            return math.inf
        return math.pi * reg.params["R"] + 7 * reg.params["tau_max"]
    e, n = model.spatial.params["extent"], model.spatial.dim
    return max(hi - lo, 2 * e * math.sqrt(n))


def spatial_box(model: SpacetimeModel) -> list[tuple[float, float]]:
    """Coordinate bounds used for sampling (angles for periodic factors)."""
    sp = model.spatial
    if sp.type in ("circle", "flat_torus"):
        return [(0.0, 2 * math.pi)] * sp.dim
    reg = model.region
    if reg is not None and reg.type == "past_of_point":
        apex = reg.params["apex"]
        rad = apex[0] - model.t_lo
        return [(c - rad, c + rad) for c in apex[1:]]
    if reg is not None and reg.type == "past_of_ring":
        rad = reg.params["R"] + 3 * reg.params["tau_max"]
        return [(-rad, rad)] * sp.dim
    e = sp.params["extent"]
    return [(-e, e)] * sp.dim


# ---------------------------------------------------------------------------
# time, causality, proper time


def eval_tau(model: SpacetimeModel, p: ModelPoint) -> float:
    _require(model, p)
    return p.t - model.t_lo


def tau_of(model: SpacetimeModel, t) -> np.ndarray:
    return np.asarray(t, dtype=float) - model.t_lo


def causal_mask(model: SpacetimeModel, tp, xp, tq, xq) -> np.ndarray:
    """Elementwise ``q in J^-(p)`` for arrays of endpoints (domain assumed)."""
    tp, tq = np.asarray(tp, float), np.asarray(tq, float)
    sp = model.spatial
    dist = sp.distance(xq, xp)
    radius = model.warp.light_cone_radius(np.minimum(tq, tp), tp)
    ok = (tq <= tp) & (dist <= radius * (1 + 1e-13) + 1e-15)
    same = (tq == tp) & (dist == 0)
    ok = np.where(tq == tp, same, ok)
    reg = model.region
    if reg is not None and reg.type == "past_of_ring" and np.any(ok):
        # non-convex: the straight segment has to stay inside
        idx = np.flatnonzero(ok)
        xq_, xp_ = np.asarray(xq, float).reshape(-1, sp.dim), np.asarray(xp, float).reshape(-1, sp.dim)
        for lam in np.linspace(0, 1, RING_SEGMENT_SAMPLES + 2)[1:-1]:
            tt = tq[idx] + lam * (tp[idx] - tq[idx])
            xx = xq_[idx] + lam * (xp_[idx] - xq_[idx])
            inside = region_mask(model, tt, xx)
            ok[idx[~inside]] = False
    return ok


def is_causal(model: SpacetimeModel, p: ModelPoint, q: ModelPoint) -> bool:
    """True iff q lies in the causal past of p."""
    _require(model, p, q)
    tp, xp = _as_arrays(model, p)
    tq, xq = _as_arrays(model, q)
    return bool(causal_mask(model, tp, xp, tq, xq)[0])


def proper_time_batch(model: SpacetimeModel, tp, xp, tq, xq, n_quad: int = 64) -> np.ndarray:
    """Midpoint-rule proper time along straight coordinate segments q -> p."""
    tp, tq = np.asarray(tp, float), np.asarray(tq, float)
    dt = tp - tq
    dx = model.spatial.distance(xq, xp)
    lam = (np.arange(n_quad) + 0.5) / n_quad
    t = tq[:, None] + lam[None, :] * dt[:, None]
    f = model.warp(t)
    # spacelike stretches of a straight segment (possible for non-const warps) count as 0
    integrand = np.sqrt(np.maximum(dt[:, None] ** 2 - (f * dx[:, None]) ** 2, 0.0))
    return np.where(dx == 0, dt, integrand.mean(axis=1))


def proper_time_segment(model: SpacetimeModel, p: ModelPoint, q: ModelPoint, n_quad: int = 64) -> float:
    if n_quad < 1:
        raise ValueError("n_quad must be >= 1")
    if not is_causal(model, p, q):
        raise ModelError("proper_time_segment needs q in the causal past of p")
    tp, xp = _as_arrays(model, p)
    tq, xq = _as_arrays(model, q)
    return float(proper_time_batch(model, tp, xp, tq, xq, n_quad)[0])


# ---------------------------------------------------------------------------
# closed-form null distances


def linear_warp_level_distance(tau0: float, sep: float, floor: float = 0.0) -> float:
    """Null distance between two points on the level t = tau0 of -dt^2 + t^2 h.

    ``sep`` is their h-distance and ``floor`` the lowest time available
    (0 for the full big-bang model, s for the strip starting at s).  The
    optimal chain runs down the light cone to level s, along that level, and
    back up; with ``theta_C = log(tau0/s)`` its length is
    ``2(tau0 - s) + s (sep - 2 theta_C)``, increasing in s once the cones have
    not yet met, so s sits at max(floor, tau0 exp(-sep/2)).
    """
    if sep <= 0:
        return 0.0
    s = max(floor, tau0 * math.exp(-sep / 2))
    if s >= tau0:
        return tau0 * sep
    return 2 * (tau0 - s) + s * (sep - 2 * math.log(tau0 / s))


def null_dist_oracle(model: SpacetimeModel, p: ModelPoint, q: ModelPoint) -> float | None:
    """Exact null distance where a closed form is known, else None."""
    _require(model, p, q)
    if is_causal(model, p, q) or is_causal(model, q, p):
        return abs(eval_tau(model, p) - eval_tau(model, q))
    tp, xp = _as_arrays(model, p)
    tq, xq = _as_arrays(model, q)
    sep = float(model.spatial.distance(xp, xq)[0])
    dt = abs(p.t - q.t)
    warp = model.warp
    if warp.family == "const":
        reg = model.region
        if reg is None or reg.type in ("strip", "past_of_point"):
            return max(dt, warp.params["c"] * sep)
        return None
    if warp.family == "linear" and model.spatial.type == "circle" and dt == 0:
        return linear_warp_level_distance(p.t, sep, floor=model.t_lo)
    return None
