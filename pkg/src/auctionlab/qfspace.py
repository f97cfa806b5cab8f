"""Bidding quantile functions and their algebra.

A quantile function maps a uniform quantile q in [0,1] to a bid (or value)
in [0,1] and is weakly increasing.  The module provides evaluation,
derivatives, the generalized-inverse CDF, the virtual transform, regularity
and inverse-Lipschitz diagnostics, the increasing rearrangement, and JSON
serialization.
"""
from __future__ import annotations

import json
import math

import numpy as np

# Numerical continuity tolerances applied when composite kinds are built.
VALUE_CONT_TOL = 1e-9
DERIV_CONT_TOL = 1e-6


def _as_quantile(q):
    """Validate and convert a quantile argument; returns (array, was_scalar)."""
    arr = np.asarray(q, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if arr.size and (arr.min() < -1e-12 or arr.max() > 1 + 1e-12):
        raise ValueError("quantile outside [0, 1]")
    return np.clip(arr, 0.0, 1.0), scalar


def _ret(arr, scalar):
    return float(arr[0]) if scalar else arr


class QuantileFunction:
    """Base class: an increasing map from [0,1] to bids.

    Values are immutable after construction; instances are safe to share
    across threads.
    """

    cached_lipschitz_lower = None

    # -- evaluation ----------------------------------------------------

    def __call__(self, q):
        q, scalar = _as_quantile(q)
        return _ret(self._eval(q), scalar)

    def derivative(self, q):
        q, scalar = _as_quantile(q)
        return _ret(self._deriv(q), scalar)

    def cdf(self, v):
        """Generalized inverse sup{q : f(q) <= v}, clamped to [0,1]."""
        v = np.asarray(v, dtype=float)
        scalar = v.ndim == 0
        out = self._cdf(np.atleast_1d(v))
        return _ret(out, scalar)

    def integral_to_one(self, x):
        """Integral of f over [x, 1]."""
        x, scalar = _as_quantile(x)
        return _ret(self._integral_to_one(x), scalar)

    def breakpoints(self):
        """Interior quantiles where smoothness may break (kinks, joins)."""
        return ()

    # -- defaults ------------------------------------------------------

    def _cdf(self, v):
        return _bisect_cdf(self._eval, v)

    def _integral_to_one(self, x):
        # Generic fallback: composite trapezoid on a dense grid honoring
        # breakpoints.  Parametric kinds override with closed forms.
        base = np.unique(np.concatenate([np.linspace(0.0, 1.0, 2049),
                                         np.asarray(self.breakpoints(), float)]))
        vals = self._eval(base)
        seg = 0.5 * (vals[1:] + vals[:-1]) * np.diff(base)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        upto_x = np.interp(x, base, cum)
        return total - upto_x

    def min_slope(self, grid_size=1024):
        """Lower bound on the slope, scanned on a grid (kinds may override)."""
        g = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid_size),
                                      np.asarray(self.breakpoints(), float)]))
        vals = self._eval(g)
        return float(np.min(np.diff(vals) / np.diff(g)))

    def to_dict(self):
        raise NotImplementedError

    def to_json(self):
        return json.dumps(self.to_dict())


def _bisect_cdf(f, v, iters=60):
    """sup{q in [0,1] : f(q) <= v} for increasing f, by vectorized bisection."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    f0 = float(f(np.array([0.0]))[0])
    f1 = float(f(np.array([1.0]))[0])
    below = v < f0
    above = v >= f1
    out[below] = 0.0
    out[above] = 1.0
    active = ~(below | above)
    if np.any(active):
        va = v[active]
        lo = np.zeros_like(va)
        hi = np.ones_like(va)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            le = f(mid) <= va
            lo = np.where(le, mid, lo)
            hi = np.where(le, hi, mid)
        out[active] = 0.5 * (lo + hi)
    return out


class Uniform(QuantileFunction):
    """Linear qf lo + (hi - lo) * q; the uniform bid distribution on [lo, hi]."""

    kind = "uniform"

    def __init__(self, lo, hi):
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("Uniform requires 0 <= lo <= hi <= 1")
        self.lo = float(lo)
        self.hi = float(hi)
        self.cached_lipschitz_lower = self.hi - self.lo if hi > lo else None

    def _eval(self, q):
        return self.lo + (self.hi - self.lo) * q

    def _deriv(self, q):
        return np.full_like(q, self.hi - self.lo)

    def _cdf(self, v):
        if self.hi == self.lo:
            return np.where(v >= self.lo, 1.0, 0.0)
        return np.clip((v - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def _integral_to_one(self, x):
        return self.lo * (1.0 - x) + 0.5 * (self.hi - self.lo) * (1.0 - x * x)

    def min_slope(self, grid_size=1024):
        return self.hi - self.lo

    def to_dict(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


class PiecewiseLinear(QuantileFunction):
    """Piecewise-linear qf through (grid, values); the universal fallback kind."""

    kind = "piecewise_linear"

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float).copy()
        values = np.asarray(values, dtype=float).copy()
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("grid and values must be equal-length 1-D arrays")
        if not (abs(grid[0]) < 1e-12 and abs(grid[-1] - 1.0) < 1e-12):
            raise ValueError("grid must start at 0 and end at 1")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.diff(values) < -1e-12):
            raise ValueError("values must be increasing")
        if values.min() < -1e-12 or values.max() > 1 + 1e-12:
            raise ValueError("values must lie in [0, 1]")
        grid[0], grid[-1] = 0.0, 1.0
        values = np.clip(values, 0.0, 1.0)
        values = np.maximum.accumulate(values)
        self.grid = grid
        self.values = values
        self._slopes = np.diff(values) / np.diff(grid)
        seg = 0.5 * (values[1:] + values[:-1]) * np.diff(grid)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        for a in (self.grid, self.values, self._slopes, self._cum):
            a.setflags(write=False)
        ms = float(self._slopes.min())
        self.cached_lipschitz_lower = ms if ms > 0 else None

    def _seg_index(self, q):
        idx = np.searchsorted(self.grid, q, side="right") - 1
        return np.clip(idx, 0, len(self._slopes) - 1)

    def _eval(self, q):
        return np.interp(q, self.grid, self.values)

    def _deriv(self, q):
        # Right-derivative at kinks, left-derivative at q = 1.
        return self._slopes[self._seg_index(q)]

    def _cdf(self, v):
        j = np.searchsorted(self.values, v, side="right")
        out = np.empty_like(np.asarray(v, float))
        out[j == 0] = 0.0
        out[j == len(self.values)] = 1.0
        mid = (j > 0) & (j < len(self.values))
        if np.any(mid):
            jm = j[mid]
            v0 = self.values[jm - 1]
            v1 = self.values[jm]
            g0 = self.grid[jm - 1]
            g1 = self.grid[jm]
            # v1 > v >= v0 by construction, so the segment is strictly rising.
            out[mid] = g0 + (v[mid] - v0) / (v1 - v0) * (g1 - g0)
        return out

    def _integral_to_one(self, x):
        idx = self._seg_index(x)
        dx = x - self.grid[idx]
        upto = self._cum[idx] + self.values[idx] * dx + 0.5 * self._slopes[idx] * dx * dx
        return self._cum[-1] - upto

    def min_slope(self, grid_size=1024):
        return float(self._slopes.min())

    def breakpoints(self):
        return tuple(self.grid[1:-1])

    def to_dict(self):
        return {"kind": self.kind, "grid": list(self.grid), "values": list(self.values)}


class ExpHead(QuantileFunction):
    """Exponential piece a1*exp(a2*q) below join_quantile, then a tail qf.

    With tail=None the exponential extends over all of [0,1].  Used for the
    lifted heads that repair negative virtual-value regions.
    """

    kind = "exp_head"

    def __init__(self, a1, a2, join_quantile, tail, check=True):
        if a1 <= 0 or a2 <= 0:
            raise ValueError("ExpHead requires a1 > 0 and a2 > 0")
        if not (0.0 < join_quantile <= 1.0) and tail is not None:
            raise ValueError("join_quantile must lie in (0, 1]")
        self.a1 = float(a1)
        self.a2 = float(a2)
        self.join_quantile = float(join_quantile) if tail is not None else 1.0
        self.tail = tail
        if tail is not None and check:
            j = self.join_quantile
            hv = self.a1 * math.exp(self.a2 * j)
            tv = float(tail(j))
            if abs(hv - tv) > VALUE_CONT_TOL:
                raise ValueError(f"value mismatch at join: head {hv}, tail {tv}")
            hd = self.a1 * self.a2 * math.exp(self.a2 * j)
            td = float(tail.derivative(j))
            if abs(hd - td) > max(DERIV_CONT_TOL, DERIV_CONT_TOL * abs(td)):
                raise ValueError(f"derivative mismatch at join: head {hd}, tail {td}")

    def _head(self, q):
        return self.a1 * np.exp(self.a2 * q)

    def _eval(self, q):
        if self.tail is None:
            return self._head(q)
        head = q < self.join_quantile
        out = np.empty_like(q)
        out[head] = self._head(q[head])
        out[~head] = np.atleast_1d(self.tail(q[~head]))
        return out

    def _deriv(self, q):
        if self.tail is None:
            return self.a1 * self.a2 * np.exp(self.a2 * q)
        head = q < self.join_quantile
        out = np.empty_like(q)
        out[head] = self.a1 * self.a2 * np.exp(self.a2 * q[head])
        out[~head] = np.atleast_1d(self.tail.derivative(q[~head]))
        return out

    def _cdf(self, v):
        out = np.empty_like(np.asarray(v, float))
        vj = self.a1 * math.exp(self.a2 * self.join_quantile)
        below = v < self.a1
        out[below] = 0.0
        head = (~below) & (v < vj)
        if np.any(head):
            out[head] = np.log(v[head] / self.a1) / self.a2
        rest = v >= vj
        if np.any(rest):
            if self.tail is None:
                out[rest] = 1.0
            else:
                out[rest] = np.maximum(self.join_quantile,
                                       np.atleast_1d(self.tail.cdf(v[rest])))
        return out

    def _head_integral(self, a, b):
        return self.a1 / self.a2 * (np.exp(self.a2 * b) - np.exp(self.a2 * a))

    def _integral_to_one(self, x):
        j = self.join_quantile
        if self.tail is None:
            return self._head_integral(x, 1.0)
        tail_full = float(self.tail.integral_to_one(j))
        in_head = x < j
        out = np.empty_like(x)
        out[in_head] = self._head_integral(x[in_head], j) + tail_full
        out[~in_head] = np.atleast_1d(self.tail.integral_to_one(x[~in_head]))
        return out

    def min_slope(self, grid_size=1024):
        head_min = self.a1 * self.a2
        if self.tail is None:
            return head_min
        g = np.unique(np.concatenate([
            np.linspace(self.join_quantile, 1.0, grid_size),
            [b for b in self.tail.breakpoints() if b >= self.join_quantile]]))
        if len(g) < 2:
            return head_min
        vals = np.atleast_1d(self.tail(g))
        return float(min(head_min, np.min(np.diff(vals) / np.diff(g))))

    def breakpoints(self):
        if self.tail is None:
            return ()
        j = self.join_quantile
        return tuple([j] + [b for b in self.tail.breakpoints() if b > j])

    def to_dict(self):
        return {"kind": self.kind, "a1": self.a1, "a2": self.a2,
                "join_quantile": self.join_quantile,
                "tail": None if self.tail is None else self.tail.to_dict()}


class SinHead(QuantileFunction):
    """Trigonometric head amp*(sin(a3*q + pi/4) + 1) below join_quantile.

    Covers the lifting case where the virtual qf has zero slope at the
    matching point, so an exponential head cannot fit.
    """

    kind = "sin_head"

    def __init__(self, amplitude, a3, join_quantile, tail, check=True):
        if amplitude <= 0 or a3 <= 0 or not (0.0 < join_quantile <= 1.0):
            raise ValueError("SinHead requires positive amplitude, a3 and join")
        if a3 * join_quantile + math.pi / 4 > math.pi / 2 + 1e-9:
            raise ValueError("head must stay on the increasing quarter of sin")
        self.amplitude = float(amplitude)
        self.a3 = float(a3)
        self.join_quantile = float(join_quantile)
        self.tail = tail
        if check:
            j = self.join_quantile
            hv = self.amplitude * (math.sin(self.a3 * j + math.pi / 4) + 1.0)
            tv = float(tail(j))
            if abs(hv - tv) > VALUE_CONT_TOL:
                raise ValueError(f"value mismatch at join: head {hv}, tail {tv}")

    def _head(self, q):
        return self.amplitude * (np.sin(self.a3 * q + np.pi / 4) + 1.0)

    def _eval(self, q):
        head = q < self.join_quantile
        out = np.empty_like(q)
        out[head] = self._head(q[head])
        out[~head] = np.atleast_1d(self.tail(q[~head]))
        return out

    def _deriv(self, q):
        head = q < self.join_quantile
        out = np.empty_like(q)
        out[head] = self.amplitude * self.a3 * np.cos(self.a3 * q[head] + np.pi / 4)
        out[~head] = np.atleast_1d(self.tail.derivative(q[~head]))
        return out

    def _cdf(self, v):
        out = np.empty_like(np.asarray(v, float))
        v0 = self.amplitude * (math.sin(math.pi / 4) + 1.0)
        vj = self.amplitude * (math.sin(self.a3 * self.join_quantile + math.pi / 4) + 1.0)
        below = v < v0
        out[below] = 0.0
        head = (~below) & (v < vj)
        if np.any(head):
            arg = np.clip(v[head] / self.amplitude - 1.0, -1.0, 1.0)
            out[head] = (np.arcsin(arg) - np.pi / 4) / self.a3
        rest = v >= vj
        if np.any(rest):
            out[rest] = np.maximum(self.join_quantile,
                                   np.atleast_1d(self.tail.cdf(v[rest])))
        return out

    def _head_integral(self, a, b):
        amp, a3 = self.amplitude, self.a3
        anti = lambda x: amp * (x - np.cos(a3 * x + np.pi / 4) / a3)
        return anti(b) - anti(a)

    def _integral_to_one(self, x):
        j = self.join_quantile
        tail_full = float(self.tail.integral_to_one(j))
        in_head = x < j
        out = np.empty_like(x)
        out[in_head] = self._head_integral(x[in_head], j) + tail_full
        out[~in_head] = np.atleast_1d(self.tail.integral_to_one(x[~in_head]))
        return out

    def breakpoints(self):
        j = self.join_quantile
        return tuple([j] + [b for b in self.tail.breakpoints() if b > j])

    def to_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "a3": self.a3,
                "join_quantile": self.join_quantile, "tail": self.tail.to_dict()}


class PowerTail(QuantileFunction):
    """offset + scale*((q-join)/(1-join))**exponent above join_quantile.

    Used by the symmetric constructions.  With head=None the join must be 0.
    For exponent < 1 the slope is unbounded at the join, so the derivative
    continuity check is only applied when exponent >= 1.
    """

    kind = "power_tail"

    def __init__(self, offset, scale, exponent, join_quantile, head=None, check=True):
        if scale < 0 or exponent <= 0:
            raise ValueError("PowerTail requires scale >= 0 and exponent > 0")
        if not (0.0 <= join_quantile < 1.0):
            raise ValueError("join_quantile must lie in [0, 1)")
        if offset < -1e-12 or offset + scale > 1 + 1e-12:
            raise ValueError("PowerTail range must stay within [0, 1]")
        if head is None and join_quantile > 0:
            raise ValueError("a head qf is required when join_quantile > 0")
        self.offset = float(offset)
        self.scale = float(scale)
        self.exponent = float(exponent)
        self.join_quantile = float(join_quantile)
        self.head = head
        if head is not None and check:
            j = self.join_quantile
            hv = float(head(j))
            if abs(hv - self.offset) > VALUE_CONT_TOL:
                raise ValueError(f"value mismatch at join: head {hv}, tail {self.offset}")
            if self.exponent >= 1.0:
                td = 0.0 if self.exponent > 1 else self.scale / (1.0 - j)
                hd = float(head.derivative(j))
                if abs(hd - td) > max(DERIV_CONT_TOL, DERIV_CONT_TOL * abs(td)):
                    raise ValueError(f"derivative mismatch at join: head {hd}, tail {td}")

    def _t(self, q):
        return np.clip((q - self.join_quantile) / (1.0 - self.join_quantile), 0.0, 1.0)

    def _eval(self, q):
        tail_mask = q >= self.join_quantile
        out = np.empty_like(q)
        out[tail_mask] = self.offset + self.scale * self._t(q[tail_mask]) ** self.exponent
        if np.any(~tail_mask):
            out[~tail_mask] = np.atleast_1d(self.head(q[~tail_mask]))
        return out

    def _deriv(self, q):
        tail_mask = q >= self.join_quantile
        out = np.empty_like(q)
        t = self._t(q[tail_mask])
        a = self.exponent
        with np.errstate(divide="ignore"):
            out[tail_mask] = self.scale * a * t ** (a - 1.0) / (1.0 - self.join_quantile)
        if np.any(~tail_mask):
            out[~tail_mask] = np.atleast_1d(self.head.derivative(q[~tail_mask]))
        return out

    def _cdf(self, v):
        out = np.empty_like(np.asarray(v, float))
        top = self.offset + self.scale
        above = v >= top
        out[above] = 1.0
        tail_mask = (~above) & (v >= self.offset)
        if np.any(tail_mask):
            if self.scale == 0:
                out[tail_mask] = 1.0
            else:
                t = ((v[tail_mask] - self.offset) / self.scale) ** (1.0 / self.exponent)
                out[tail_mask] = self.join_quantile + (1.0 - self.join_quantile) * t
        below = v < self.offset
        if np.any(below):
            out[below] = 0.0 if self.head is None else np.atleast_1d(self.head.cdf(v[below]))
        return out

    def _integral_to_one(self, x):
        j, a = self.join_quantile, self.exponent
        out = np.empty_like(x)
        tail_mask = x >= j
        t = self._t(x[tail_mask])
        out[tail_mask] = (self.offset * (1.0 - x[tail_mask])
                          + self.scale * (1.0 - j) * (1.0 - t ** (a + 1.0)) / (a + 1.0))
        if np.any(~tail_mask):
            tail_full = self.offset * (1.0 - j) + self.scale * (1.0 - j) / (a + 1.0)
            out[~tail_mask] = (np.atleast_1d(self.head.integral_to_one(x[~tail_mask]))
                               - float(self.head.integral_to_one(j)) + tail_full)
        return out

    def breakpoints(self):
        j = self.join_quantile
        pts = [] if j == 0.0 else [j]
        if self.head is not None:
            pts = [b for b in self.head.breakpoints() if b < j] + pts
        return tuple(pts)

    def to_dict(self):
        return {"kind": self.kind, "offset": self.offset, "scale": self.scale,
                "exponent": self.exponent, "join_quantile": self.join_quantile,
                "head": None if self.head is None else self.head.to_dict()}


class IntegralAverage(QuantileFunction):
    """Devirtualization s(x) = (integral of base over [x,1]) / (1 - x).

    Satisfies base(x) = s(x) - (1-x) s'(x); s(1) = base(1).
    """

    kind = "integral_average"
    _EDGE = 1e-9

    def __init__(self, base):
        self.base = base
        self._b1 = float(base(1.0))

    def _eval(self, x):
        out = np.empty_like(x)
        edge = x > 1.0 - self._EDGE
        out[edge] = self._b1
        rest = ~edge
        if np.any(rest):
            xr = x[rest]
            out[rest] = np.atleast_1d(self.base.integral_to_one(xr)) / (1.0 - xr)
        return out

    def _deriv(self, x):
        # s'(x) = (s(x) - base(x)) / (1 - x); limit base'(1)/2 at x = 1.
        out = np.empty_like(x)
        edge = x > 1.0 - self._EDGE
        if np.any(edge):
            out[edge] = 0.5 * float(self.base.derivative(1.0))
        rest = ~edge
        if np.any(rest):
            xr = x[rest]
            s = self._eval(xr)
            out[rest] = (s - np.atleast_1d(self.base(xr))) / (1.0 - xr)
        return out

    def _integral_to_one(self, x):
        return super(IntegralAverage, self)._integral_to_one(x)

    def breakpoints(self):
        return self.base.breakpoints()

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict()}


class VirtualQf(QuantileFunction):
    """Virtual bidding qf psi(q) = base(q) - (1-q) * base'(q).

    May take negative values near q = 0; increasing exactly when the base is
    regular.
    """

    kind = "virtual"
    _FD = 1e-6

    def __init__(self, base):
        self.base = base

    def _eval(self, q):
        return np.atleast_1d(self.base(q)) - (1.0 - q) * np.atleast_1d(self.base.derivative(q))

    def _deriv(self, q):
        # Right-sided finite difference, matching the right-derivative
        # convention at kinks; psi can jump there, so a central difference
        # would blow up.  Left-sided at q = 1.
        h = self._FD
        lo = np.where(q + h <= 1.0, q, q - h)
        return (self._eval(lo + h) - self._eval(lo)) / h

    def _cdf(self, v):
        return _bisect_cdf(self._eval, v)

    def _integral_to_one(self, x):
        # Exact: the antiderivative of psi over [x,1] telescopes to (1-x)*base(x).
        return (1.0 - x) * np.atleast_1d(self.base(x))

    def increasing_on_grid(self, grid_size=10**4, tol=0.0):
        g = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid_size),
                                      np.asarray(self.breakpoints(), float)]))
        vals = self._eval(g)
        return bool(np.all(np.diff(vals) >= -tol))

    def breakpoints(self):
        return self.base.breakpoints()

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict()}


def virtualize(f):
    """The mapping g: psi(q) = f(q) - (1-q) f'(q)."""
    return VirtualQf(f)


def inverse_lipschitz_lower(f, grid_size=1024):
    """Best lower bound L >= 0 with f(q2) - f(q1) >= L (q2 - q1)."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    return max(0.0, f.min_slope(grid_size))


def increasing_rearrangement(samples):
    """Sort bid values on a uniform quantile grid into an increasing qf.

    `samples` is a sequence of (quantile, bid) pairs whose quantiles form a
    uniform grid over [0,1].  Returns the PiecewiseLinear qf through the
    sorted values; the value multiset is preserved exactly.
    """
    pts = sorted(samples)
    grid = np.array([p[0] for p in pts], dtype=float)
    vals = np.array([p[1] for p in pts], dtype=float)
    if len(grid) < 2:
        raise ValueError("need at least two samples")
    expected = np.linspace(0.0, 1.0, len(grid))
    if not np.allclose(grid, expected, atol=1e-9):
        raise ValueError("quantiles must form a uniform grid over [0, 1]")
    return PiecewiseLinear(expected, np.sort(vals))


_KINDS = {cls.kind: cls for cls in
          (Uniform, PiecewiseLinear, ExpHead, SinHead, PowerTail,
           IntegralAverage, VirtualQf)}


def from_dict(d):
    """Rebuild a quantile function from its JSON object form."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ValueError("quantile function JSON must be an object with a 'kind' tag")
    kind = d["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown quantile function kind: {kind!r}")
    if kind == "uniform":
        return Uniform(d["lo"], d["hi"])
    if kind == "piecewise_linear":
        return PiecewiseLinear(d["grid"], d["values"])
    if kind == "exp_head":
        tail = None if d.get("tail") is None else from_dict(d["tail"])
        return ExpHead(d["a1"], d["a2"], d["join_quantile"], tail)
    if kind == "sin_head":
        return SinHead(d["amplitude"], d["a3"], d["join_quantile"], from_dict(d["tail"]))
    if kind == "power_tail":
        head = None if d.get("head") is None else from_dict(d["head"])
        return PowerTail(d["offset"], d["scale"], d["exponent"], d["join_quantile"], head)
    if kind == "integral_average":
        return IntegralAverage(from_dict(d["base"]))
    return VirtualQf(from_dict(d["base"]))


def from_json(text):
    return from_dict(json.loads(text))
