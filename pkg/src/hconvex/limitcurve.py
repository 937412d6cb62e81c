"""Limiting s-curve ``c(lam) = lam^s X + (1 - lam)^s Y`` and its metrics.

``X`` and ``Y`` stand for ``f(x)`` and ``f(y)``.  For ``X = Y = 1`` the curve
peaks at ``lam = 1/2`` with height ``2^(1-s)``.  The arc-length integrand
``sqrt(1 + c'(lam)^2)`` has integrable ``lam^(s-1)`` singularities at both ends
when ``s < 1``; :func:`curve_length` removes them with the substitution
``lam = u^(1/s)`` on ``[0, 1/2]`` (mirrored on ``[1/2, 1]``) and integrates the
resulting bounded integrand with adaptive Gauss-Kronrod (7/15) quadrature.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CurveMetrics",
    "curve_value",
    "height_max",
    "curve_length",
    "curve_length_midpoint",
    "arc_integrand",
    "expanded_integrand",
    "inclination",
    "curve_metrics",
    "adaptive_gk15",
    "golden_section_max",
]


def _check_s(s: float):
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s!r}")


def curve_value(s: float, lam, X: float, Y: float):
    """``lam^s X + (1 - lam)^s Y`` with ``0^s = 0``; vectorised over ``lam``."""
    _check_s(s)
    lam = np.asarray(lam, dtype=float)
    if ((lam < 0) | (lam > 1)).any():
        raise ValueError("lambda must lie in [0, 1]")
    v = np.power(lam, s) * X + np.power(1.0 - lam, s) * Y
    return float(v) if v.ndim == 0 else v


def inclination(s: float, lam: float, X: float, Y: float) -> float:
    """Slope ``s lam^(s-1) X - s (1-lam)^(s-1) Y`` of the limiting curve.

    For ``s < 1`` the slope is unbounded at the ends: ``lam = 0`` returns
    ``+inf * sign(X)`` and ``lam = 1`` returns ``-inf * sign(Y)`` (finite if
    the corresponding value is zero).
    """
    _check_s(s)
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    if s == 1:
        return X - Y

    def term(base, value):
        if value == 0:
            return 0.0
        if base == 0:
            return math.copysign(math.inf, value)
        return s * base ** (s - 1) * value

    return term(lam, X) - term(1.0 - lam, Y)


# --------------------------------------------------------------------------
# Golden-section maximisation

_INVPHI = (math.sqrt(5) - 1) / 2


def golden_section_max(fn, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximise a unimodal ``fn`` on ``[a, b]``; returns ``(argmax, value)``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    return x, fn(x)


def height_max(s: float, X: float, Y: float, tol: float = 1e-12) -> tuple[float, float]:
    """Maximum of the limiting curve on ``[0, 1]`` as ``(value, argmax)``.

    The curve is concave for ``X, Y >= 0``, so golden-section search finds the
    interior maximum; the endpoints are compared explicitly as well.
    """
    _check_s(s)
    if X < 0 or Y < 0:
        raise ValueError("height_max needs X, Y >= 0")
    lam, val = golden_section_max(lambda u: curve_value(s, u, X, Y), 0.0, 1.0, tol)
    for end in (0.0, 1.0):
        v = curve_value(s, end, X, Y)
        if v > val:
            lam, val = end, v
    return val, lam


# --------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod abscissae
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(fn, a, b):
    mid, half = (a + b) / 2, (b - a) / 2
    v = fn(mid + half * _NODES)
    k = half * float(_KWEIGHTS @ v)
    g = half * float(_GWEIGHTS @ v)
    return k, abs(k - g)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    intervals: int
    converged: bool


def adaptive_gk15(fn, a: float, b: float, tol: float = 1e-10, max_intervals: int = 2000) -> QuadResult:
    """Integrate a vectorised ``fn`` over ``[a, b]`` to absolute ``tol``.

    Work queue: the interval with the largest error estimate is bisected
    until the summed estimate is below ``tol``.  The final sum runs over the
    intervals sorted by left endpoint, so it does not depend on queue order.
    """
    k, e = _gk15(fn, a, b)
    heap = [(-e, a, b, k)]
    total_err = e
    while total_err > tol and len(heap) < max_intervals:
        neg_e, lo, hi, _ = heapq.heappop(heap)
        m = (lo + hi) / 2
        k1, e1 = _gk15(fn, lo, m)
        k2, e2 = _gk15(fn, m, hi)
        total_err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, lo, m, k1))
        heapq.heappush(heap, (-e2, m, hi, k2))
    pieces = sorted(heap, key=lambda item: item[1])
    value = math.fsum(p[3] for p in pieces)
    err = math.fsum(-p[0] for p in pieces)
    return QuadResult(value, err, len(pieces), err <= tol)


# --------------------------------------------------------------------------
# Arc length

def arc_integrand(s: float, lam, X: float = 1.0, Y: float = 1.0):
    """``sqrt(1 + c'(lam)^2)`` on the open interval (no singularity handling)."""
    lam = np.asarray(lam, dtype=float)
    slope = s * np.power(lam, s - 1.0) * X - s * np.power(1.0 - lam, s - 1.0) * Y
    return np.sqrt(1.0 + slope * slope)


def expanded_integrand(s: float, lam):
    """The ``X = Y = 1`` integrand with the square multiplied out."""
    lam = np.asarray(lam, dtype=float)
    a, b = np.power(lam, s - 1.0), np.power(1.0 - lam, s - 1.0)
    return np.sqrt(1.0 + s * s * a * a + s * s * b * b - 2.0 * s * s * a * b)


def _left_integrand(s, X, Y):
    # lam = u^(1/s) on [0, 1/2]; w = dlam/du, and w * s lam^(s-1) == 1
    def g(u):
        lam = np.power(u, 1.0 / s)
        w = np.power(u, 1.0 / s - 1.0) / s
        slope_w = X - s * np.power(1.0 - lam, s - 1.0) * Y * w
        return np.sqrt(w * w + slope_w * slope_w)
    return g


def _right_integrand(s, X, Y):
    # lam = 1 - v^(1/s) on [1/2, 1]
    def g(v):
        lam = 1.0 - np.power(v, 1.0 / s)
        w = np.power(v, 1.0 / s - 1.0) / s
        slope_w = s * np.power(lam, s - 1.0) * X * w - Y
        return np.sqrt(w * w + slope_w * slope_w)
    return g


@dataclass(frozen=True)
class LengthResult:
    length: float
    error_estimate: float
    converged: bool

    def to_dict(self) -> dict:
        return {"length": self.length, "error_estimate": self.error_estimate,
                "converged": self.converged}


def curve_length(s: float, X: float = 1.0, Y: float = 1.0, tol: float = 1e-10) -> LengthResult:
    """Arc length of the limiting curve over ``lam`` in ``[0, 1]``.

    Uses the general integrand ``sqrt(1 + (s lam^(s-1) X - s (1-lam)^(s-1) Y)^2)``;
    with ``X = Y = 1`` this is the expanded form
    ``sqrt(1 + s^2 lam^(2s-2) + s^2 (1-lam)^(2s-2) - 2 s^2 lam^(s-1) (1-lam)^(s-1))``.
    """
    _check_s(s)
    if tol <= 0:
        raise ValueError("tol must be positive")
    u_max = 0.5 ** s
    left = adaptive_gk15(_left_integrand(s, X, Y), 0.0, u_max, tol / 2)
    right = adaptive_gk15(_right_integrand(s, X, Y), 0.0, u_max, tol / 2)
    err = left.error_estimate + right.error_estimate
    return LengthResult(left.value + right.value, err, left.converged and right.converged)


def curve_length_midpoint(s: float, X: float = 1.0, Y: float = 1.0, panels: int = 10**6) -> float:
    """Reference arc length: composite midpoint rule with ``panels`` panels per half.

    Uses the same substitution as :func:`curve_length` but evaluates the raw
    ``sqrt(1 + c'(lam)^2) * dlam/du`` form, so it shares no integrand code.
    """
    _check_s(s)
    u_max = 0.5 ** s
    h = u_max / panels
    u = (np.arange(panels) + 0.5) * h
    jac = np.power(u, 1.0 / s - 1.0) / s
    near = np.power(u, 1.0 / s)  # distance of lam from the nearer endpoint
    total = 0.0
    # left half: lam = near; right half: 1 - lam = near (kept unrounded)
    for lam, comp in ((near, 1.0 - near), (1.0 - near, near)):
        slope = s * np.power(lam, s - 1.0) * X - s * np.power(comp, s - 1.0) * Y
        total += h * math.fsum(np.sqrt(1.0 + slope * slope) * jac)
    return total


# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveMetrics:
    s: float
    X: float
    Y: float
    height_max: float
    height_argmax: float
    length: float
    quadrature_error_estimate: float
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "X": self.X,
            "Y": self.Y,
            "height_max": self.height_max,
            "height_argmax": self.height_argmax,
            "length": self.length,
            "quadrature_error_estimate": self.quadrature_error_estimate,
            "converged": self.converged,
        }


def curve_metrics(s: float, X: float = 1.0, Y: float = 1.0, tol: float = 1e-10) -> CurveMetrics:
    value, arg = height_max(s, X, Y)
    ln = curve_length(s, X, Y, tol)
    return CurveMetrics(s, X, Y, value, arg, ln.length, ln.error_estimate, ln.converged)
