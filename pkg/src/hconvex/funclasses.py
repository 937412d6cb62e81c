"""Convexity classes as residual functions, h-chords and modulating functions.

Every class is expressed through the same inequality shape::

    f(a*x + b*y) <= cx * f(x) + cy * f(y)

with class-specific point weights ``(a, b)`` and bound weights ``(cx, cy)``
depending on the combination parameter ``t``.  The *residual* of a sample is
``bound - f(point)`` (reversed for the concave variants), so a sample satisfies
the inequality iff its residual is non-negative.

The array kernel :func:`residual_arrays` is shared by the scalar entry points
here and by the grid scans in :mod:`hconvex.certify`, so a witness found by a
scan re-evaluates to bit-identical numbers through :func:`class_residual`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .exprkit import EvalDomain, EvalDomainError, Expr, evaluate, evaluate_array, parse, to_text

__all__ = [
    "ModulatingFn",
    "ClassSpec",
    "ResidualSample",
    "FlagResult",
    "HProperties",
    "CautionError",
    "CautionWarning",
    "class_residual",
    "first_sense_raw",
    "midconvex_residual",
    "local_midconvex_residual",
    "h_chord",
    "straight_chord",
    "bent_chord_test",
    "BentChordResult",
    "min_domain_distance",
    "h_property_check",
    "residual_arrays",
]

# default tolerance used where no scan configuration is around
DEFAULT_TOL = 1e-9


class CautionError(ValueError):
    """h(t) = t^k with k <= -1 or k = 0 has no geometric chord interpretation."""


class CautionWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# Modulating functions

@dataclass(frozen=True)
class ModulatingFn:
    """The modulating function ``h`` of an h-convexity inequality.

    ``kind`` is one of ``identity``, ``power`` (``h(t) = t**s``),
    ``reciprocal`` (``1/t``), ``one`` (constant 1) or ``expr`` (user text).
    """

    kind: str
    s: Optional[float] = None
    expr: Optional[Expr] = None

    @classmethod
    def identity(cls) -> "ModulatingFn":
        return cls("identity")

    @classmethod
    def power(cls, s: float) -> "ModulatingFn":
        return cls("power", s=float(s))

    @classmethod
    def reciprocal(cls) -> "ModulatingFn":
        return cls("reciprocal")

    @classmethod
    def one(cls) -> "ModulatingFn":
        return cls("one")

    @classmethod
    def from_expr(cls, text_or_expr) -> "ModulatingFn":
        e = parse(text_or_expr) if isinstance(text_or_expr, str) else text_or_expr
        return cls("expr", expr=e)

    @classmethod
    def from_spec(cls, spec: str) -> "ModulatingFn":
        """Parse ``identity``, ``power:<s>``, ``reciprocal``, ``one`` or ``expr:<text>``."""
        spec = spec.strip()
        if spec in ("identity", "reciprocal", "one"):
            return getattr(cls, spec)()
        if spec.startswith("power:"):
            try:
                return cls.power(float(spec[len("power:"):]))
            except ValueError:
                raise ValueError(f"bad power exponent in h spec {spec!r}") from None
        if spec.startswith("expr:"):
            return cls.from_expr(spec[len("expr:"):])
        raise ValueError(
            f"unknown h spec {spec!r}; use identity, power:<s>, reciprocal, one or expr:<text>"
        )

    @property
    def name(self) -> str:
        if self.kind == "power":
            return f"power:{self.s!r}"
        if self.kind == "expr":
            return f"expr:{to_text(self.expr)}"
        return self.kind

    def __str__(self) -> str:
        return self.name

    @property
    def caution(self) -> bool:
        """True for the power exponents excluded from the geometric reading.

        ``reciprocal`` is ``t^-1`` and ``one`` is ``t^0``, so both are included.
        """
        if self.kind in ("reciprocal", "one"):
            return True
        return self.kind == "power" and (self.s <= -1 or self.s == 0)

    def require_geometric(self):
        if self.caution:
            k = {"reciprocal": -1.0, "one": 0.0}.get(self.kind, self.s)
            raise CautionError(
                f"h={self.name} (t^{k!r}): the chord interpretation only holds for "
                "exponents in (-1, 0) U (0, inf)"
            )

    def evaluate_array(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        if self.kind == "expr":
            return evaluate_array(self.expr, t)
        with np.errstate(all="ignore"):
            if self.kind == "identity":
                v = t.astype(float, copy=True)
            elif self.kind == "one":
                v = np.ones_like(t, dtype=float)
            elif self.kind == "reciprocal":
                v = 1.0 / t
            else:
                v = np.power(t, self.s)
        ok = np.isfinite(v)
        return np.where(ok, v, np.nan), ok

    def __call__(self, t: float) -> float:
        v, ok = self.evaluate_array(np.asarray([t], dtype=float))
        if not ok[0]:
            if self.kind == "expr":
                evaluate(self.expr, t)  # raises with the offending subexpression
            raise EvalDomainError(f"h={self.name}", float(t), "h undefined")
        return float(v[0])

    def properties(self, grid: int = 101) -> "HProperties":
        return _cached_properties(self, grid)


# --------------------------------------------------------------------------
# Class specification

CLASS_KINDS = (
    "Convex",
    "SConvexFirst",
    "SConvexFirstPinheiro",
    "SConvexSecond",
    "GodunovaLevin",
    "PFunction",
    "HConvex",
    "HConcave",
    "HMidconvex",
    "HMidconcave",
)

_S_KINDS = {"SConvexFirst", "SConvexFirstPinheiro", "SConvexSecond"}
_H_KINDS = {"HConvex", "HConcave", "HMidconvex", "HMidconcave"}
_MID_KINDS = {"HMidconvex", "HMidconcave"}
_CONCAVE_KINDS = {"HConcave", "HMidconcave"}
FIRST_SENSE_KINDS = frozenset({"SConvexFirst", "SConvexFirstPinheiro"})


@dataclass(frozen=True)
class ClassSpec:
    kind: str
    s: Optional[float] = None
    h: Optional[ModulatingFn] = None

    def __post_init__(self):
        if self.kind not in CLASS_KINDS:
            raise ValueError(f"unknown class kind {self.kind!r}")
        if self.kind in _S_KINDS:
            if self.s is None or not (0 < self.s <= 1):
                raise ValueError(f"{self.kind} needs s in (0, 1], got {self.s!r}")
        if self.kind in _H_KINDS and self.h is None:
            raise ValueError(f"{self.kind} needs a modulating function h")

    # convenience constructors
    @classmethod
    def convex(cls):
        return cls("Convex")

    @classmethod
    def sconvex_first(cls, s, pinheiro=False):
        return cls("SConvexFirstPinheiro" if pinheiro else "SConvexFirst", s=float(s))

    @classmethod
    def sconvex_second(cls, s):
        return cls("SConvexSecond", s=float(s))

    @classmethod
    def godunova_levin(cls):
        return cls("GodunovaLevin")

    @classmethod
    def pfunction(cls):
        return cls("PFunction")

    @classmethod
    def hconvex(cls, h):
        return cls("HConvex", h=h)

    @classmethod
    def hconcave(cls, h):
        return cls("HConcave", h=h)

    @classmethod
    def hmidconvex(cls, h):
        return cls("HMidconvex", h=h)

    @classmethod
    def hmidconcave(cls, h):
        return cls("HMidconcave", h=h)

    @property
    def is_midpoint(self) -> bool:
        return self.kind in _MID_KINDS

    @property
    def is_concave(self) -> bool:
        return self.kind in _CONCAVE_KINDS

    @property
    def first_sense(self) -> bool:
        return self.kind in FIRST_SENSE_KINDS

    @property
    def open_t(self) -> bool:
        """Whether t must avoid {0, 1}."""
        return self.kind == "GodunovaLevin"

    def describe(self) -> str:
        if self.kind in _S_KINDS:
            return f"{self.kind}(s={self.s!r})"
        if self.kind in _H_KINDS:
            return f"{self.kind}(h={self.h.name})"
        return self.kind


@dataclass(frozen=True)
class ResidualSample:
    x: float
    y: float
    t: float
    lhs: float
    rhs: float
    residual: float
    combination_point: float
    in_domain: bool = True
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "t": self.t,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "combination_point": self.combination_point,
            "in_domain": self.in_domain,
            "flags": list(self.flags),
        }


def _weights(c: ClassSpec, t):
    """Point weights (a, b) and bound-weight callables for class ``c`` at ``t``.

    Returns ``(a, b, cx, cy, ok)``; ``ok`` is False where h failed.
    """
    one = np.ones_like(t)
    ok = np.ones(np.shape(t), bool)
    k = c.kind
    if k in _MID_KINDS:
        hh, hok = c.h.evaluate_array(np.full(np.shape(t), 0.5))
        return 0.5 * one, 0.5 * one, hh, hh, hok
    if k in FIRST_SENSE_KINDS:
        ts = np.power(t, c.s)
        b = np.power(1.0 - ts, 1.0 / c.s)
        return t, b, ts, 1.0 - ts, ok
    a, b = t, 1.0 - t
    if k == "Convex":
        return a, b, a, b, ok
    if k == "SConvexSecond":
        return a, b, np.power(a, c.s), np.power(b, c.s), ok
    if k == "GodunovaLevin":
        with np.errstate(divide="ignore"):
            return a, b, 1.0 / a, 1.0 / b, ok & (a > 0) & (b > 0)
    if k == "PFunction":
        return a, b, one, one, ok
    ha, oka = c.h.evaluate_array(a)
    hb, okb = c.h.evaluate_array(b)
    return a, b, ha, hb, oka & okb


def residual_arrays(c: ClassSpec, fx, fy, x, y, t, f_point):
    """Vectorised residual kernel.

    ``fx``/``fy`` are ``f`` at ``x``/``y``; ``f_point`` is a callable mapping an
    array of combination points to ``(values, ok)``.  All array arguments
    broadcast.  Returns a dict of arrays: ``point``, ``lhs``, ``rhs``,
    ``residual``, ``ok_h`` (h evaluable) and ``ok_f`` (f evaluable at point).
    """
    a, b, cx, cy, ok_h = _weights(c, t)
    if c.is_midpoint:
        point = (x + y) * 0.5
        rhs = cx * (fx + fy)
    else:
        point = a * x + b * y
        rhs = cx * fx + cy * fy
    lhs, ok_f = f_point(point)
    residual = lhs - rhs if c.is_concave else rhs - lhs
    return {
        "point": point,
        "lhs": lhs,
        "rhs": rhs,
        "residual": residual,
        "ok_h": ok_h,
        "ok_f": ok_f,
    }


def _in_first_sense_domain(point, x, y, domain: Optional[EvalDomain]):
    inside = (point >= np.minimum(x, y)) & (point <= np.maximum(x, y))
    if domain is not None:
        inside |= domain.contains(point)
    return inside


def class_residual(
    f: Expr,
    c: ClassSpec,
    x: float,
    y: float,
    t: float,
    domain: Optional[EvalDomain] = None,
) -> ResidualSample:
    """Residual of class ``c``'s defining inequality at ``(x, y, t)``.

    The combination point is ``t*x + (1-t)*y`` except for the first-sense
    classes, where ``t`` plays the role of the first weight and the second is
    ``(1 - t^s)^(1/s)``; such points may leave ``[min(x,y), max(x,y)]`` (and
    ``domain`` if given), which is reported through ``in_domain``.

    Raises
    ------
    ValueError
        Godunova-Levin with ``t`` in {0, 1}, or ``t`` outside [0, 1].
    EvalDomainError
        ``f`` or ``h`` cannot be evaluated at the sample.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t!r} outside [0, 1]")
    if c.open_t and t in (0.0, 1.0):
        raise ValueError("Godunova-Levin inequality needs t strictly inside (0, 1)")
    if c.is_midpoint:
        t = 0.5
    flags: list[str] = []
    if c.h is not None and c.h.caution:
        warnings.warn(
            f"h={c.h.name} lies outside the geometric range of the power family",
            CautionWarning,
            stacklevel=2,
        )
        flags.append("caution_power_exponent")
    x_, y_, t_ = (np.asarray([v], dtype=float) for v in (x, y, t))
    fx = evaluate(f, x)
    fy = evaluate(f, y)
    out = residual_arrays(
        c, np.asarray([fx]), np.asarray([fy]), x_, y_, t_, lambda p: evaluate_array(f, p)
    )
    point = float(out["point"][0])
    if not out["ok_h"][0]:
        raise EvalDomainError(f"h={c.h.name if c.h else c.kind}", float(t), "bound weight undefined")
    if not out["ok_f"][0]:
        evaluate(f, point)  # raises with the offending subexpression
    in_domain = True
    if c.first_sense:
        in_domain = bool(_in_first_sense_domain(point, x, y, domain))
        if not in_domain:
            flags.append("combination_point_outside_interval")
    return ResidualSample(
        x=float(x),
        y=float(y),
        t=float(t),
        lhs=float(out["lhs"][0]),
        rhs=float(out["rhs"][0]),
        residual=float(out["residual"][0]),
        combination_point=point,
        in_domain=in_domain,
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class RawFirstSenseSample:
    sample: ResidualSample
    constraint_gap: float  # alpha^s + beta^s - 1


def first_sense_raw(f: Expr, s: float, x: float, y: float, alpha: float, beta: float):
    """First-sense inequality with explicit weights ``alpha``, ``beta``.

    The weights are not forced onto ``alpha^s + beta^s = 1``; the gap is
    returned alongside the sample so callers can see how far off they are.

    >>> r = first_sense_raw(parse("t"), 0.5, 0.25, 0.25, 0.5, 1.0)
    >>> r.sample.combination_point, r.sample.in_domain
    (0.375, False)
    """
    point = alpha * x + beta * y
    fx, fy = evaluate(f, x), evaluate(f, y)
    rhs = alpha**s * fx + beta**s * fy
    try:
        lhs = evaluate(f, point)
    except EvalDomainError:
        lhs = math.nan
    in_domain = min(x, y) <= point <= max(x, y)
    sample = ResidualSample(
        x=float(x),
        y=float(y),
        t=float(alpha),
        lhs=lhs,
        rhs=rhs,
        residual=rhs - lhs,
        combination_point=point,
        in_domain=in_domain,
        flags=() if in_domain else ("combination_point_outside_interval",),
    )
    return RawFirstSenseSample(sample, alpha**s + beta**s - 1.0)


def midconvex_residual(f: Expr, h: ModulatingFn, x: float, y: float) -> ResidualSample:
    """``h(1/2) * (f(x) + f(y)) - f((x + y)/2)``."""
    return class_residual(f, ClassSpec.hmidconvex(h), x, y, 0.5)


def local_midconvex_residual(f: Expr, h: ModulatingFn, x: float, p: float) -> float:
    if p <= 0:
        raise ValueError("p must be positive")
    return h(0.5) * (evaluate(f, x + p) + evaluate(f, x - p)) - evaluate(f, x)


# --------------------------------------------------------------------------
# Chords

def h_chord(f: Expr, h: ModulatingFn, x: float, y: float, t: float) -> float:
    """Value at ``t`` of the h-chord of ``f`` over ``[x, y]``:

    ``(f(y) - f(x)) * h((t - x)/(y - x)) + f(x)``.
    """
    h.require_geometric()
    if not x < y:
        raise ValueError("h_chord needs x < y")
    if not x <= t <= y:
        raise ValueError(f"t={t!r} outside [{x!r}, {y!r}]")
    u = (t - x) / (y - x)
    try:
        hu = h(u)
    except EvalDomainError as err:
        raise EvalDomainError(
            err.subexpr,
            u,
            f"{err.reason}; h cannot be evaluated at the chord endpoint, "
            "sample t on the half-open interval instead",
        ) from None
    fx, fy = evaluate(f, x), evaluate(f, y)
    return (fy - fx) * hu + fx


def straight_chord(f: Expr, x: float, y: float, t: float) -> float:
    """Ordinary chord ``(f(y)-f(x))/(y-x) * (t-x) + f(x)``."""
    fx, fy = evaluate(f, x), evaluate(f, y)
    return (fy - fx) / (y - x) * (t - x) + fx


@dataclass(frozen=True)
class BentChordResult:
    sup_inner: float
    sup_boundary: float
    argsup: float
    passed: bool

    @property
    def pass_(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "sup_inner": self.sup_inner,
            "sup_boundary": self.sup_boundary,
            "argsup": self.argsup,
            "pass": self.passed,
        }


def bent_chord_test(
    f: Expr,
    h: ModulatingFn,
    J: EvalDomain,
    outer: tuple[float, float],
    n: int,
    tol: float = DEFAULT_TOL,
) -> BentChordResult:
    """Compare sup of ``L - f`` inside ``J`` with its sup over the two ends of ``J``.

    ``L`` is the h-chord of ``f`` over ``outer``.  The inner supremum runs over
    the ``n - 2`` interior points of an ``n``-point grid on ``J``; the test
    passes when it is at least the boundary one, up to ``tol``.
    """
    h.require_geometric()
    x, y = outer
    if not x < y:
        raise ValueError("outer pair must satisfy x < y")
    if J.lo < x or J.hi > y:
        raise ValueError(f"J={J} not inside [{x!r}, {y!r}]")
    if n < 3:
        raise ValueError("bent_chord_test needs n >= 3")
    fx, fy = evaluate(f, x), evaluate(f, y)

    def gap(ts):
        u = (ts - x) / (y - x)
        hu, ok_h = h.evaluate_array(u)
        fv, ok_f = evaluate_array(f, ts)
        bad = ~(ok_h & ok_f)
        if bad.any():
            t_bad = float(ts[bad][0])
            evaluate(f, t_bad)
            h(float((t_bad - x) / (y - x)))
        return (fy - fx) * hu + fx - fv

    ts = np.linspace(J.lo, J.hi, n)[1:-1]
    inner = gap(ts)
    k = int(np.argmax(inner))
    boundary = gap(np.array([J.lo, J.hi]))
    sup_inner = float(inner[k])
    sup_boundary = float(boundary.max())
    return BentChordResult(sup_inner, sup_boundary, float(ts[k]), sup_inner >= sup_boundary - tol)


def min_domain_distance(sense: str, s: float) -> float:
    """Minimum domain-point distance attached to the geometric s-convex pictures.

    ``first``: ``2^-1 - 2^(-1/s)``; ``second``: ``2^-s - 2^-1``.
    """
    if sense == "first":
        return 0.5 - 2.0 ** (-1.0 / s)
    if sense == "second":
        return 2.0 ** (-s) - 0.5
    raise ValueError(f"sense must be 'first' or 'second', got {sense!r}")


# --------------------------------------------------------------------------
# Sampled properties of h

@dataclass(frozen=True)
class FlagResult:
    status: str  # "pass" | "fail" | "indeterminate"
    worst: Optional[float] = None  # most adverse margin (negative means violated)
    witness: tuple = ()
    grid: tuple = ()
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "worst": self.worst,
            "witness": list(self.witness),
            "grid": list(self.grid),
            "note": self.note,
        }


@dataclass(frozen=True)
class HProperties:
    nonneg: FlagResult
    nondecreasing: FlagResult
    h_alpha_ge_alpha: FlagResult
    h_alpha_le_alpha: FlagResult
    h_sum_le_one: FlagResult
    supermultiplicative: FlagResult
    control_function: FlagResult
    h_zero_plus: Optional[float]
    h_one: Optional[float]

    def to_dict(self, include_grids: bool = False) -> dict:
        out = {}
        for name in (
            "nonneg",
            "nondecreasing",
            "h_alpha_ge_alpha",
            "h_alpha_le_alpha",
            "h_sum_le_one",
            "supermultiplicative",
            "control_function",
        ):
            d = getattr(self, name).to_dict()
            if not include_grids:
                d.pop("grid")
            out[name] = d
        out["endpoints"] = {"h_zero_plus": self.h_zero_plus, "h_one": self.h_one}
        return out


_ENDPOINT_INSET = 1e-9
_PAIR_GRID = 33


def _margin_flag(margin: np.ndarray, ok: np.ndarray, where: np.ndarray, tol: float, grid, note=""):
    """Pass iff every margin >= -tol; witness is the first most negative one."""
    if not ok.all():
        k = int(np.argmin(ok))
        return FlagResult("indeterminate", None, tuple(np.atleast_1d(where[k]).tolist()), grid,
                          "h could not be evaluated")
    k = int(np.argmin(margin))
    worst = float(margin[k])
    status = "pass" if worst >= -tol else "fail"
    return FlagResult(status, worst, tuple(np.atleast_1d(where[k]).tolist()), grid, note)


def h_property_check(h: ModulatingFn, grid: int = 101, pair_grid: int = _PAIR_GRID,
                     tol: float = 1e-12) -> HProperties:
    """Sample structural properties of ``h`` on the open unit interval.

    Every flag is evidence from a finite grid, never a proof.  Margins are
    scaled by ``1 + |h|`` so that ``tol`` is relative.
    """
    if grid < 3:
        raise ValueError("grid must be >= 3")
    a = EvalDomain(0.0, 1.0, True, True).grid(grid)
    g = tuple(a.tolist())
    ha, ok = h.evaluate_array(a)
    scale = 1.0 + np.abs(np.where(ok, ha, 0.0))

    nonneg = _margin_flag(ha / scale, ok, a, tol, g)
    step = np.diff(ha)
    nondecreasing = _margin_flag(
        step / np.maximum(scale[1:], scale[:-1]), ok[1:] & ok[:-1],
        np.stack([a[:-1], a[1:]], axis=1), tol, g,
    )
    ge = _margin_flag((ha - a) / scale, ok, a, tol, g)
    le = _margin_flag((a - ha) / scale, ok, a, tol, g)
    hb, okb = h.evaluate_array(1.0 - a)
    sum_ok = ok & okb
    sum_margin = (1.0 - (ha + hb)) / (1.0 + np.abs(np.where(sum_ok, ha + hb, 0.0)))
    sum_le = _margin_flag(sum_margin, sum_ok, a, tol, g)

    p = EvalDomain(0.0, 1.0, True, True).grid(pair_grid)
    A, B = np.meshgrid(p, p, indexing="ij")
    hab, ok1 = h.evaluate_array(A * B)
    hA, ok2 = h.evaluate_array(A)
    hB, ok3 = h.evaluate_array(B)
    okp = ok1 & ok2 & ok3
    prod = hA * hB
    sm_margin = (hab - prod) / (1.0 + np.abs(np.where(okp, prod, 0.0)))
    supermult = _margin_flag(
        sm_margin.ravel(), okp.ravel(), np.stack([A.ravel(), B.ravel()], axis=1), tol,
        tuple(p.tolist()), note=f"{pair_grid}x{pair_grid} pair grid",
    )

    h0, ok0 = h.evaluate_array(np.array([_ENDPOINT_INSET]))
    h1, ok1_ = h.evaluate_array(np.array([1.0]))
    h_zero_plus = float(h0[0]) if ok0[0] else None
    h_one = float(h1[0]) if ok1_[0] else None

    if nondecreasing.status == "indeterminate" or h_zero_plus is None:
        control = FlagResult("indeterminate", None, (), g, "h not evaluable near 0")
    else:
        # inf over sampled h tends to 0 when h(0+) is negligible
        inf_ok = abs(h_zero_plus) <= 1e-3
        status = "pass" if nondecreasing.passed and inf_ok else "fail"
        note = []
        if not nondecreasing.passed:
            note.append("not nondecreasing")
        if not inf_ok:
            note.append(f"h(1e-9)={h_zero_plus!r} does not vanish")
        control = FlagResult(status, h_zero_plus, (_ENDPOINT_INSET,), g, "; ".join(note))

    return HProperties(nonneg, nondecreasing, ge, le, sum_le, supermult, control, h_zero_plus, h_one)


@lru_cache(maxsize=256)
def _cached_properties(h: ModulatingFn, grid: int) -> HProperties:
    return h_property_check(h, grid)
