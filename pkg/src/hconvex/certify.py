"""Grid scans that certify or refute class membership.

A scan evaluates the class residual over every pair ``x < y`` of a uniform
grid on the domain and every ``t`` of a uniform combination grid.  "Certified"
always means *certified on the grid*: no sampled residual fell below the
violation threshold

    tau = tol_abs + tol_rel * (1 + max |f| seen during the scan)

which is evidence, never a proof.  Scans are deterministic; the worst sample
is chosen by ``(residual, x, y, t)`` so that ties resolve to the
lexicographically smallest point, and parallel runs merge to the same answer.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exprkit import EvalDomain, EvalDomainError, Expr, evaluate, evaluate_array, to_text
from .funclasses import (
    ClassSpec,
    ModulatingFn,
    ResidualSample,
    _in_first_sense_domain,
    class_residual,
    residual_arrays,
)

__all__ = [
    "ScanConfig",
    "Verdict",
    "CERTIFIED",
    "REFUTED",
    "INDETERMINATE",
    "scan_class",
    "scan_chord",
    "refine_witness",
    "theorem1_probe",
    "Theorem1Report",
    "second_derivative_inf",
    "SecondDerivativeInf",
    "conjecture_probe",
    "ConjectureReport",
]

CERTIFIED = "certified_on_grid"
REFUTED = "refuted"
INDETERMINATE = "indeterminate"

# target number of residual evaluations per work block
_BLOCK = 1 << 18


@dataclass(frozen=True)
class ScanConfig:
    n_xy: int = 101
    n_t: int = 101
    tol_abs: float = 1e-12
    tol_rel: float = 1e-9
    seed: int = 0
    refine: bool = False
    n_random: int = 0
    workers: int = 1
    refine_rounds: int = 30

    def __post_init__(self):
        if self.n_xy < 2:
            raise ValueError("n_xy must be >= 2")
        if self.n_t < 3:
            raise ValueError("n_t must be >= 3")
        if not (self.tol_abs > 0 and self.tol_rel > 0):
            raise ValueError("tolerances must be positive")
        if self.n_random < 0 or self.workers < 1:
            raise ValueError("n_random must be >= 0 and workers >= 1")

    def tau(self, max_abs_f: float) -> float:
        return self.tol_abs + self.tol_rel * (1.0 + max_abs_f)

    def to_dict(self) -> dict:
        return {
            "n_xy": self.n_xy,
            "n_t": self.n_t,
            "tol_abs": self.tol_abs,
            "tol_rel": self.tol_rel,
            "seed": self.seed,
            "refine": self.refine,
            "n_random": self.n_random,
            "refine_rounds": self.refine_rounds,
        }


@dataclass(frozen=True)
class Verdict:
    status: str
    worst_residual: float
    witness: Optional[ResidualSample]
    evaluations: int
    out_of_domain_count: int
    tau: float
    max_abs_f: float
    class_name: str = ""
    hypothesis_warnings: tuple[str, ...] = ()
    failure: Optional[dict] = None
    out_of_domain_worst: Optional[float] = None

    @property
    def refuted(self) -> bool:
        return self.status == REFUTED

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "class": self.class_name,
            "worst_residual": self.worst_residual,
            "tau": self.tau,
            "max_abs_f": self.max_abs_f,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "evaluations": self.evaluations,
            "out_of_domain_count": self.out_of_domain_count,
            "out_of_domain_worst": self.out_of_domain_worst,
            "hypothesis_warnings": list(self.hypothesis_warnings),
            "failure": self.failure,
        }


# --------------------------------------------------------------------------
# Scan machinery

@dataclass
class _Partial:
    """Reduction state of one work block."""

    best: Optional[tuple] = None  # (residual, x, y, t, point, lhs, rhs, in_domain)
    max_abs_f: float = 0.0
    evaluations: int = 0
    ood_count: int = 0
    ood_worst: float = math.inf
    failure: Optional[tuple] = None  # (x, y, t, point)

    def merge(self, other: "_Partial") -> "_Partial":
        best = self.best
        if other.best is not None and (best is None or other.best[:4] < best[:4]):
            best = other.best
        failure = self.failure
        if other.failure is not None and (failure is None or other.failure < failure):
            failure = other.failure
        return _Partial(
            best,
            max(self.max_abs_f, other.max_abs_f),
            self.evaluations + other.evaluations,
            self.ood_count + other.ood_count,
            min(self.ood_worst, other.ood_worst),
            failure,
        )


def _t_grid(c: ClassSpec, n_t: int) -> np.ndarray:
    if c.is_midpoint:
        return np.array([0.5])
    if c.open_t:
        return EvalDomain(0.0, 1.0, True, True).grid(n_t)
    return np.linspace(0.0, 1.0, n_t)


def _evaluate_block(f, c, d, X, Y, FX, FY, T) -> _Partial:
    out = residual_arrays(c, FX, FY, X, Y, T, lambda p: evaluate_array(f, p))
    shape = out["residual"].shape
    X, Y, T = (np.broadcast_to(a, shape) for a in (X, Y, T))
    point, res = out["point"], out["residual"]
    ok_f = out["ok_f"]
    ok_h = np.broadcast_to(out["ok_h"], shape)
    part = _Partial(evaluations=int(res.size))
    if c.first_sense:
        inside = _in_first_sense_domain(point, X, Y, d)
    else:
        inside = np.ones(shape, bool)
    bad = inside & ~(ok_f & ok_h)
    if bad.any():
        k = np.unravel_index(int(np.argmax(bad)), shape)
        part.failure = (float(X[k]), float(Y[k]), float(T[k]), float(point[k]))
    outside = ~inside
    part.ood_count = int(outside.sum())
    ood_valid = outside & ok_f & ok_h
    if ood_valid.any():
        part.ood_worst = float(res[ood_valid].min())
    valid = inside & ok_f & ok_h
    if valid.any():
        part.max_abs_f = float(np.abs(out["lhs"][valid]).max())
        masked = np.where(valid, res, np.inf)
        k = _lexmin(masked, X, Y, T)
        part.best = (
            float(res[k]),
            float(X[k]),
            float(Y[k]),
            float(T[k]),
            float(point[k]),
            float(out["lhs"][k]),
            float(out["rhs"][k]),
            bool(inside[k]),
        )
    return part


def _lexmin(values, X, Y, T):
    """Index of the minimum of ``values``; ties go to the smallest ``(x, y, t)``."""
    flat = values.ravel()
    ties = np.flatnonzero(flat == flat.min())
    if ties.size > 1:
        xs, ys, ts = (np.asarray(a).ravel()[ties] for a in (X, Y, T))
        ties = ties[np.lexsort((ts, ys, xs))]
    return np.unravel_index(int(ties[0]), values.shape)


def _hypothesis_warnings(c: ClassSpec, d: EvalDomain, fmin: float) -> list[str]:
    warns = []
    needs_nonneg = c.kind in ("HConvex", "HConcave", "HMidconvex", "HMidconcave", "SConvexSecond")
    if needs_nonneg and fmin < 0:
        warns.append(f"f takes negative values on the grid (min {fmin!r}); the class presumes f >= 0")
    if c.h is not None:
        if not d.positive:
            warns.append(f"domain {d} is not inside (0, inf)")
        if c.h.caution:
            warns.append(f"h={c.h.name} is outside the geometric range of the power family")
    return warns


def _run_scan(f: Expr, c: ClassSpec, d: EvalDomain, cfg: ScanConfig, make_blocks, label: str):
    grid = d.grid(cfg.n_xy)
    fg, ok = evaluate_array(f, grid)
    if not ok.all():
        t_bad = float(grid[int(np.argmin(ok))])
        try:
            evaluate(f, t_bad)
            reason = "evaluation failed"
        except EvalDomainError as err:
            reason = str(err)
        return Verdict(
            INDETERMINATE, math.nan, None, int(ok.sum()), 0, math.nan, math.nan, label,
            failure={"stage": "grid", "t": t_bad, "reason": reason},
        )
    blocks = make_blocks(grid, fg)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda b: b(), blocks))
    else:
        parts = [b() for b in blocks]
    total = _Partial(max_abs_f=float(np.abs(fg).max()), evaluations=int(grid.size))
    for p in parts:
        total = total.merge(p)
    tau = cfg.tau(total.max_abs_f)
    warns = _hypothesis_warnings(c, d, float(fg.min()))
    ood_worst = None if math.isinf(total.ood_worst) else total.ood_worst
    common = dict(
        evaluations=total.evaluations,
        out_of_domain_count=total.ood_count,
        tau=tau,
        max_abs_f=total.max_abs_f,
        class_name=label,
        hypothesis_warnings=tuple(warns),
        out_of_domain_worst=ood_worst,
    )
    if total.failure is not None:
        x, y, t, p = total.failure
        return Verdict(
            INDETERMINATE, math.nan, None,
            failure={"stage": "combination", "x": x, "y": y, "t": t, "point": p,
                     "reason": "f or h not evaluable at an in-domain sample"},
            **common,
        )
    if total.best is None:
        return Verdict(INDETERMINATE, math.nan, None,
                       failure={"stage": "scan", "reason": "no evaluable samples"}, **common)
    r, x, y, t, point, lhs, rhs, inside = total.best
    flags = () if inside else ("combination_point_outside_interval",)
    witness = ResidualSample(x, y, t, lhs, rhs, r, point, inside, flags)
    status = REFUTED if r < -tau else CERTIFIED
    return Verdict(status, r, witness, **common)


def _pair_blocks(f, c, d, cfg, grid, fg, ts):
    n = grid.size
    I, J = np.triu_indices(n, 1)
    per = max(1, _BLOCK // max(1, ts.size))
    blocks = []
    T = ts[None, :]
    for start in range(0, I.size, per):
        i, j = I[start:start + per], J[start:start + per]
        X, Y = grid[i][:, None], grid[j][:, None]
        FX, FY = fg[i][:, None], fg[j][:, None]
        blocks.append(lambda X=X, Y=Y, FX=FX, FY=FY: _evaluate_block(f, c, d, X, Y, FX, FY, T))
    if cfg.n_random:
        rng = np.random.default_rng(cfg.seed)
        lo, hi = float(grid[0]), float(grid[-1])
        a = rng.uniform(lo, hi, cfg.n_random)
        b = rng.uniform(lo, hi, cfg.n_random)
        X, Y = np.minimum(a, b)[:, None], np.maximum(a, b)[:, None]
        if c.is_midpoint:
            Tr = np.full((cfg.n_random, 1), 0.5)
        else:
            tlo, thi = (ts[0], ts[-1])
            Tr = rng.uniform(tlo, thi, (cfg.n_random, 1))
        FX, okx = evaluate_array(f, X)
        FY, oky = evaluate_array(f, Y)
        keep = (okx & oky).ravel()
        if keep.any():
            blocks.append(lambda: _evaluate_block(
                f, c, d, X[keep], Y[keep], FX[keep], FY[keep], Tr[keep]))
    return blocks


def scan_class(f: Expr, c: ClassSpec, d: EvalDomain, cfg: ScanConfig = ScanConfig()) -> Verdict:
    """Scan the residual of class ``c`` over the pair grid of ``d``.

    >>> from hconvex.exprkit import parse
    >>> scan_class(parse("t^2"), ClassSpec.convex(), EvalDomain(0, 1), ScanConfig(21, 21)).status
    'certified_on_grid'
    """
    ts = _t_grid(c, cfg.n_t)
    if c.h is not None and not c.is_midpoint:
        ha, oka = c.h.evaluate_array(ts)
        hb, okb = c.h.evaluate_array(1.0 - ts)
        ok = oka & okb
        interior = (ts > 0) & (ts < 1)
        if (~ok & interior).any():
            t_bad = float(ts[~ok & interior][0])
            return Verdict(
                INDETERMINATE, math.nan, None, 0, 0, math.nan, math.nan, c.describe(),
                failure={"stage": "h", "t": t_bad, "reason": f"h={c.h.name} not evaluable"},
            )
        ts = ts[ok]
    return _run_scan(
        f, c, d, cfg, lambda grid, fg: _pair_blocks(f, c, d, cfg, grid, fg, ts), c.describe()
    )


def scan_chord(f: Expr, h: ModulatingFn, d: EvalDomain, cfg: ScanConfig = ScanConfig()) -> Verdict:
    """Geometric form of h-convexity: ``f(p) <= L(p; h)`` for ``x <= p <= y``.

    The witness stores ``u = (p - x)/(y - x)`` in ``t`` and ``p`` in
    ``combination_point``.  Rejects the excluded power exponents.
    """
    h.require_geometric()
    us = np.linspace(0.0, 1.0, cfg.n_t)
    hu, ok = h.evaluate_array(us)
    us, hu = us[ok], hu[ok]
    label = f"HChord(h={h.name})"

    def block(X, Y, FX, FY):
        P = X + us[None, :] * (Y - X)
        fp, okp = evaluate_array(f, P)
        L = (FY - FX) * hu[None, :] + FX
        res = L - fp
        part = _Partial(evaluations=int(res.size))
        if not okp.all():
            k = np.unravel_index(int(np.argmin(okp)), res.shape)
            part.failure = (float(X[k[0], 0]), float(Y[k[0], 0]), float(us[k[1]]), float(P[k]))
            return part
        part.max_abs_f = float(np.abs(fp).max())
        k = np.unravel_index(int(np.argmin(res)), res.shape)
        part.best = (float(res[k]), float(X[k[0], 0]), float(Y[k[0], 0]), float(us[k[1]]),
                     float(P[k]), float(fp[k]), float(L[k]), True)
        return part

    def make_blocks(grid, fg):
        I, J = np.triu_indices(grid.size, 1)
        per = max(1, _BLOCK // max(1, us.size))
        out = []
        for s in range(0, I.size, per):
            i, j = I[s:s + per], J[s:s + per]
            out.append(lambda i=i, j=j: block(grid[i][:, None], grid[j][:, None],
                                              fg[i][:, None], fg[j][:, None]))
        return out

    return _run_scan(f, ClassSpec.hconvex(h), d, cfg, make_blocks, label)


# --------------------------------------------------------------------------
# Witness refinement

def refine_witness(
    f: Expr,
    c: ClassSpec,
    w: ResidualSample,
    rounds: int = 30,
    domain: Optional[EvalDomain] = None,
    step: Optional[float] = None,
) -> ResidualSample:
    """Coordinate descent on ``(x, y, t)`` that never makes the residual worse.

    Each round tries ``coord +/- step`` for every coordinate and keeps the best
    strict improvement; when a full round moves nothing, the step is halved.
    Moves leaving ``domain`` (or ``[0, 1]`` for ``t``) are rejected.
    """
    if not w.residual < 0:
        raise ValueError("refine_witness needs a violating sample (residual < 0)")

    def trial(x, y, t):
        try:
            return class_residual(f, c, x, y, t, domain)
        except (EvalDomainError, ValueError):
            return None

    current = trial(w.x, w.y, w.t)
    if current is None:
        return replace(w, flags=w.flags + ("refine_failed",))
    if current.residual > w.residual:
        current = w
    if step is None:
        span = (domain.hi - domain.lo) if domain is not None else max(abs(w.y - w.x), 1e-3)
        step = span / 8.0
    steps = {"x": step, "y": step, "t": 0.125}
    coords = ("x", "y") if c.is_midpoint else ("x", "y", "t")
    t_lo, t_hi = (1e-12, 1 - 1e-12) if c.open_t else (0.0, 1.0)

    def admissible(x, y, t):
        if not t_lo <= t <= t_hi:
            return False
        if domain is not None and not (domain.contains(x) and domain.contains(y)):
            return False
        return True

    for _ in range(rounds):
        moved = False
        for name in coords:
            best = current
            for sign in (-1.0, 1.0):
                cand = {"x": current.x, "y": current.y, "t": current.t}
                cand[name] += sign * steps[name]
                if not admissible(cand["x"], cand["y"], cand["t"]):
                    continue
                s = trial(cand["x"], cand["y"], cand["t"])
                if s is None or (w.in_domain and not s.in_domain):
                    continue
                if s.residual < best.residual:
                    best = s
            if best is not current:
                current = best
                moved = True
        if not moved:
            steps = {k: v / 2.0 for k, v in steps.items()}
    return replace(current, flags=tuple(dict.fromkeys(current.flags + ("refined",))))


# --------------------------------------------------------------------------
# Midpoint versus full scan

@dataclass(frozen=True)
class Theorem1Report:
    mid_verdict: Verdict
    full_verdict: Verdict
    agree: bool
    hypothesis_flags: dict
    concave: bool = False

    def to_dict(self) -> dict:
        return {
            "mode": "concave" if self.concave else "convex",
            "mid_verdict": self.mid_verdict.to_dict(),
            "full_verdict": self.full_verdict.to_dict(),
            "agree": self.agree,
            "hypothesis_flags": self.hypothesis_flags,
        }


def theorem1_probe(
    f: Expr, h: ModulatingFn, d: EvalDomain, cfg: ScanConfig = ScanConfig(), concave: bool = False
) -> Theorem1Report:
    """Compare the midpoint and full h-convexity verdicts of ``f``.

    With ``concave=True`` both inequalities are reversed.  The hypotheses of
    the midpoint/full equivalence (``h(a) >= a`` or ``<= a`` on (0,1), ``f``
    non-negative and continuous) are reported as sampled flags.
    """
    if concave:
        mid_c, full_c = ClassSpec.hmidconcave(h), ClassSpec.hconcave(h)
    else:
        mid_c, full_c = ClassSpec.hmidconvex(h), ClassSpec.hconvex(h)
    mid = scan_class(f, mid_c, d, cfg)
    full = scan_class(f, full_c, d, cfg)
    props = h.properties()
    h_flag = props.h_alpha_le_alpha if concave else props.h_alpha_ge_alpha
    fg, ok = evaluate_array(f, d.grid(cfg.n_xy))
    flags = {
        ("h_alpha_le_alpha" if concave else "h_alpha_ge_alpha"): h_flag.status,
        "f_evaluable_on_grid": bool(ok.all()),
        "f_nonneg_on_grid": bool(ok.all() and fg.min() >= 0),
    }
    return Theorem1Report(mid, full, mid.status == full.status, flags, concave)


# --------------------------------------------------------------------------
# Second derivative and the derivative-threshold conjecture

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SecondDerivativeInf:
    inf_value: float
    argmin: float
    noise_floor: float
    status: str = "ok"
    failure: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "inf_value": self.inf_value,
            "argmin": self.argmin,
            "noise_floor": self.noise_floor,
            "status": self.status,
            "failure": self.failure,
        }


def _second_diff(f, x, delta):
    fp, ok1 = evaluate_array(f, x + delta)
    f0, ok2 = evaluate_array(f, x)
    fm, ok3 = evaluate_array(f, x - delta)
    return (fp - 2.0 * f0 + fm) / (delta * delta), ok1 & ok2 & ok3, np.abs(f0)


def second_derivative_inf(
    f: Expr, d: EvalDomain, n: int = 101, fd_step: float = 1e-4, richardson: bool = False
) -> SecondDerivativeInf:
    """Minimum of the central second difference of ``f`` over ``n`` interior points.

    The step at ``x`` is ``fd_step * (1 + |x|)``.  ``noise_floor`` bounds the
    rounding error of the difference quotient and is used by callers as an
    extra tolerance.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    x = np.linspace(d.lo, d.hi, n + 2)[1:-1]
    delta = fd_step * (1.0 + np.abs(x))
    d2, ok, fabs = _second_diff(f, x, delta)
    if richardson:
        d2h, okh, _ = _second_diff(f, x, delta / 2.0)
        d2 = (4.0 * d2h - d2) / 3.0
        ok &= okh
        delta = delta / 2.0
    if not ok.all():
        t_bad = float(x[int(np.argmin(ok))])
        return SecondDerivativeInf(math.nan, t_bad, math.nan, "indeterminate",
                                   {"t": t_bad, "reason": "f not evaluable within fd_step"})
    k = int(np.argmin(d2))
    noise = float((16.0 * _EPS * (1.0 + fabs) / (delta * delta)).max())
    return SecondDerivativeInf(float(d2[k]), float(x[k]), noise)


@dataclass(frozen=True)
class ConjectureReport:
    threshold: float
    inf_f2: float
    argmin: float
    tolerance: float
    derivative_side: bool
    hconvex_side: Verdict
    consistent: bool
    h_alpha_ge_alpha: str

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "inf_f2": self.inf_f2,
            "argmin": self.argmin,
            "tolerance": self.tolerance,
            "derivative_side": self.derivative_side,
            "hconvex_side": self.hconvex_side.to_dict(),
            "consistent": self.consistent,
            "h_alpha_ge_alpha": self.h_alpha_ge_alpha,
        }


def conjecture_threshold(h: ModulatingFn) -> float:
    """``1 - 2 h(1/2)``; for ``h = t^s`` this is ``1 - 2^(1-s)``."""
    return 1.0 - 2.0 * h(0.5)


def conjecture_probe(
    f: Expr,
    h: ModulatingFn,
    d: EvalDomain,
    cfg: ScanConfig = ScanConfig(),
    fd_step: float = 1e-4,
) -> ConjectureReport:
    """Report both sides of ``f'' >= 1 - 2 h(1/2)  <=>  f is h-convex`` on ``d``.

    Nothing is asserted about the claim itself; ``consistent`` only says
    whether the two sampled sides agree.
    """
    threshold = conjecture_threshold(h)
    sd = second_derivative_inf(f, d, cfg.n_xy, fd_step)
    verdict = scan_class(f, ClassSpec.hconvex(h), d, cfg)
    h_flag = h.properties().h_alpha_ge_alpha.status
    if sd.status != "ok":
        return ConjectureReport(threshold, math.nan, sd.argmin, math.nan, False, verdict, False, h_flag)
    fg, _ = evaluate_array(f, d.grid(cfg.n_xy))
    tol = cfg.tau(float(np.nanmax(np.abs(fg)))) + sd.noise_floor
    derivative_side = bool(sd.inf_value >= threshold - tol)
    consistent = verdict.status != INDETERMINATE and derivative_side == verdict.certified
    return ConjectureReport(threshold, sd.inf_value, sd.argmin, tol, derivative_side, verdict,
                            consistent, h_flag)
