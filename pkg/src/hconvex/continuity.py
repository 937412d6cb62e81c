"""Control functions, h-continuity ratios and Hölder-exponent fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .certify import ScanConfig
from .exprkit import EvalDomain, EvalDomainError, Expr, evaluate, evaluate_array
from .funclasses import FlagResult, ModulatingFn

__all__ = [
    "ControlFnReport",
    "control_function_check",
    "sample_pairs",
    "ContinuityRatio",
    "h_continuity_ratio",
    "HolderFit",
    "holder_fit",
    "lambda_eps",
    "Theorem2Report",
    "theorem2_probe",
]

# relative inset applied to open intervals before sampling
OPEN_INSET = 1e-9


@dataclass(frozen=True)
class ControlFnReport:
    nondecreasing: FlagResult
    inf_to_zero: FlagResult

    @property
    def is_control(self) -> bool:
        return self.nondecreasing.passed and self.inf_to_zero.passed

    def to_dict(self) -> dict:
        return {
            "nondecreasing": self.nondecreasing.to_dict(),
            "inf_to_zero": self.inf_to_zero.to_dict(),
            "is_control": self.is_control,
        }


def default_deltas(smallest: float = 1e-9, n: int = 64) -> np.ndarray:
    return np.geomspace(1.0, smallest, n)


def control_function_check(
    h: ModulatingFn, deltas: Optional[Sequence[float]] = None, tol: float = 1e-12
) -> ControlFnReport:
    """Sample the two control-function conditions along a shrinking sequence.

    ``deltas`` must be positive and sorted descending with the last entry at
    most ``1e-6``.  ``h`` passes the vanishing test when ``h(deltas[-1])`` is at
    most ``1e-3`` and the values never grow as ``delta`` shrinks.
    """
    d = default_deltas() if deltas is None else np.asarray(deltas, dtype=float)
    if d.size < 2 or (d <= 0).any() or (np.diff(d) >= 0).any() or d[-1] > 1e-6:
        raise ValueError("deltas must be positive, strictly descending and reach <= 1e-6")
    grid = tuple(d.tolist())
    hv, ok = h.evaluate_array(d)
    if not ok.all():
        bad = float(d[int(np.argmin(ok))])
        flag = FlagResult("indeterminate", None, (bad,), grid, "h not evaluable")
        return ControlFnReport(flag, flag)
    # consecutive pairs: larger delta first, so h must not increase along the sequence
    step = (hv[:-1] - hv[1:]) / (1.0 + np.maximum(np.abs(hv[:-1]), np.abs(hv[1:])))
    k = int(np.argmin(step))
    mono = FlagResult(
        "pass" if step[k] >= -tol else "fail", float(step[k]), (float(d[k + 1]), float(d[k])), grid
    )
    last = float(hv[-1])
    vanishing = mono.passed and last <= 1e-3
    note = "" if vanishing else f"h({d[-1]!r})={last!r}"
    inf0 = FlagResult("pass" if vanishing else "fail", last, (float(d[-1]),), grid, note)
    return ControlFnReport(mono, inf0)


# --------------------------------------------------------------------------
# Pair sampling

def _sampling_bounds(d: EvalDomain) -> tuple[float, float]:
    inset = OPEN_INSET * (d.hi - d.lo)
    lo = d.lo + inset if d.open_lo else d.lo
    hi = d.hi - inset if d.open_hi else d.hi
    return lo, hi


def grid_size_for(n_pairs: int) -> int:
    """Largest ``m`` whose ``m*(m-1)/2`` grid pairs fit in half of ``n_pairs``."""
    m = 2
    while (m + 1) * m // 2 <= max(1, n_pairs // 2):
        m += 1
    return m


def sample_pairs(d: EvalDomain, n_pairs: int, seed: int = 0):
    """Structured grid pairs plus seeded uniform random pairs.

    Roughly half of ``n_pairs`` comes from all pairs of an ``m``-point grid
    (boundary suprema), the rest are uniform random pairs (interior ones).
    Every pair is returned ordered, ``x < y``; degenerate random pairs are
    dropped.  Returns ``(x, y, m)``.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    lo, hi = _sampling_bounds(d)
    m = grid_size_for(n_pairs)
    g = np.linspace(lo, hi, m)
    i, j = np.triu_indices(m, 1)
    x, y = g[i], g[j]
    k = max(0, n_pairs - x.size)
    if k:
        rng = np.random.default_rng(seed)
        a, b = rng.uniform(lo, hi, k), rng.uniform(lo, hi, k)
        keep = a != b
        x = np.concatenate([x, np.minimum(a, b)[keep]])
        y = np.concatenate([y, np.maximum(a, b)[keep]])
    return x, y, m


# --------------------------------------------------------------------------
# h-continuity

@dataclass(frozen=True)
class ContinuityRatio:
    sup_ratio: float
    witness_pair: tuple[float, float]
    h_continuous_on_sample: bool
    n_pairs: int
    tau: float

    def to_dict(self) -> dict:
        return {
            "sup_ratio": self.sup_ratio,
            "witness_pair": list(self.witness_pair),
            "h_continuous_on_sample": self.h_continuous_on_sample,
            "n_pairs": self.n_pairs,
            "tau": self.tau,
        }


def _ratios(f: Expr, h: ModulatingFn, x: np.ndarray, y: np.ndarray):
    fx, okx = evaluate_array(f, x)
    fy, oky = evaluate_array(f, y)
    if not (okx.all() and oky.all()):
        bad = x[~okx][0] if not okx.all() else y[~oky][0]
        evaluate(f, float(bad))
    gap = np.abs(y - x)
    hg, okh = h.evaluate_array(gap)
    if not okh.all():
        h(float(gap[~okh][0]))
    df = np.abs(fy - fx)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = df / hg
    # h vanishing at a positive gap: infinite ratio unless f did not move either
    r = np.where(hg == 0, np.where(df == 0, 0.0, np.inf), r)
    return r, fx, fy


def _argmax_lex(r, x, y):
    top = np.flatnonzero(r == r.max())
    if top.size > 1:
        top = top[np.lexsort((y[top], x[top]))]
    return int(top[0])


def h_continuity_ratio(
    f: Expr,
    h: ModulatingFn,
    d: EvalDomain,
    n_pairs: int = 2000,
    seed: int = 0,
    tol_abs: float = 1e-12,
    tol_rel: float = 1e-9,
) -> ContinuityRatio:
    """Supremum over sampled pairs of ``|f(y) - f(x)| / h(|y - x|)``.

    ``f`` counts as h-continuous on the sample when the supremum is at most
    ``1 + tau``.  A zero of ``h`` at a positive gap gives an infinite ratio.
    """
    x, y, _ = sample_pairs(d, n_pairs, seed)
    r, fx, fy = _ratios(f, h, x, y)
    k = _argmax_lex(r, x, y)
    tau = tol_abs + tol_rel * (1.0 + float(max(np.abs(fx).max(), np.abs(fy).max())))
    sup = float(r[k])
    return ContinuityRatio(sup, (float(x[k]), float(y[k])), sup <= 1.0 + tau, int(x.size), tau)


# --------------------------------------------------------------------------
# Hölder fit

@dataclass(frozen=True)
class HolderFit:
    """``|f(y) - f(x)| <= H |y - x|^alpha`` fitted in log-log space.

    ``H == 0`` and ``alpha is None`` flag a constant function.
    """

    H: float
    alpha: Optional[float]
    rms_log_residual: float
    n_pairs: int
    scales: tuple = ()
    envelope: tuple = ()
    cloud: tuple = field(default=(), repr=False)  # (log|dx|, log|df|) per pair
    alpha_raw: Optional[float] = None
    note: str = ""

    @property
    def constant(self) -> bool:
        return self.alpha is None

    def to_dict(self) -> dict:
        return {
            "H": self.H,
            "alpha": self.alpha,
            "alpha_raw": self.alpha_raw,
            "rms_log_residual": self.rms_log_residual,
            "n_pairs": self.n_pairs,
            "note": self.note,
        }


_N_SCALES = 20
_DEGENERATE_DF = 1e-15


def holder_fit(f: Expr, d: EvalDomain, n_pairs: int = 2000, seed: int = 0) -> HolderFit:
    """Estimate Hölder order and constant of ``f`` on ``d``.

    The fit is a least-squares line ``log w = log H + alpha log delta`` through
    the empirical modulus of continuity ``w(delta) = max |f(y) - f(x)|`` over
    sampled pairs with ``|y - x| <= delta``, taken at ~20 log-spaced multiples
    of the structured grid step.  Fitting the upper envelope rather than the
    raw cloud matters: a raw regression of ``log|df|`` on ``log|dx|`` reports
    the *typical* local slope (1 for ``sqrt`` away from 0) instead of the
    worst-case order.  The raw slope is kept in ``alpha_raw`` for reference.
    """
    if n_pairs < 8:
        raise ValueError("holder_fit needs n_pairs >= 8")
    x, y, m = sample_pairs(d, n_pairs, seed)
    fx, okx = evaluate_array(f, x)
    fy, oky = evaluate_array(f, y)
    if not (okx.all() and oky.all()):
        bad = x[~okx][0] if not okx.all() else y[~oky][0]
        evaluate(f, float(bad))
    dx = y - x
    df = np.abs(fy - fx)
    live = df >= _DEGENERATE_DF
    if not live.any():
        return HolderFit(0.0, None, 0.0, int(x.size), note="constant function")
    lx, ly = np.log(dx[live]), np.log(df[live])
    cloud = tuple(zip(lx.tolist(), ly.tolist()))
    alpha_raw = float(np.polyfit(lx, ly, 1)[0]) if np.ptp(lx) > 0 else None

    lo, hi = _sampling_bounds(d)
    step = (hi - lo) / (m - 1)
    ks = np.unique(np.round(np.geomspace(1, m - 1, _N_SCALES)).astype(int))
    scales = ks * step
    order = np.argsort(dx, kind="stable")
    sdx = dx[order]
    env = np.maximum.accumulate(df[order])
    idx = np.searchsorted(sdx, scales * (1 + 1e-12), side="right") - 1
    w = env[idx]
    use = w >= _DEGENERATE_DF
    if use.sum() < 2:
        return HolderFit(0.0, None, 0.0, int(x.size), cloud=cloud, alpha_raw=alpha_raw,
                         note="too few resolved scales")
    ls, lw = np.log(scales[use]), np.log(w[use])
    alpha, logH = np.polyfit(ls, lw, 1)
    resid = lw - (alpha * ls + logH)
    note = ""
    if alpha > 1.0:
        note = f"fitted order {alpha!r} clipped to 1"
        alpha = 1.0
        logH = float(np.mean(lw - ls))
    return HolderFit(
        float(math.exp(logH)),
        float(alpha),
        float(np.sqrt(np.mean(resid**2))),
        int(x.size),
        tuple(scales[use].tolist()),
        tuple(w[use].tolist()),
        cloud,
        alpha_raw,
        note,
    )


# --------------------------------------------------------------------------
# Oscillation probe on an inner interval

def lambda_eps(gap: float, eps: float) -> float:
    """``|y - x| / (eps + |y - x|)``."""
    gap = abs(gap)
    return gap / (eps + gap)


@dataclass(frozen=True)
class Theorem2Report:
    m_eps: float
    M_eps: float
    lambda_samples: list
    sup_ratio: float
    witness_pair: tuple[float, float]
    hypothesis_flags: dict
    widened: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "m_eps": self.m_eps,
            "M_eps": self.M_eps,
            "widened_interval": list(self.widened),
            "sup_ratio": self.sup_ratio,
            "witness_pair": list(self.witness_pair),
            "lambda_samples": [list(s) for s in self.lambda_samples],
            "hypothesis_flags": self.hypothesis_flags,
        }


def theorem2_probe(
    f: Expr,
    h: ModulatingFn,
    inner: tuple[float, float],
    eps: float,
    cfg: ScanConfig = ScanConfig(),
    n_lambda: int = 32,
    domain: Optional[EvalDomain] = None,
) -> Theorem2Report:
    """Measure the quantities of the h-continuity argument on ``[a, b]``.

    ``m_eps``/``M_eps`` are the grid inf/sup of ``f`` over the open interval
    ``(a - eps, b + eps)``; the ratio ``|f(y) - f(x)| / h(|y - x|)`` is taken
    over sampled pairs of ``[a, b]``.  The coupling ``h(eps) = M_eps - m_eps``
    is not enforced, only reported as a discrepancy.
    """
    a, b = inner
    if not a < b:
        raise ValueError("inner interval needs a < b")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if domain is not None and not (domain.contains(a - eps) and domain.contains(b + eps)):
        raise ValueError(f"(a - eps, b + eps) leaves the domain {domain}")
    wide = EvalDomain(a - eps, b + eps, True, True)
    lo, hi = _sampling_bounds(wide)
    n_grid = max(cfg.n_xy * 10 + 1, 1001)
    g = np.linspace(lo, hi, n_grid)
    fg, ok = evaluate_array(f, g)
    if not ok.all():
        evaluate(f, float(g[int(np.argmin(ok))]))
    m_eps, M_eps = float(fg.min()), float(fg.max())

    n_pairs = max(cfg.n_xy * (cfg.n_xy - 1) // 2, 2 * n_lambda)
    x, y, _ = sample_pairs(EvalDomain(a, b), n_pairs, cfg.seed)
    r, _, _ = _ratios(f, h, x, y)
    k = _argmax_lex(r, x, y)
    pick = np.linspace(0, x.size - 1, min(n_lambda, x.size)).astype(int)
    lam = [(float(x[i]), float(y[i]), lambda_eps(float(y[i] - x[i]), eps)) for i in pick]

    props = h.properties()
    try:
        h_eps = h(eps)
        coupling = h_eps - (M_eps - m_eps)
    except EvalDomainError:
        h_eps = coupling = None
    flags = {
        "h_alpha_ge_alpha": props.h_alpha_ge_alpha.status,
        "h_sum_le_one": props.h_sum_le_one.status,
        "supermultiplicative": props.supermultiplicative.status,
        "control_function": props.control_function.status,
        "f_nonneg": bool(m_eps >= 0),
        "h_eps": h_eps,
        "coupling_discrepancy": coupling,
    }
    return Theorem2Report(m_eps, M_eps, lam, float(r[k]), (float(x[k]), float(y[k])), flags,
                          (lo, hi))
