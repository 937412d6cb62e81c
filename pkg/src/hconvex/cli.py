"""Command-line front end.

Exit codes: 0 analysis completed (a refutation is a completed analysis),
1 configuration error, 2 evaluation/indeterminate or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .certify import (
    INDETERMINATE,
    ScanConfig,
    conjecture_probe,
    refine_witness,
    scan_chord,
    scan_class,
    theorem1_probe,
)
from .continuity import control_function_check, h_continuity_ratio, holder_fit, theorem2_probe
from .exprkit import EvalDomain, EvalDomainError, ExprSyntaxError, check_domain, parse
from .funclasses import CautionError, ClassSpec, ModulatingFn, h_property_check
from .limitcurve import curve_metrics, curve_value, inclination
from .report import Report, to_csv, write_report

EXIT_OK, EXIT_CONFIG, EXIT_EVAL = 0, 1, 2

COMMANDS = (
    "check", "refute", "theorem1", "theorem2", "modulus",
    "holder", "curve", "conjecture", "props", "figure1",
)

DEFAULTS = {
    "f": None,
    "h": "identity",
    "class": "convex",
    "domain": "0:1",
    "grid": "101x101",
    "tol": 1e-12,
    "tol_rel": 1e-9,
    "seed": 0,
    "out": None,
    "format": None,
    "refine": False,
    "rounds": 30,
    "concave": False,
    "random": None,
    "workers": 1,
    "inner": None,
    "eps": 0.05,
    "pairs": 2000,
    "s": 0.5,
    "X": 1.0,
    "Y": 1.0,
    "n": 101,
    "tol_quad": 1e-10,
    "fd_step": 1e-4,
    "timing": False,
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hconvex", description="Generalized-convexity scans and probes.")
    p.add_argument("--version", action="version", version=f"hconvex {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("--config", default=S, help="JSON file whose keys mirror the flags")
        c.add_argument("--f", default=S, help="expression in t")
        c.add_argument("--h", default=S, help="identity | power:<s> | reciprocal | one | expr:<text>")
        c.add_argument("--class", dest="class", default=S)
        c.add_argument("--domain", default=S, help="lo:hi, '(' / ')' mark open ends")
        c.add_argument("--grid", default=S, help="NxM: N points per axis, M combination points")
        c.add_argument("--tol", type=float, default=S, help="absolute violation tolerance")
        c.add_argument("--tol-rel", dest="tol_rel", type=float, default=S)
        c.add_argument("--seed", type=int, default=S)
        c.add_argument("--out", default=S)
        c.add_argument("--format", choices=("json", "csv", "both"), default=S)
        c.add_argument("--refine", action="store_true", default=S)
        c.add_argument("--rounds", type=int, default=S)
        c.add_argument("--concave", action="store_true", default=S)
        c.add_argument("--random", type=int, default=S, help="extra seeded random samples")
        c.add_argument("--workers", type=int, default=S)
        c.add_argument("--inner", default=S, help="a:b for theorem2")
        c.add_argument("--eps", type=float, default=S)
        c.add_argument("--pairs", type=int, default=S)
        c.add_argument("--s", type=float, default=S)
        c.add_argument("--X", type=float, default=S)
        c.add_argument("--Y", type=float, default=S)
        c.add_argument("--n", type=int, default=S)
        c.add_argument("--tol-quad", dest="tol_quad", type=float, default=S)
        c.add_argument("--fd-step", dest="fd_step", type=float, default=S)
        c.add_argument("--timing", action="store_true", default=S,
                       help="write a <out>.timing.json sidecar")
    return p


# --------------------------------------------------------------------------
# Parsing helpers

def parse_domain(text: str) -> EvalDomain:
    s = text.strip()
    open_lo = s.startswith("(")
    open_hi = s.endswith(")")
    s = s.lstrip("([").rstrip(")]")
    try:
        lo, hi = (float(v) for v in s.split(":"))
        return EvalDomain(lo, hi, open_lo, open_hi)
    except ValueError as err:
        raise ConfigError(f"bad domain {text!r}: {err}") from None


def parse_grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"bad grid {text!r}; expected NxM") from None


def parse_pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"bad interval {text!r}; expected a:b") from None
    return a, b


def parse_class(text: str, h: ModulatingFn) -> tuple[ClassSpec, bool]:
    """Returns ``(ClassSpec, geometric)``."""
    name, _, arg = text.partition(":")
    try:
        if name == "convex":
            return ClassSpec.convex(), False
        if name in ("sconvex1", "sconvex1-pinheiro", "sconvex2"):
            s = float(arg)
            if name == "sconvex2":
                return ClassSpec.sconvex_second(s), False
            return ClassSpec.sconvex_first(s, pinheiro=name.endswith("pinheiro")), False
        simple = {
            "godunova-levin": ClassSpec.godunova_levin,
            "pfunction": ClassSpec.pfunction,
        }
        if name in simple:
            return simple[name](), False
        h_kinds = {
            "hconvex": ClassSpec.hconvex,
            "hconcave": ClassSpec.hconcave,
            "hmidconvex": ClassSpec.hmidconvex,
            "hmidconcave": ClassSpec.hmidconcave,
        }
        if name in h_kinds:
            return h_kinds[name](h), False
        if name == "hconvex-geometric":
            h.require_geometric()
            return ClassSpec.hconvex(h), True
    except CautionError as err:
        raise ConfigError(str(err)) from None
    except ValueError as err:
        raise ConfigError(f"bad class {text!r}: {err}") from None
    raise ConfigError(f"unknown class {text!r}")


def _merge(ns: argparse.Namespace) -> dict:
    given = vars(ns)
    cfg = dict(DEFAULTS)
    path = given.pop("config", None)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, ValueError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update(given)
    return cfg


class _Context:
    """Validated inputs shared by the subcommands."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.command = cfg["command"]
        try:
            self.f = parse(cfg["f"]) if cfg.get("f") else None
        except ExprSyntaxError as err:
            raise ConfigError(f"--f: {err}") from None
        try:
            self.h = ModulatingFn.from_spec(cfg["h"])
        except (ValueError, ExprSyntaxError) as err:
            raise ConfigError(f"--h: {err}") from None
        self.domain = parse_domain(cfg["domain"])
        n_xy, n_t = parse_grid(cfg["grid"])
        random = cfg["random"]
        if random is None:
            random = 10000 if self.command == "refute" else 0
        try:
            self.scan = ScanConfig(
                n_xy=n_xy, n_t=n_t, tol_abs=cfg["tol"], tol_rel=cfg["tol_rel"],
                seed=cfg["seed"], refine=bool(cfg["refine"]) or self.command == "refute",
                n_random=random, workers=cfg["workers"], refine_rounds=cfg["rounds"],
            )
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def require_f(self):
        if self.f is None:
            raise ConfigError(f"{self.command} needs --f")
        return self.f

    def echo(self) -> dict:
        keys = ECHO_KEYS[self.command]
        out = {k: self.cfg[k] for k in keys}
        if "domain" in keys:
            d = self.domain
            out["domain_parsed"] = {"lo": d.lo, "hi": d.hi, "open_lo": d.open_lo, "open_hi": d.open_hi}
        if "grid" in keys:
            out["scan"] = self.scan.to_dict()
        return out


_SCAN_KEYS = ("f", "h", "domain", "grid", "tol", "tol_rel", "seed", "refine", "rounds", "random")
ECHO_KEYS = {
    "check": ("class",) + _SCAN_KEYS,
    "refute": ("class",) + _SCAN_KEYS,
    "theorem1": ("concave",) + _SCAN_KEYS,
    "theorem2": ("inner", "eps") + _SCAN_KEYS,
    "modulus": ("f", "h", "domain", "pairs", "seed", "tol", "tol_rel"),
    "holder": ("f", "domain", "pairs", "seed"),
    "curve": ("s", "X", "Y", "n", "tol_quad"),
    "conjecture": ("fd_step",) + _SCAN_KEYS,
    "props": ("h", "n"),
    "figure1": ("n",),
}


# --------------------------------------------------------------------------
# Subcommands.  Each returns (result, warnings, csv_header, csv_rows, exit_code).

_VERDICT_HEADER = ("class", "status", "worst_residual", "tau", "x", "y", "t",
                   "combination_point", "lhs", "rhs", "evaluations", "out_of_domain_count")


def _verdict_row(v):
    w = v.witness
    wv = (w.x, w.y, w.t, w.combination_point, w.lhs, w.rhs) if w else (None,) * 6
    return (v.class_name, v.status, v.worst_residual, v.tau, *wv, v.evaluations,
            v.out_of_domain_count)


def _precheck(ctx: _Context):
    bad = check_domain(ctx.f, ctx.domain, ctx.scan.n_xy)
    return [f"f not evaluable at t={b.t!r}: {b.reason} in {b.subexpr!r}" for b in bad[:5]]


def cmd_check(ctx: _Context):
    f = ctx.require_f()
    c, geometric = parse_class(ctx.cfg["class"], ctx.h)
    verdict = scan_class(f, c, ctx.domain, ctx.scan)
    result = {"verdict": verdict.to_dict()}
    warns = list(verdict.hypothesis_warnings) + _precheck(ctx)
    rows = [_verdict_row(verdict)]
    if geometric:
        chord = scan_chord(f, ctx.h, ctx.domain, ctx.scan)
        result["chord_verdict"] = chord.to_dict()
        rows.append(_verdict_row(chord))
    if ctx.scan.refine and verdict.refuted:
        refined = refine_witness(f, c, verdict.witness, ctx.scan.refine_rounds, ctx.domain)
        result["refined_witness"] = refined.to_dict()
    code = EXIT_EVAL if INDETERMINATE in (r[1] for r in rows) else EXIT_OK
    return result, warns, _VERDICT_HEADER, rows, code


def cmd_theorem1(ctx: _Context):
    f = ctx.require_f()
    rep = theorem1_probe(f, ctx.h, ctx.domain, ctx.scan, concave=bool(ctx.cfg["concave"]))
    rows = [("mid",) + _verdict_row(rep.mid_verdict), ("full",) + _verdict_row(rep.full_verdict)]
    warns = list(rep.full_verdict.hypothesis_warnings)
    for k, v in rep.hypothesis_flags.items():
        if v in ("fail", False):
            warns.append(f"hypothesis {k} not met on the sample")
    code = EXIT_EVAL if INDETERMINATE in (rep.mid_verdict.status, rep.full_verdict.status) else EXIT_OK
    return rep.to_dict(), warns, ("which",) + _VERDICT_HEADER, rows, code


def cmd_theorem2(ctx: _Context):
    f = ctx.require_f()
    if ctx.cfg["inner"] is None:
        raise ConfigError("theorem2 needs --inner a:b")
    inner = parse_pair(ctx.cfg["inner"])
    try:
        rep = theorem2_probe(f, ctx.h, inner, ctx.cfg["eps"], ctx.scan, domain=ctx.domain)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    warns = [f"hypothesis {k} not met on the sample"
             for k, v in rep.hypothesis_flags.items() if v in ("fail", False)]
    rows = [(x, y, lam) for x, y, lam in rep.lambda_samples]
    return rep.to_dict(), warns, ("x", "y", "lambda_eps"), rows, EXIT_OK


def cmd_modulus(ctx: _Context):
    f = ctx.require_f()
    ratio = h_continuity_ratio(f, ctx.h, ctx.domain, ctx.cfg["pairs"], ctx.scan.seed,
                               ctx.scan.tol_abs, ctx.scan.tol_rel)
    ctrl = control_function_check(ctx.h)
    result = {"ratio": ratio.to_dict(), "control_function": ctrl.to_dict()}
    for flag in ("nondecreasing", "inf_to_zero"):
        result["control_function"][flag].pop("grid")
    warns = [] if ctrl.is_control else [f"h={ctx.h.name} is not a control function on the sample"]
    header = ("sup_ratio", "x", "y", "h_continuous_on_sample", "is_control")
    rows = [(ratio.sup_ratio, *ratio.witness_pair, ratio.h_continuous_on_sample, ctrl.is_control)]
    return result, warns, header, rows, EXIT_OK


def cmd_holder(ctx: _Context):
    f = ctx.require_f()
    fit = holder_fit(f, ctx.domain, ctx.cfg["pairs"], ctx.scan.seed)
    result = fit.to_dict()
    result["scales"] = list(fit.scales)
    result["envelope"] = list(fit.envelope)
    return result, [], ("log_dx", "log_df"), list(fit.cloud), EXIT_OK


def cmd_curve(ctx: _Context):
    s, X, Y, n = ctx.cfg["s"], ctx.cfg["X"], ctx.cfg["Y"], ctx.cfg["n"]
    if n < 2:
        raise ConfigError("--n must be >= 2")
    try:
        metrics = curve_metrics(s, X, Y, ctx.cfg["tol_quad"])
    except ValueError as err:
        raise ConfigError(str(err)) from None
    lam = np.arange(n) / (n - 1)
    values = curve_value(s, lam, X, Y)
    rows = [(float(l), float(v), inclination(s, float(l), X, Y)) for l, v in zip(lam, values)]
    warns = [] if metrics.converged else ["quadrature did not reach the requested tolerance"]
    return {"metrics": metrics.to_dict(), "n": n}, warns, ("lambda", "value", "inclination"), rows, EXIT_OK


def cmd_conjecture(ctx: _Context):
    f = ctx.require_f()
    rep = conjecture_probe(f, ctx.h, ctx.domain, ctx.scan, ctx.cfg["fd_step"])
    warns = list(rep.hconvex_side.hypothesis_warnings)
    if rep.h_alpha_ge_alpha != "pass":
        warns.append("hypothesis h(a) >= a not met on the sample")
    header = ("threshold", "inf_f2", "argmin", "derivative_side", "hconvex_status", "consistent")
    rows = [(rep.threshold, rep.inf_f2, rep.argmin, rep.derivative_side,
             rep.hconvex_side.status, rep.consistent)]
    code = EXIT_EVAL if rep.hconvex_side.status == INDETERMINATE else EXIT_OK
    return rep.to_dict(), warns, header, rows, code


def cmd_props(ctx: _Context):
    props = h_property_check(ctx.h, ctx.cfg["n"])
    d = props.to_dict()
    rows = [(k, v["status"], v["worst"], " ".join(repr(w) for w in v["witness"]))
            for k, v in d.items() if k != "endpoints"]
    return d, [], ("flag", "status", "worst", "witness"), rows, EXIT_OK


FIGURE1_HEADER = ("t", "h_half", "h_one", "h_threehalf", "f")


def figure1_rows(n: int) -> list[tuple]:
    if n < 2:
        raise ConfigError("figure1 needs n >= 2")
    t = np.arange(n) / (n - 1)
    cols = [t, np.power(t, 0.5), t, np.power(t, 1.5), np.power(t, 2.0)]
    return [tuple(float(c[i]) for c in cols) for i in range(n)]


def emit_figure1(path, n: int = 101) -> Path:
    """Write the sampled curves t^(1/2), t, t^(3/2) and t^2 on [0, 1] as CSV."""
    path = Path(path)
    path.write_text(to_csv(FIGURE1_HEADER, figure1_rows(n)))
    return path


def cmd_figure1(ctx: _Context):
    rows = figure1_rows(ctx.cfg["n"])
    return {"n": ctx.cfg["n"], "columns": list(FIGURE1_HEADER)}, [], FIGURE1_HEADER, rows, EXIT_OK


HANDLERS = {
    "check": cmd_check,
    "refute": cmd_check,
    "theorem1": cmd_theorem1,
    "theorem2": cmd_theorem2,
    "modulus": cmd_modulus,
    "holder": cmd_holder,
    "curve": cmd_curve,
    "conjecture": cmd_conjecture,
    "props": cmd_props,
    "figure1": cmd_figure1,
}


def _error_line(kind: str, message: str) -> str:
    return json.dumps({"error": kind, "message": message}, sort_keys=True)


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    start = time.perf_counter()
    try:
        ns = _build_parser().parse_args(argv)
        cfg = _merge(ns)
        ctx = _Context(cfg)
        fmt = cfg["format"] or ("csv" if ctx.command == "figure1" else "json")
        if fmt == "both" and not cfg["out"]:
            raise ConfigError("--format both needs --out")
    except ConfigError as err:
        print(_error_line("config", str(err)), file=stderr)
        return EXIT_CONFIG

    try:
        result, warns, header, rows, code = HANDLERS[ctx.command](ctx)
    except ConfigError as err:
        print(_error_line("config", str(err)), file=stderr)
        return EXIT_CONFIG
    except EvalDomainError as err:
        result, warns, header, rows, code = {"error": str(err)}, [], (), [], EXIT_EVAL
        print(_error_line("evaluation", str(err)), file=stderr)

    report = Report(
        tool_version=__version__,
        command=ctx.command,
        config=ctx.echo(),
        result=result,
        hypothesis_warnings=warns,
        csv_header=header,
        csv_rows=rows,
        timing_ms=(time.perf_counter() - start) * 1e3 if cfg["timing"] else None,
        exit_code=code,
    )
    out = Path(cfg["out"]) if cfg["out"] else None
    try:
        write_report(report, out, fmt, stream=stdout)
    except OSError as err:
        print(_error_line("io", str(err)), file=stderr)
        return EXIT_EVAL
    return code


def main() -> None:
    sys.exit(run())
