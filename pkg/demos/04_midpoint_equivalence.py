"""Midpoint versus full h-convexity on a small catalog.

For h with h(a) >= a on (0, 1) and continuous non-negative f, the midpoint
inequality at every pair should give the same verdict as the full one.
"""

from hconvex.certify import ScanConfig, theorem1_probe
from hconvex.exprkit import EvalDomain, parse
from hconvex.funclasses import ModulatingFn

unit = EvalDomain(0.0, 1.0)
cfg = ScanConfig(n_xy=101, n_t=101)
for text in ("t^2", "t", "exp(t)", "sqrt(t)", "1-t^2"):
    for h in (ModulatingFn.identity(), ModulatingFn.power(0.5)):
        r = theorem1_probe(parse(text), h, unit, cfg)
        print(f"{text:8s} {h.name:10s} mid={r.mid_verdict.status:18s} full={r.full_verdict.status:18s} agree={r.agree}")

r = theorem1_probe(parse("sqrt(t)"), ModulatingFn.identity(), unit, cfg, concave=True)
print("concave mode, sqrt(t):", r.mid_verdict.status, r.full_verdict.status)
