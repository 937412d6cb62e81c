"""Second-derivative threshold 1 - 2 h(1/2) against the h-convexity scan.

The probe reports both sides and whether they agree; it does not decide
whether the claimed equivalence holds.
"""

from hconvex.certify import ScanConfig, conjecture_probe
from hconvex.exprkit import EvalDomain, parse
from hconvex.funclasses import ModulatingFn

unit = EvalDomain(0.0, 1.0)
cfg = ScanConfig(n_xy=101, n_t=101)
for h in (ModulatingFn.identity(), ModulatingFn.power(0.5)):
    for text in ("t^2", "t", "1-t^2", "1-0.1*t^2", "1-0.5*t^2"):
        r = conjecture_probe(parse(text), h, unit, cfg)
        print(f"h={h.name:10s} f={text:10s} threshold={r.threshold:+.5f} inf f''={r.inf_f2:+.5f} "
              f"scan={r.hconvex_side.status:18s} consistent={r.consistent}")
