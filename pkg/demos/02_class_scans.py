"""Grid scans for membership in the convexity classes.

A scan evaluates the residual (upper bound minus f at the combination point)
over all grid pairs x < y and a grid of t, and reports the worst sample.
"certified_on_grid" only means no violation was seen.
"""

from hconvex.certify import ScanConfig, refine_witness, scan_class
from hconvex.exprkit import EvalDomain, parse
from hconvex.funclasses import ClassSpec, ModulatingFn

unit = EvalDomain(0.0, 1.0)
cfg = ScanConfig(n_xy=101, n_t=101)

cases = [
    ("t^2", ClassSpec.convex()),
    ("sqrt(t)", ClassSpec.convex()),
    ("t^2", ClassSpec.hconvex(ModulatingFn.power(0.5))),
    ("sqrt(t)", ClassSpec.sconvex_second(0.5)),
    ("1", ClassSpec.godunova_levin()),
    ("1+t", ClassSpec.pfunction()),
]
for text, c in cases:
    v = scan_class(parse(text), c, unit, cfg)
    print(f"{text:8s} {c.describe():38s} {v.status:18s} worst={v.worst_residual:+.6f}")

# A coarse grid finds a violation; coordinate descent pushes it toward the true minimum -1/4.
f, c = parse("sqrt(t)"), ClassSpec.convex()
coarse = scan_class(f, c, unit, ScanConfig(n_xy=6, n_t=4))
better = refine_witness(f, c, coarse.witness, rounds=30, domain=unit)
print("coarse witness:", coarse.witness.x, coarse.witness.y, coarse.witness.t, coarse.witness.residual)
print("refined       :", better.x, better.y, round(better.t, 6), better.residual)

# First-sense weights can push the combination point out of [x, y].
d = EvalDomain(0.5, 1.0)
v = scan_class(parse("t"), ClassSpec.sconvex_first(0.5), d, ScanConfig(n_xy=21, n_t=21))
print(f"first sense on {d}: {v.out_of_domain_count} of {v.evaluations} samples left the interval")
