"""Control functions, h-continuity ratios and Hoelder fits."""

import numpy as np

from hconvex.certify import ScanConfig
from hconvex.continuity import control_function_check, h_continuity_ratio, holder_fit, theorem2_probe
from hconvex.exprkit import EvalDomain, parse
from hconvex.funclasses import ModulatingFn

for h in (ModulatingFn.power(0.5), ModulatingFn.one(), ModulatingFn.reciprocal()):
    print(f"{h.name:10s} control function: {control_function_check(h).is_control}")
# Small exponents need a deeper delta sequence before h drops below 1e-3.
deep = np.geomspace(1, 1e-40, 200)
print("power:0.1 with deltas to 1e-40:", control_function_check(ModulatingFn.power(0.1), deep).is_control)

unit = EvalDomain(0.0, 1.0)
for text, h in (("t", ModulatingFn.identity()), ("sqrt(t)", ModulatingFn.power(0.5)),
                ("sqrt(t)", ModulatingFn.identity())):
    for n in (500, 5000):
        r = h_continuity_ratio(parse(text), h, unit, n_pairs=n)
        print(f"|df|/h(|dx|) for f={text:8s} h={h.name:10s} pairs={n:5d}: sup={r.sup_ratio:.4f} at {r.witness_pair}")

for text, d in (("sqrt(t)", EvalDomain(1e-4, 1)), ("3*t", unit), ("t^2", unit), ("5", unit)):
    fit = holder_fit(parse(text), d, 2000)
    print(f"Hoelder fit {text:8s}: H={fit.H:.4f} alpha={fit.alpha} raw slope={fit.alpha_raw} {fit.note}")

rep = theorem2_probe(parse("t^2"), ModulatingFn.power(0.5), (0.1, 0.9), 0.05, ScanConfig(n_xy=41))
print(f"m_eps={rep.m_eps:.6f} M_eps={rep.M_eps:.6f} sup ratio={rep.sup_ratio:.4f}")
print("h(eps) - (M_eps - m_eps) =", rep.hypothesis_flags["coupling_discrepancy"])
