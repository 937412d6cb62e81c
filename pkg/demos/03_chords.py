"""h-chords, the bent-chord test and the properties of h."""

import numpy as np

from hconvex.exprkit import EvalDomain, parse
from hconvex.funclasses import (
    CautionError,
    ModulatingFn,
    bent_chord_test,
    first_sense_raw,
    h_chord,
    h_property_check,
)

f = parse("t^2")
for h in (ModulatingFn.identity(), ModulatingFn.power(0.5), ModulatingFn.power(1.5)):
    ts = np.linspace(0, 1, 5)
    chord = [round(h_chord(f, h, 0.0, 1.0, float(t)), 4) for t in ts]
    print(f"{h.name:10s} chord over [0, 1]: {chord}")

# Exponents k <= -1 and k = 0 have no chord reading.
try:
    h_chord(f, ModulatingFn.power(0.0), 0, 1, 0.5)
except CautionError as err:
    print("rejected:", err)

# L - f peaks inside J for the convex parabola, at J's ends for a concave cap.
for text in ("t^2", "-(t-0.5)^2 + 1"):
    r = bent_chord_test(parse(text), ModulatingFn.identity(), EvalDomain(0.25, 0.75), (0, 1), 101)
    print(f"bent chord {text:16s} inner={r.sup_inner:+.4f} boundary={r.sup_boundary:+.4f} pass={r.passed}")

# Raw first-sense weights alpha=1/2, beta=1 at x=y=1/4 land on 0.375.
raw = first_sense_raw(parse("t"), 0.5, 0.25, 0.25, 0.5, 1.0)
print("raw weights point:", raw.sample.combination_point, "in interval:", raw.sample.in_domain)

for h in (ModulatingFn.identity(), ModulatingFn.power(0.5), ModulatingFn.reciprocal()):
    p = h_property_check(h, 101)
    flags = {k: v["status"] for k, v in p.to_dict().items() if k != "endpoints"}
    print(h.name, flags)
