"""Height, length and slope of the limiting curve lam^s X + (1 - lam)^s Y."""

import time

from hconvex.limitcurve import curve_length, curve_length_midpoint, curve_metrics, inclination

for s in (0.1, 0.25, 0.5, 0.75, 0.9, 1.0):
    m = curve_metrics(s)
    print(f"s={s:4}: height={m.height_max:.10f} (2^(1-s)={2 ** (1 - s):.10f}) at {m.height_argmax:.6f}, "
          f"length={m.length:.10f}")

m = curve_metrics(0.5, 4.0, 1.0)
print(f"X=4, Y=1: peak {m.height_max:.6f} at lam={m.height_argmax:.6f} (16/17={16 / 17:.6f})")

t0 = time.perf_counter()
fast = curve_length(0.5)
t1 = time.perf_counter()
slow = curve_length_midpoint(0.5)
t2 = time.perf_counter()
print(f"adaptive {fast.length:.13f} in {1e3 * (t1 - t0):.1f} ms, midpoint oracle {slow:.13f} in {1e3 * (t2 - t1):.0f} ms")

print("slopes at s=0.5:", [round(inclination(0.5, l, 1, 1), 5) for l in (0.0, 0.25, 0.5, 0.75, 1.0)])
