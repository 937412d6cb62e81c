"""Parsing, printing and evaluating expressions in t.

Run: python demos/01_expressions.py
"""

import numpy as np

from hconvex.exprkit import EvalDomain, EvalDomainError, ExprSyntaxError, check_domain, evaluate, evaluate_array, parse, to_text

e = parse("2^3^2 - -t^2")
print("parsed  :", e)
print("printed :", to_text(e))
print("at t=2  :", evaluate(e, 2.0))  # ^ is right-associative and binds tighter than unary minus

# Vectorised evaluation never raises; it hands back a mask instead.
values, ok = evaluate_array(parse("log(t)"), np.array([-1.0, 0.0, 1.0, np.e]))
print("log mask:", ok, values)

# Scalar evaluation raises with the failing subexpression attached.
try:
    evaluate(parse("1/(t-0.5)"), 0.5)
except EvalDomainError as err:
    print("error   :", err)

try:
    parse("t^^2")
except ExprSyntaxError as err:
    print("syntax  :", err)

# Open endpoints are inset by one grid step, which keeps 1/t away from its pole.
for d in (EvalDomain(0, 1), EvalDomain(0, 1, open_lo=True)):
    print(f"1/t on {d}: {len(check_domain(parse('1/t'), d, 11))} failing grid points")
