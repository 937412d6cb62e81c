"""Driving the command-line tool and reading its reports.

The same runs from a shell:
    hconvex check --f "sqrt(t)" --class convex --domain 0:1 --refine
    hconvex figure1 --n 101 --out figure1.csv
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path


def hconvex(*args):
    return subprocess.run([sys.executable, "-m", "hconvex", *args], capture_output=True, text=True)


proc = hconvex("check", "--f", "sqrt(t)", "--class", "convex", "--domain", "0:1", "--refine")
report = json.loads(proc.stdout)
print("exit", proc.returncode, "->", report["result"]["verdict"]["status"])
print("refined witness:", report["result"]["refined_witness"])

proc = hconvex("check", "--f", "t^2", "--h", "power:0", "--class", "hconvex-geometric")
print("exit", proc.returncode, "->", proc.stderr.strip())

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "figure1.csv"
    hconvex("figure1", "--n", "101", "--out", str(out))
    rows = out.read_text().splitlines()
    print(rows[0])
    print(rows[26])
