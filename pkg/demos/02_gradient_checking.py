"""Verify every hand-derived gradient against central finite differences.

The project has no autodiff: each cell's backward pass is written by hand,
so this check is the core correctness argument.  It prints the worst
relative error per parameter tensor for all four cell kinds.

Run:  python3 demos/02_gradient_checking.py
"""
from memtag.training import gradcheck_all, GRADCHECK_TOL

ok, results = gradcheck_all(log=print)
print()
print(f"tolerance {GRADCHECK_TOL:g}: {'all pass' if ok else 'FAILURES above'}")
