"""First-order accuracy in time.

The potential is treated in a lagged, linearised way, so the scheme is first
order in dt even though diffusion uses the trapezoidal rule. To see that on a
modest 64 x 64 mesh, each run is compared with a reference run on the same
mesh at a step sixteen times smaller: the spatial error cancels and only the
temporal error is left.

Takes about a minute.

Run: python demos/03_temporal_convergence.py
"""
from pnpfd import mms

report = mms.mms_time_study(64, (1 / 40, 1 / 80, 1 / 160, 1 / 320), T=1.0, reference="self", ref_factor=16)
print(report.format())
for var in ("p", "n", "phi"):
    print(f"{var:>4}: observed L2 orders {', '.join(f'{o:.2f}' for o in report.orders(var))}")
