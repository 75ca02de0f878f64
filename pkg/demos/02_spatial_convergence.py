"""Second-order accuracy in space, checked against a manufactured solution.

The exact fields are polynomials in x and y times exp(-t), chosen to satisfy
the zero-flux conditions; forcing terms make them an exact solution. With a
tiny time step the error is dominated by the mesh, so halving h should cut
the concentration errors by four. The potential converges a little slower
on these meshes because it is pinned at a single boundary cell.

Takes about three minutes at the default sizes; pass --quick for a
seconds-long version on coarser meshes.

Run: python demos/02_spatial_convergence.py [--quick]
"""
import sys

from pnpfd import mms

if "--quick" in sys.argv:
    report = mms.mms_space_study((8, 16, 32), dt=1e-4, T=0.02)
else:
    report = mms.mms_space_study((10, 20, 40, 80), dt=1e-5, T=0.1)

print(report.format())
for var in ("p", "n", "phi"):
    print(f"{var:>4}: observed L2 orders {', '.join(f'{o:.2f}' for o in report.orders(var))}")
