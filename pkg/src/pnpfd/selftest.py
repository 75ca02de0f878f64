"""Quick invariant checks on small grids, run by ``pnpfd selftest``."""
from __future__ import annotations

import numpy as np

from . import cases
from .assembly import drift_matrix, laplacian_matrix, schur_operator
from .grid import Field, grad_h, ghost_value, inner_h, laplacian_h, make_grid
from .stepper import Species, Stepper, simulate


def _random_field(grid, rng, low=-1.0, high=1.0):
    return Field(grid, rng.uniform(low, high, grid.shape))


def check_ghosts(rng):
    g = make_grid(0, 1, 0, 2, 5, 4)
    f = _random_field(g, rng)
    ok = all(ghost_value(f, 0, k) == f.at(1, k) and ghost_value(f, 6, k) == f.at(5, k) for k in range(1, 5))
    ok &= all(ghost_value(f, j, 0) == f.at(j, 1) and ghost_value(f, j, 5) == f.at(j, 4) for j in range(1, 6))
    return ok, "mirror identities on all four edges"


def check_summation_by_parts(rng):
    g = make_grid(0, 1.3, -0.5, 0.5, 9, 7)
    worst = 0.0
    for _ in range(5):
        f, h = _random_field(g, rng), _random_field(g, rng)
        fx, fy = grad_h(f)
        hx, hy = grad_h(h)
        lhs = inner_h(laplacian_h(f), h)
        rhs = -inner_h(fx, hx) - inner_h(fy, hy)
        sym = inner_h(f, laplacian_h(h))
        scale = max(abs(lhs), 1.0)
        worst = max(worst, abs(lhs - rhs) / scale, abs(lhs - sym) / scale)
    return worst <= 1e-12, f"max relative defect {worst:.2e}"


def check_operators(rng):
    g = make_grid(0, 4, 0, 4, 4, 4)
    F = laplacian_matrix(g)
    c = _random_field(g, rng, 0.0, 2.0)
    A = drift_matrix(c)
    M = schur_operator(0.5, F, c)
    f = _random_field(g, rng)
    ok = np.allclose(F.apply(f).values, laplacian_h(f).values, rtol=0, atol=1e-13)
    details = []
    for name, op in (("F", F), ("A(c)", A), ("schur", M)):
        dense = op.toarray()
        ev = np.linalg.eigvalsh(dense)
        tol = 1e-10 * max(1.0, np.abs(ev).max())
        sym = np.array_equal(dense, dense.T)
        semi = ev.max() <= tol and int(np.sum(np.abs(ev) <= tol)) == 1
        ok &= sym and semi
        details.append(f"{name}: sym={sym} nsd={semi}")
    ok &= np.allclose(drift_matrix(g.constant(-3.5)).toarray(), -3.5 * F.toarray(), rtol=0, atol=1e-14)
    return bool(ok), "; ".join(details)


def check_stationary():
    g = make_grid(0, 1, 0, 1, 6, 6)
    st = Stepper(g, 0.1)
    s0 = st.initial_state([Species("p", 1, g.constant(0.7)), Species("n", -1, g.constant(0.7))])
    s1 = st.step(s0)
    dev = max(np.abs(s1["p"].values - 0.7).max(), np.abs(s1["n"].values - 0.7).max(), np.abs(s1.phi.values).max())
    return dev <= 1e-13, f"max deviation {dev:.2e}"


def check_two_ion_run():
    g = make_grid(0, 1, 0, 1, 12, 12)
    st = Stepper(g, 0.01)
    s0 = st.initial_state([Species("p", 1, g.sample(cases.example2_p)), Species("n", -1, g.sample(cases.example2_n))])
    _, diags = simulate(st, s0, 20)
    mass_err = max(max(r.mass_rel_err.values()) for r in diags)
    res = max(r.energy_residual for r in diags)
    energies = [r.energy for r in diags]
    decay = all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    ok = mass_err <= 1e-12 and res <= 1e-9 and decay
    return ok, f"mass drift {mass_err:.1e}, energy residual {res:.1e}, non-increasing={decay}"


def check_three_ion_run(rng):
    g = make_grid(0, 1, 0, 1, 10, 10)
    X, Y = g.meshgrid()
    c1 = 0.3 + 0.2 * np.cos(np.pi * X)
    c2 = 0.4 + 0.1 * np.cos(np.pi * Y)
    c3 = 1.0 + 0.3 * np.cos(np.pi * X) * np.cos(np.pi * Y)
    c3 *= (2 * c1.sum() + c2.sum()) / c3.sum()
    st = Stepper(g, 0.02)
    s0 = st.initial_state([Species("a", 2, Field(g, c1)), Species("b", 1, Field(g, c2)), Species("c", -1, Field(g, c3))])
    _, diags = simulate(st, s0, 10)
    mass_err = max(max(r.mass_rel_err.values()) for r in diags)
    res = max(r.energy_residual for r in diags)
    return mass_err <= 1e-12 and res <= 1e-9, f"mass drift {mass_err:.1e}, energy residual {res:.1e}"


def run_selftest(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    checks = [
        ("ghost reflection", lambda: check_ghosts(rng)),
        ("summation by parts", lambda: check_summation_by_parts(rng)),
        ("operator structure", lambda: check_operators(rng)),
        ("stationary state", check_stationary),
        ("two-ion mass/energy", check_two_ion_run),
        ("three-ion mass/energy", lambda: check_three_ion_run(rng)),
    ]
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
