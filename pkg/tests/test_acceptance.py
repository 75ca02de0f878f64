"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""
import numpy as np
import pytest

from oracles import LiteralTwoIon, fd_sources, monolithic_two_ion_step
from pnpfd import cases, mms
from pnpfd.assembly import drift_matrix, laplacian_matrix, schur_operator
from pnpfd.grid import Field, make_grid
from pnpfd.linsolve import SolverOptions
from pnpfd.stepper import Species, Stepper, simulate


@pytest.fixture(scope="module")
def example2_run():
    g = make_grid(0, 1, 0, 1, 108, 108)
    st = Stepper(g, 0.01, solver=SolverOptions(method="direct"))
    s0 = st.initial_state([Species("p", 1, g.sample(cases.example2_p)), Species("n", -1, g.sample(cases.example2_n))])
    _, rows = simulate(st, s0, 100)
    return rows


def test_1_mass_conservation(example2_run, report):
    rows = example2_run
    assert len(rows) == 101
    drift = max(max(r.mass_rel_err.values()) for r in rows)
    ok = drift <= 1e-12
    report("1 mass", ok, f"h=1/108 dt=0.01 100 steps: max per-species relative mass drift {drift:.2e} (<= 1e-12)")
    assert ok


def test_2_energy_identity(example2_run, report):
    rows = example2_run
    res = max(r.energy_residual for r in rows[1:])
    rise = max(b.energy - a.energy for a, b in zip(rows, rows[1:]))
    ok = res <= 1e-9 and rise <= 1e-12
    report("2 energy", ok, f"max energy residual {res:.2e} (<= 1e-9), max E^(m+1) - E^m {rise:.2e} (<= 1e-12)")
    assert ok


def test_3_positivity(example2_run, report):
    rows = example2_run
    lows = {name: min(r.min_conc[name] for r in rows) for name in ("p", "n")}
    ok = all(v >= 0 for v in lows.values())
    report("3 positivity", ok, f"min p {lows['p']:.3e}, min n {lows['n']:.3e} over all steps (>= 0)")
    assert ok


def test_4_spatial_order(report):
    rep = mms.mms_space_study((10, 20, 40, 80), dt=1e-5, T=0.1)
    p, n, phi = (rep.orders(v) for v in ("p", "n", "phi"))
    ok = all(1.8 <= o <= 2.2 for o in p[-2:] + n[-2:]) and min(phi) >= 1.5
    fmt = lambda xs: ", ".join(f"{o:.2f}" for o in xs)  # noqa: E731
    report("4 space order", ok, f"L2 orders p [{fmt(p)}], n [{fmt(n)}] (last two in [1.8, 2.2]); phi [{fmt(phi)}] (>= 1.5)")
    print(rep.format())
    assert ok


def test_5_temporal_order(report):
    rep = mms.mms_time_study(64, (1 / 40, 1 / 80, 1 / 160, 1 / 320), T=1.0, reference="self", ref_factor=16)
    p = rep.orders("p")
    ok = all(0.85 <= o <= 1.15 for o in p)
    report("5 time order", ok, f"h=1/64 self-reference at dt/16: p L2 orders [{', '.join(f'{o:.2f}' for o in p)}] (in [0.85, 1.15])")
    print(rep.format())
    assert ok


def test_6_schur_vs_monolithic(report):
    rng = np.random.default_rng(2024)
    g = make_grid(0, 1, 0, 1, 4, 4)
    worst = 0.0
    for _ in range(20):
        dt = float(rng.uniform(1e-3, 0.1))
        P = rng.uniform(0, 1, g.shape)
        N = rng.uniform(0, 1, g.shape)
        N *= P.sum() / N.sum()
        st = Stepper(g, dt)
        s0 = st.initial_state([Species("p", 1, Field(g, P)), Species("n", -1, Field(g, N))])
        s1 = st.step(s0)
        Pm, Nm, Phim = monolithic_two_ion_step(P, N, s0.phi.values, dt, g.dx, g.dy, g.flat_index(1, 1))
        worst = max(
            worst,
            np.abs(s1["p"].values - Pm).max(),
            np.abs(s1["n"].values - Nm).max(),
            np.abs(s1.phi.values - Phim).max(),
        )
    ok = worst <= 1e-10
    report("6 schur", ok, f"4x4, 20 random neutral states: max |schur - monolithic| {worst:.2e} (<= 1e-10)")
    assert ok


def test_7_multi_ion_reduction(report):
    g = make_grid(0, 1, 0, 1, 16, 16)
    dt = 0.01
    P, N = g.sample(cases.example2_p).values, g.sample(cases.example2_n).values
    lit = LiteralTwoIon(16, 16, g.dx, g.dy, dt)
    Phi = lit.potential(P, N)
    st = Stepper(g, dt, solver=SolverOptions(method="direct"))
    state = st.initial_state([Species("p", 1, Field(g, P)), Species("n", -1, Field(g, N))])
    worst = np.abs(Phi - state.phi.values).max()
    for _ in range(50):
        P, N, Phi = lit.step(P, N, Phi)
        state = st.step(state)
        worst = max(
            worst,
            np.abs(P - state["p"].values).max(),
            np.abs(N - state["n"].values).max(),
            np.abs(Phi - state.phi.values).max(),
        )
    ok_two = worst <= 1e-12

    h = make_grid(0, 1, 0, 1, 16, 16)
    X, Y = h.meshgrid()
    c1 = 0.2 + 0.15 * np.cos(np.pi * X) * np.cos(np.pi * Y)
    c2 = 0.3 + 0.2 * np.cos(2 * np.pi * Y)
    c3 = 0.6 + 0.4 * np.cos(np.pi * X)
    c3 *= (2 * c1.sum() + c2.sum()) / c3.sum()
    st3 = Stepper(h, 0.01, solver=SolverOptions(method="direct"))
    s0 = st3.initial_state(
        [Species("a", 2, Field(h, c1)), Species("b", 1, Field(h, c2)), Species("c", -1, Field(h, c3))]
    )
    _, rows = simulate(st3, s0, 50)
    mass_err = max(max(r.mass_rel_err.values()) for r in rows)
    res = max(r.energy_residual for r in rows[1:])
    ok_three = mass_err <= 1e-12 and res <= 1e-9
    ok = ok_two and ok_three
    report(
        "7 multi-ion",
        ok,
        f"two-ion generic vs literal, 16x16, 50 steps: {worst:.2e} (<= 1e-12); "
        f"z=(+2,+1,-1): mass drift {mass_err:.2e} (<= 1e-12), energy residual {res:.2e} (<= 1e-9)",
    )
    assert ok


def _one_zero_nsd(dense, tol):
    ev = np.linalg.eigvalsh(dense)
    return bool(ev.max() <= tol and np.sum(np.abs(ev) <= tol) == 1), ev


def test_8_matrix_structure(report):
    rng = np.random.default_rng(8)
    failures = []
    checked = 0
    for nx in range(2, 6):
        for ny in range(2, 6):
            # unit spacing keeps eigenvalues O(1) so an absolute 1e-10 tolerance is meaningful
            g = make_grid(0, nx, 0, ny, nx, ny)
            F = laplacian_matrix(g)
            Fd = F.toarray()
            c = Field(g, rng.uniform(0, 2, g.shape))
            Ad = drift_matrix(c).toarray()
            dt = float(rng.uniform(0.05, 2.0))
            Md = schur_operator(dt, F, c).toarray()
            for name, d in (("F", Fd), ("A(c)", Ad), ("M", Md)):
                checked += 1
                if not np.array_equal(d, d.T):
                    failures.append(f"{name} {nx}x{ny} not symmetric")
                ok, ev = _one_zero_nsd(d, 1e-10)
                if not ok:
                    failures.append(f"{name} {nx}x{ny} spectrum max {ev.max():.2e}")
            for name, d in (("F", Fd), ("A(c)", Ad)):
                if np.abs(d.sum(axis=1)).max() > 1e-13 * np.abs(d).max():
                    failures.append(f"{name} {nx}x{ny} row sums")
                if np.any(np.diag(d) > 0) or np.count_nonzero(d, axis=1).max() > 5:
                    failures.append(f"{name} {nx}x{ny} stencil shape")
            for kappa in (0.0, 1.0, -3.5):
                if not np.array_equal(drift_matrix(g.constant(kappa)).toarray(), kappa * Fd):
                    failures.append(f"A({kappa}) != {kappa} F on {nx}x{ny}")
            B = (2 / dt) * np.eye(g.size) - Fd
            if np.abs(B @ Fd - Fd @ B).max() > 1e-12:
                failures.append(f"commutation {nx}x{ny}")
    g4 = make_grid(0, 4, 0, 4, 4, 4)
    ok4, ev4 = _one_zero_nsd(schur_operator(0.5, laplacian_matrix(g4), Field(g4, rng.uniform(0, 1, (4, 4)))).toarray(), 1e-12)
    if not ok4:
        failures.append(f"4x4 schur spectrum at 1e-12: max {ev4.max():.2e}")
    ok = not failures
    report("8 structure", ok, f"{checked} operators on 2x2..5x5 grids: " + ("all checks pass" if ok else "; ".join(failures)))
    assert ok


def test_9_source_oracle(report):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(25):
        t, x, y = rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)
        got = np.array(mms.sources(t, x, y))
        want = np.array(fd_sources(mms.exact_p, mms.exact_n, mms.exact_phi, t, x, y))
        worst = max(worst, np.abs(got - want).max())
    ok = worst <= 1e-6
    report("9 sources", ok, f"25 random (t, x, y): max |closed form - finite differences| {worst:.2e} (<= 1e-6)")
    assert ok
