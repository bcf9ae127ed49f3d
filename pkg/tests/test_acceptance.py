"""Acceptance suite: every headline criterion at its stated tolerance.

Each test prints one PASS line with the measured quantities; a failure would
surface through the assertion itself.  Criteria:

1. geometric expansion orders on the cylinder (plus the curved-chart slope)
2. constitutive tensor thin limits and eps-uniform ellipticity
3. transverse strain closures satisfy their ODEs; closed-form spot values
4. memory recursion exactness and the semigroup restart property
5. manufactured 2D membrane convergence in space and time
6. zero-load 3D dissipation identity on three scenarios
7. thin-limit convergence of averaged 3D solutions to the 2D solution
8. empirical Korn-type bound uniform over the thickness sweep
"""

import numpy as np

from vshell import fem, geometry, memory, solver2d, solver3d
from vshell.geometry import fit_loglog_slope, surface_frame, volume_metrics
from vshell.harness import builtin_scenarios, run_convergence
from vshell.kinematics import gamma_ab
from vshell.material import (MaterialParams, membrane_tensors, tensor3d_elastic,
                             tensor3d_limits)
from vshell.memory import TimeGrid


def _report(num, detail):
    print(f"\nACCEPTANCE {num} PASS: {detail}")


def test_criterion_1_geometric_expansion_orders():
    cyl = geometry.cylinder_chart(1.0, np.pi / 3, 1.0)
    rep = geometry.expansion_residuals(cyl, [0.1, 0.05, 0.025])

    exact3 = max(r for _, r in rep["residuals"]["christoffel_3"])
    assert exact3 <= 1e-10
    assert rep["slopes"]["metric_det"] >= 0.9
    # in-plane surface symbols of a straight cylinder vanish identically, so
    # the O(eps^2) claim holds in the exact-vanishing sense; the slope itself
    # is measured on the curved chart below
    sup_s = max(r for _, r in rep["residuals"]["christoffel_s"])
    assert sup_s <= 1e-13 or rep["slopes"]["christoffel_s"] >= 1.9
    assert rep["slopes"]["christoffel_shear"] >= 1.9

    hyp = geometry.hypar_chart(0.6)
    rep_h = geometry.expansion_residuals(hyp, [0.1, 0.05, 0.025])
    assert rep_h["slopes"]["christoffel_s"] >= 1.9

    _report(1, f"Gamma3 exact residual {exact3:.2e}; metric slope "
               f"{rep['slopes']['metric_det']:.2f}; shear slope "
               f"{rep['slopes']['christoffel_shear']:.2f}; in-plane residual "
               f"{sup_s:.1e} (exact branch), curved-chart slope "
               f"{rep_h['slopes']['christoffel_s']:.2f}")


def test_criterion_2_tensor_limits_and_ellipticity():
    params = MaterialParams(lam=1.0, mu=1.0, theta=1.0, rho=1.0)
    cyl = geometry.cylinder_chart(1.0, np.pi / 3, 1.0)
    y, _ = geometry.default_sample_points(cyl, 5, 1)
    sf = surface_frame(cyl, y)
    A0, _ = tensor3d_limits(sf.a_ctr, params)

    eps_list = [0.1, 0.05, 0.025]
    sup = []
    for eps in eps_list:
        worst = 0.0
        for x3 in (-1.0, 0.0, 1.0):
            vol = volume_metrics(cyl, eps, y, np.full(len(y), x3))
            worst = max(worst, float(np.max(np.abs(
                tensor3d_elastic(vol.g_ctr, params) - A0))))
        sup.append(worst)
    slope = fit_loglog_slope(eps_list, sup)
    assert slope >= 0.9

    rng = np.random.default_rng(7)
    t = rng.standard_normal((1000, 3, 3))
    t = 0.5 * (t + np.swapaxes(t, -1, -2))
    t /= np.linalg.norm(t, axis=(-2, -1), keepdims=True)
    minima = []
    for eps in (0.2, 0.1, 0.05):
        vol = volume_metrics(cyl, eps, y, np.full(len(y), 0.8))
        A = tensor3d_elastic(vol.g_ctr, params)
        minima.append(float(np.einsum("pijkl,nkl,nij->pn", A, t, t).min()))
    single_constant = min(minima)
    assert single_constant > 0.0

    _report(2, f"limit-distance slope {slope:.2f}; ellipticity minima "
               + ", ".join(f"{m:.3f}" for m in minima)
               + f"; single constant {single_constant:.3f} > 0")


def test_criterion_3_ode_closures():
    params = MaterialParams(lam=1.0, mu=1.0, theta=1.0, rho=2.0)
    grid = TimeGrid(T=0.125, N=2048)
    t = grid.times

    F = 0.4 + 0.5 * np.sin(2.0 * t) - 0.2 * np.cos(1.5 * t)
    e = memory.shear_closure(F, grid, params)
    edot = np.gradient(e, grid.dt, edge_order=2)
    res_shear = np.max(np.abs(
        (2 * params.mu * e + params.rho * edot - F)[1:-1])) / np.max(np.abs(F))
    assert res_shear <= 1e-8

    F33 = 0.3 + 0.4 * np.sin(2.1 * t)
    tr = 0.2 * np.cos(1.7 * t) - 0.2
    e33 = memory.normal_closure(F33, tr, grid, params)
    lam, mu, th, rho = params.lam, params.mu, params.theta, params.rho
    res = (lam * tr + (lam + 2 * mu) * e33
           + th * np.gradient(tr, grid.dt, edge_order=2)
           + (th + rho) * np.gradient(e33, grid.dt, edge_order=2) - F33)
    res_normal = np.max(np.abs(res[1:-1])) / np.max(np.abs(F33))
    assert res_normal <= 1e-8

    g1 = TimeGrid(T=1.0, N=2048)
    p_shear = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=2.0)
    spot1 = memory.shear_closure(np.ones(g1.N + 1), g1, p_shear)[-1]
    assert abs(spot1 - 0.3160602794142788) <= 1e-9
    p_norm = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=1.0)
    spot2 = memory.normal_closure(2 * np.ones(g1.N + 1), np.zeros(g1.N + 1),
                                  g1, p_norm)[-1]
    assert abs(spot2 - 0.6321205588285577) <= 1e-9

    _report(3, f"shear residual {res_shear:.2e}, normal residual "
               f"{res_normal:.2e} (tol 1e-8); spot values "
               f"{spot1:.9f} / {spot2:.9f} (tol 1e-9)")


def test_criterion_4_memory_recursion():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        k = float(np.exp(rng.uniform(np.log(1e-4), np.log(100.0))))
        dt = float(np.exp(rng.uniform(np.log(1e-2), np.log(1.0))))
        n = int(rng.integers(2, 33))
        f = rng.standard_normal(n + 1)
        rec = memory.convolve_samples(f, k, dt)
        direct = memory.direct_convolution(f, k, dt)
        worst = max(worst, float(np.max(np.abs(rec - direct))
                                 / max(np.max(np.abs(direct)), 1.0)))
    assert worst <= 1e-12

    f = rng.standard_normal(65)
    k, dt = 1.3, 0.03
    full = memory.convolve_samples(f, k, dt)
    acc = memory.MemoryAccumulator(k)
    acc.start(f[0])
    for n in range(32):
        acc.step(f[n + 1], dt)
    gap_mid = abs(acc.state - full[32])
    for n in range(32, 64):
        acc.step(f[n + 1], dt)
    gap_end = abs(acc.state - full[64])
    assert max(gap_mid, gap_end) <= 1e-12

    _report(4, f"recursion vs direct oracle {worst:.2e} over 100 triples; "
               f"semigroup restart gap {max(gap_mid, gap_end):.2e} (tol 1e-12)")


# ---------------------------------------------------------------------------
# criterion 5: manufactured 2D convergence
# ---------------------------------------------------------------------------

def _manufactured_setup():
    chart = geometry.cylinder_chart(0.6, 2 * np.pi / 3, 1.0)
    sides = ("y1min", "y1max", "y2min", "y2max")
    params = MaterialParams(lam=1.0, mu=1.0, theta=1.0, rho=1.0)
    k = params.k
    (x0, x1), (y0, y1) = chart.domain
    a1 = np.pi / (x1 - x0)
    a2 = np.pi / (y1 - y0)
    amps = (0.3, 0.2, 0.5)

    def xs(y):
        s1 = np.sin(a1 * y[..., 0])
        s2 = np.sin(a2 * y[..., 1])
        return np.stack([amps[0] * s1 * s2, amps[1] * s1 * s2,
                         amps[2] * s1 * s2], -1)

    def dxs(y):
        s1 = np.sin(a1 * y[..., 0])
        c1 = np.cos(a1 * y[..., 0])
        s2 = np.sin(a2 * y[..., 1])
        c2 = np.cos(a2 * y[..., 1])
        d = np.zeros(y.shape[:-1] + (2, 3))
        for i, amp in enumerate(amps):
            d[..., 0, i] = amp * a1 * c1 * s2
            d[..., 1, i] = amp * a2 * s1 * c2
        return d

    r = lambda t: 1.0 - np.exp(-2.0 * t)
    rd = lambda t: 2.0 * np.exp(-2.0 * t)
    assert abs(k - 2.0) > 1e-9
    Ik = lambda t: (1 - np.exp(-k * t)) / k - (np.exp(-2 * t) - np.exp(-k * t)) / (k - 2.0)

    def phi_exact(t, pts):
        surf = surface_frame(chart, pts)
        gs = gamma_ab(xs(pts), dxs(pts), surf)
        tens = membrane_tensors(surf.a_ctr, params)
        A = np.einsum("qabst,qst->qab", tens.a, gs)
        B = np.einsum("qabst,qst->qab", tens.b, gs)
        C = np.einsum("qabst,qst->qab", tens.c, gs)
        return r(t) * A + rd(t) * B - Ik(t) * C

    return chart, sides, params, xs, dxs, r, phi_exact


def _solve_manufactured(chart, sides, params, phi_exact, n, N):
    grid = TimeGrid(T=1.0, N=N)
    mesh = fem.rect_mesh2d(chart.domain, n, n, gamma0_sides=sides)
    system = solver2d.assemble_membrane(mesh, chart, params)
    hist = solver2d.solve_membrane(system, phi_exact, grid)
    return system, hist, grid


def _seminorm_error(system, hist, grid, xs, dxs, r, chart):
    surf = surface_frame(chart, system.qp_pts)
    ge = gamma_ab(xs(system.qp_pts), dxs(system.qp_pts), surf)
    errs = []
    for idx, t in enumerate(grid.times):
        gh = system.gamma_at_qp(hist.states[idx])
        d = np.stack([r(t) * ge[:, 0, 0] - gh[:, 0],
                      r(t) * ge[:, 1, 1] - gh[:, 1],
                      r(t) * ge[:, 0, 1] - gh[:, 2]], 1)
        dens = d[:, 0] ** 2 + d[:, 1] ** 2 + 2 * d[:, 2] ** 2
        errs.append(np.sqrt(system.qp_w @ dens))
    errs = np.asarray(errs)
    return float(np.sqrt(np.trapezoid(errs**2, dx=grid.dt)))


def test_criterion_5_manufactured_convergence():
    chart, sides, params, xs, dxs, r, phi_exact = _manufactured_setup()

    hs, errs = [], []
    for n in (4, 8, 16):
        system, hist, grid = _solve_manufactured(chart, sides, params, phi_exact, n, 512)
        errs.append(_seminorm_error(system, hist, grid, xs, dxs, r, chart))
        hs.append(1.0 / n)
    slope_space = fit_loglog_slope(hs, errs)
    assert slope_space >= 1.8

    sys_ref, hist_ref, grid_ref = _solve_manufactured(chart, sides, params,
                                                      phi_exact, 12, 256)
    dts, terrs = [], []
    for N in (8, 16, 32):
        _, hist, grid = _solve_manufactured(chart, sides, params, phi_exact, 12, N)
        stride = 256 // N
        diff = hist.states - hist_ref.states[::stride]
        terrs.append(sys_ref.space_time_seminorm(diff, grid.dt))
        dts.append(grid.dt)
    slope_time = fit_loglog_slope(dts, terrs)
    assert slope_time >= 0.9

    _report(5, f"spatial seminorm slope {slope_space:.2f} (>= 1.8) over h, h/2, "
               f"h/4; temporal slope {slope_time:.2f} (>= 0.9) over dt halvings")


def test_criterion_6_dissipation_identity():
    rng = np.random.default_rng(3)
    grid = TimeGrid(T=1.0, N=12)
    worst = -np.inf
    names = []
    for name in ("plate", "cylinder_panel", "hypar_panel"):
        scen = builtin_scenarios()[name]
        chart = scen.chart()
        mesh2 = fem.rect_mesh2d(chart.domain, 4, 4, gamma0_sides=scen.gamma0_sides)
        mesh3 = fem.extrude_mesh(mesh2, 2, degree=2)
        system = solver3d.assemble_3d(mesh3, chart, 0.1, scen.material)
        u0 = rng.standard_normal(system.n_free)
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hist = solver3d.solve_3d(system, None, grid, u0=u0)
        E = hist.energies()
        inc = float(np.max(np.diff(E)))
        assert np.all(np.diff(E) <= 1e-14 * max(E[0], 1.0))
        worst = max(worst, inc / E[0])
        names.append(name)
    _report(6, f"zero-load energy non-increasing on {', '.join(names)}; "
               f"worst relative increment {worst:.2e}")


def test_criterion_7_thin_limit_convergence():
    scen = builtin_scenarios()["cylinder_panel"]
    assert scen.nx <= 24 and scen.ny <= 24 and scen.layers <= 4
    report = run_convergence(scen)
    assert report.kind == "first"
    assert [r[0] for r in report.rows] == [0.2, 0.1, 0.05]
    assert report.decreasing()
    assert all(r >= 1.2 for r in report.ratios)
    assert report.d3_decreasing()
    dists = ", ".join(f"{d:.5f}" for d in report.distances)
    d3s = ", ".join(f"{r[2]:.5f}" for r in report.rows)
    _report(7, f"distances [{dists}] ratios "
               + ", ".join(f"{x:.2f}" for x in report.ratios)
               + f" (>= 1.2); d3 norms [{d3s}] strictly decreasing")


def test_criterion_8_korn_uniform_bound():
    rng = np.random.default_rng(17)
    scen = builtin_scenarios()["cylinder_panel"]
    chart = scen.chart()
    mesh2 = fem.rect_mesh2d(chart.domain, 4, 4, gamma0_sides=scen.gamma0_sides)
    mesh3 = fem.extrude_mesh(mesh2, 2, degree=2)
    consts = []
    for eps in (0.2, 0.1, 0.05):
        system = solver3d.assemble_3d(mesh3, chart, eps, scen.material,
                                      with_h1_ops=True)
        worst = 0.0
        for _ in range(100):
            v = rng.standard_normal(system.n_free)
            ratio = eps * np.sqrt(system.h1_sq_norm(v) / system.strain_sq_norm(v))
            worst = max(worst, ratio)
        consts.append(worst)
    C = max(consts)
    assert np.isfinite(C) and C > 0.0
    # a single constant serves the whole sweep: the per-eps maxima must not
    # grow as the shell thins
    assert all(consts[i + 1] <= 1.2 * consts[i] for i in range(len(consts) - 1))
    _report(8, "single C = %.4f bounds |v|_1 <= (C/eps)|e(eps;v)| over 100 "
               "fields x 3 thicknesses; per-eps maxima %s" %
            (C, ", ".join(f"{c:.4f}" for c in consts)))
