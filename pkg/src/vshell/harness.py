"""Scenario library, convergence experiment, property-check suites, reports.

The headline experiment solves the scaled 3D shell problem over a decreasing
thickness list and measures the time-integrated membrane-seminorm distance
between the transverse average of each 3D solution and the single 2D
membrane solution, both living on the same quadratic in-plane mesh.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import fem, geometry, memory, solver2d, solver3d
from .geometry import chart_from_config
from .material import MaterialParams
from .memory import TimeGrid


class ScenarioError(ValueError):
    pass


class ClassificationMismatch(RuntimeError):
    """Discrete kind disagrees with the scenario's declared kind."""


# ---------------------------------------------------------------------------
# force presets and time profiles
# ---------------------------------------------------------------------------

def _bump_forces(chart, amplitude: float, transverse: bool = True):
    """Admissible F^{ij} vanishing quadratically on the whole boundary.

    Weak boundary-layer excitation keeps the eps-trend of the membrane limit
    visible at desk scale.
    """
    (x0, x1), (y0, y1) = chart.domain
    W, H = x1 - x0, y1 - y0

    def spatial(y, x3):
        n = len(x3)
        F = np.zeros((n, 3, 3))
        s1 = np.sin(np.pi * (y[:, 0] - x0) / W)
        s2 = np.sin(np.pi * (y[:, 1] - y0) / H)
        b = (s1 * s2) ** 2
        F[:, 0, 0] = 1.0 * b
        F[:, 1, 1] = 0.8 * b
        F[:, 0, 1] = F[:, 1, 0] = 0.2 * b
        if transverse:
            F[:, 2, 2] = 0.5 * b
            F[:, 0, 2] = F[:, 2, 0] = 0.15 * b
            F[:, 1, 2] = F[:, 2, 1] = 0.1 * b
        return amplitude * F

    return spatial


def _uniform_forces(chart, amplitude: float, transverse: bool = True):
    def spatial(y, x3):
        n = len(x3)
        F = np.zeros((n, 3, 3))
        F[:, 0, 0] = 1.0
        F[:, 1, 1] = 0.8
        if transverse:
            F[:, 2, 2] = 0.5
        return amplitude * F

    return spatial


def _zero_forces(chart, amplitude: float, transverse: bool = True):
    def spatial(y, x3):
        return np.zeros((len(x3), 3, 3))

    return spatial


FORCE_PRESETS = {
    "boundary_bump": _bump_forces,
    "uniform": _uniform_forces,
    "zero": _zero_forces,
}

TIME_PROFILES = {
    "ramp_exp": lambda t: 1.0 - np.exp(-2.0 * t),
    "constant": lambda t: 1.0,
    "linear": lambda t: t,
}


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Complete configuration of one experiment."""

    name: str
    chart_name: str
    chart_params: dict
    gamma0_sides: tuple
    material: MaterialParams
    force_preset: str = "boundary_bump"
    force_amplitude: float = 1.0
    time_profile: str = "ramp_exp"
    T: float = 1.0
    N: int = 16
    nx: int = 12
    ny: int = 12
    layers: int = 4
    thickness_degree: int = 2
    eps_list: tuple = (0.2, 0.1, 0.05)
    first_kind: bool = True
    delta_override: Optional[float] = None

    def __post_init__(self):
        if self.force_preset not in FORCE_PRESETS:
            raise ScenarioError(f"unknown force preset '{self.force_preset}'")
        if self.time_profile not in TIME_PROFILES:
            raise ScenarioError(f"unknown time profile '{self.time_profile}'")
        if len(self.eps_list) >= 2 and any(
                b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ScenarioError("eps_list must be strictly decreasing")

    def chart(self) -> geometry.MidsurfaceChart:
        return chart_from_config(self.chart_name, self.chart_params)

    def grid(self) -> TimeGrid:
        return TimeGrid(T=self.T, N=self.N)

    def forces(self, chart=None) -> solver3d.AdmissibleForces:
        chart = chart or self.chart()
        spatial = FORCE_PRESETS[self.force_preset](chart, self.force_amplitude)
        return solver3d.AdmissibleForces(spatial=spatial,
                                         profile=TIME_PROFILES[self.time_profile])

    def mesh2d(self) -> fem.Mesh2D:
        return fem.rect_mesh2d(self.chart().domain, self.nx, self.ny,
                               gamma0_sides=self.gamma0_sides)


def builtin_scenarios() -> dict:
    """Named scenario library; `cylinder_panel` is the first-kind default."""
    mat = MaterialParams(lam=1.0, mu=1.0, theta=1.0, rho=1.0)
    all_sides = ("y1min", "y1max", "y2min", "y2max")
    return {
        # generalized membrane of the first kind: strongly curved panel
        # clamped along its entire lateral boundary
        "cylinder_panel": Scenario(
            name="cylinder_panel", chart_name="cylinder",
            chart_params={"radius": 0.6, "angle": 2.0 * np.pi / 3.0, "height": 1.0},
            gamma0_sides=all_sides, material=mat, first_kind=True),
        # clamping a single generator leaves discrete inextensional fields:
        # honest degenerate classification, regularized solves only
        "cylinder_generator": Scenario(
            name="cylinder_generator", chart_name="cylinder",
            chart_params={"radius": 0.6, "angle": 2.0 * np.pi / 3.0, "height": 1.0},
            gamma0_sides=("y1min",), material=mat, first_kind=False),
        # flat plate: the membrane strain ignores the normal component
        "plate": Scenario(
            name="plate", chart_name="plane", chart_params={},
            gamma0_sides=("y1min",), material=mat, first_kind=False),
        # fully clamped elliptic cap: healthy spectral floor
        "cap": Scenario(
            name="cap", chart_name="cap", chart_params={"curvature": 0.8},
            gamma0_sides=all_sides, material=mat, first_kind=True),
        # saddle panel, clamped on one side
        "hypar_panel": Scenario(
            name="hypar_panel", chart_name="hypar", chart_params={"slope": 0.6},
            gamma0_sides=("y1min",), material=mat, first_kind=False),
    }


def scenario_from_config(cfg: dict) -> Scenario:
    """Build a scenario from a parsed config mapping.

    A ``base`` key starts from a library scenario; any other keys override
    its fields.  Material parameters come as four scalars (the derived k and
    Lambda are never inputs).
    """
    cfg = dict(cfg)
    base_name = cfg.pop("base", None)
    if base_name is not None:
        if base_name not in builtin_scenarios():
            raise ScenarioError(f"unknown base scenario '{base_name}'")
        base = builtin_scenarios()[base_name]
    else:
        base = None

    if "material" in cfg:
        m = cfg.pop("material")
        cfg["material"] = MaterialParams(lam=float(m["lam"]), mu=float(m["mu"]),
                                         theta=float(m["theta"]), rho=float(m["rho"]))
    for key in ("eps_list", "gamma0_sides"):
        if key in cfg:
            cfg[key] = tuple(cfg[key])
    if base is not None:
        return replace(base, **cfg)
    try:
        return Scenario(**cfg)
    except TypeError as exc:
        raise ScenarioError(f"bad scenario config: {exc}") from exc


# ---------------------------------------------------------------------------
# convergence experiment
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    """Per-thickness distances of the averaged 3D solutions to the 2D limit."""

    scenario: str
    kind: str
    sigma_min: float
    ref_seminorm: float
    rows: list = field(default_factory=list)     # (eps, distance, d3_norm)
    runtimes: list = field(default_factory=list)  # (eps, seconds); not deterministic
    k0_estimates: list = field(default_factory=list)  # (eps, empirical force bound)

    @property
    def distances(self):
        return [r[1] for r in self.rows]

    @property
    def ratios(self):
        d = self.distances
        return [d[i] / d[i + 1] for i in range(len(d) - 1)]

    def decreasing(self) -> bool:
        d = self.distances
        return all(d[i] > d[i + 1] for i in range(len(d) - 1))

    def d3_decreasing(self) -> bool:
        v = [r[2] for r in self.rows]
        return all(v[i] > v[i + 1] for i in range(len(v) - 1))


def compute_phi(scenario: Scenario, system2d: solver2d.MembraneSystem) -> np.ndarray:
    """phi^{ab} samples of the scenario's forces at the 2D quadrature points."""
    forces = scenario.forces()

    def F_ab(t, y, x3):
        return forces.at(t, y, x3)[:, :2, :2]

    def F_33(t, y, x3):
        return forces.at(t, y, x3)[:, 2, 2]

    return memory.phi_ab(F_ab, F_33, system2d.qp_pts, system2d.qp_a_ctr,
                         scenario.grid(), scenario.material)


def run_convergence(scenario: Scenario, progress: Optional[Callable[[str], None]] = None)\
        -> ConvergenceReport:
    """Reproduce the thin-limit convergence at desk scale.

    The 2D reference is solved once; every eps row reuses the same in-plane
    mesh so 3D averages and the 2D solution live in one discrete space.
    Raises `ClassificationMismatch` when the discrete kind contradicts the
    scenario's declaration.
    """
    say = progress or (lambda s: None)
    chart = scenario.chart()
    grid = scenario.grid()
    mesh2 = scenario.mesh2d()

    say(f"assembling 2D membrane system ({mesh2.n_elements} elements)")
    sys2 = solver2d.assemble_membrane(mesh2, chart, scenario.material)
    diag = solver2d.kernel_diagnostic(sys2)
    if diag.is_first_kind != scenario.first_kind:
        raise ClassificationMismatch(
            f"scenario '{scenario.name}' declared first_kind={scenario.first_kind} "
            f"but kernel diagnostic says '{diag.kind}' (sigma_min={diag.sigma_min:.3e})")

    say("solving 2D membrane evolution")
    phi = compute_phi(scenario, sys2)
    hist2 = solver2d.solve_membrane(sys2, phi, grid, delta=scenario.delta_override)
    ref = sys2.space_time_seminorm(hist2.states, grid.dt)

    report = ConvergenceReport(scenario=scenario.name, kind=diag.kind,
                               sigma_min=diag.sigma_min, ref_seminorm=ref)
    forces = scenario.forces(chart)
    for eps in scenario.eps_list:
        t0 = time.perf_counter()
        say(f"eps={eps}: assembling and solving 3D problem")
        mesh3 = fem.extrude_mesh(mesh2, scenario.layers, degree=scenario.thickness_degree)
        sys3 = solver3d.assemble_3d(mesh3, chart, eps, scenario.material)
        hist3 = solver3d.solve_3d(sys3, forces, grid)
        avg = solver3d.average_to_2d(hist3)
        dist = sys2.space_time_seminorm(avg - hist2.states, grid.dt)
        d3sq = [sys3.d3_sq_norm(u) for u in hist3.states]
        d3 = float(np.sqrt(np.trapezoid(d3sq, dx=grid.dt)))
        report.rows.append((float(eps), dist, d3))
        report.k0_estimates.append((float(eps), _admissible_bound(sys3, forces, grid.T)))
        report.runtimes.append((float(eps), time.perf_counter() - t0))
        say(f"eps={eps}: distance={dist:.6f} d3={d3:.6f}")
    return report


def _admissible_bound(sys3, forces, t: float, n_probe: int = 16) -> float:
    """Empirical constant of |L(eps)(t)(v)| <= K0 * strain-norm(v).

    Diagnostic only: the load functional of admissible forces is bounded by
    the scaled strain norm uniformly in eps; the recorded maximum over
    seeded probe fields tracks that constant.
    """
    L = solver3d.assemble_admissible_rhs(sys3, forces, t)
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(n_probe):
        v = rng.standard_normal(sys3.n_free)
        worst = max(worst, abs(float(L @ v)) / np.sqrt(sys3.strain_sq_norm(v)))
    return worst


def emit_report(report: ConvergenceReport, outdir) -> list:
    """Write report.csv / report.txt (deterministic) and timings.csv.

    The determinism contract covers report.csv and report.txt; wall-clock
    timings go to the separate timings.csv.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = outdir / "report.csv"
    rows = [[f"{r[0]:g}", r[1], r[2]] for r in report.rows]
    fem.write_csv(csv_path, ["eps", "seminorm_distance", "d3_norm"], rows)
    written.append(csv_path)

    txt_path = outdir / "report.txt"
    lines = [
        f"scenario: {report.scenario}",
        f"discrete kind: {report.kind} (sigma_min = {fem.format_float(report.sigma_min)})",
        f"reference |xi|_MT: {fem.format_float(report.ref_seminorm)}",
        "",
        f"{'eps':>8}  {'|u_bar - xi|_MT':>18}  {'|d3 u|_T':>14}",
    ]
    for eps, dist, d3 in report.rows:
        lines.append(f"{eps:>8g}  {fem.format_float(dist):>18}  {fem.format_float(d3):>14}")
    if report.ratios:
        lines.append("")
        for (e0, *_), (e1, *_), ratio in zip(report.rows, report.rows[1:], report.ratios):
            lines.append(f"decay ratio {e0:g} -> {e1:g}: {fem.format_float(ratio)}")
    if report.k0_estimates:
        lines.append("")
        for eps, k0 in report.k0_estimates:
            lines.append(f"empirical admissible-force bound K0(eps={eps:g}): "
                         f"{fem.format_float(k0)}")
    txt_path.write_text("\n".join(lines) + "\n")
    written.append(txt_path)

    tpath = outdir / "timings.csv"
    fem.write_csv(tpath, ["eps", "seconds"], [[f"{e:g}", s] for e, s in report.runtimes])
    written.append(tpath)
    return written


# ---------------------------------------------------------------------------
# geometry report
# ---------------------------------------------------------------------------

def geometry_report(chart_name: str, chart_params: dict, eps_list, outpath) -> Path:
    """Expansion-residual CSV: (eps, quantity, sup_residual, fitted_slope)."""
    chart = chart_from_config(chart_name, chart_params)
    rep = geometry.expansion_residuals(chart, list(eps_list))
    rows = []
    for name in geometry.EXPANSION_ORDERS:
        slope = rep["slopes"][name]
        for eps, res in rep["residuals"][name]:
            rows.append([f"{eps:g}", name, res,
                         "nan" if np.isnan(slope) else fem.format_float(slope)])
    outpath = Path(outpath)
    outpath.parent.mkdir(parents=True, exist_ok=True)
    fem.write_csv(outpath, ["eps", "quantity", "sup_residual", "fitted_slope"], rows)
    return outpath


# ---------------------------------------------------------------------------
# property-check suites
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _sample_charts():
    return [geometry.cylinder_chart(0.8, np.pi / 2, 1.0),
            geometry.hypar_chart(0.5),
            geometry.cap_chart(0.7)]


def _geometry_checks(rng) -> list:
    out = []
    for chart in _sample_charts():
        y, _ = geometry.default_sample_points(chart, 4, 1)
        sf = geometry.surface_frame(chart, y, need_third=True)
        prod = np.einsum("...as,...sb->...ab", sf.a_ctr, sf.a_cov)
        eye = np.broadcast_to(np.eye(2), prod.shape)
        out.append(CheckResult(
            f"geometry.metric_inverse[{chart.name}]",
            bool(np.max(np.abs(prod - eye)) < 1e-12),
            f"max |a^ctr a_cov - I| = {np.max(np.abs(prod - eye)):.2e}"))
        sym = max(np.max(np.abs(sf.a_cov - np.swapaxes(sf.a_cov, -1, -2))),
                  np.max(np.abs(sf.b_cov - np.swapaxes(sf.b_cov, -1, -2))),
                  np.max(np.abs(sf.christoffel - np.swapaxes(sf.christoffel, -1, -2))))
        out.append(CheckResult(f"geometry.symmetries[{chart.name}]", bool(sym == 0.0),
                               f"max asymmetry {sym:.2e}"))
        vol = geometry.volume_metrics(chart, 0.1, y, np.full(y.shape[:-1], 0.7))
        z1 = np.max(np.abs(vol.gamma3d[..., 2, :, 2]))
        z2 = np.max(np.abs(vol.gamma3d[..., :, 2, 2]))
        sym3 = np.max(np.abs(vol.gamma3d - np.swapaxes(vol.gamma3d, -1, -2)))
        out.append(CheckResult(f"geometry.exact_zeros[{chart.name}]",
                               bool(z1 == 0.0 and z2 == 0.0 and sym3 == 0.0),
                               f"zeros {max(z1, z2):.2e}, sym {sym3:.2e}"))
        gmin = min(float(np.min(geometry.volume_metrics(
            chart, e, y, np.full(y.shape[:-1], x3)).det_g))
            for e in (0.2, 0.1, 0.05) for x3 in (-1.0, 0.0, 1.0))
        out.append(CheckResult(f"geometry.metric_positive[{chart.name}]", gmin > 0.0,
                               f"min det g = {gmin:.3e}"))
        # closed-form derivatives against central differences of the chart
        fd = geometry.MidsurfaceChart(chart.name + "_fd", chart.point,
                                      domain=chart.domain, fd_step=1e-6)
        sf_fd = geometry.surface_frame(fd, y)
        rel = np.max(np.abs(sf.b_cov - sf_fd.b_cov)) / max(np.max(np.abs(sf.b_cov)), 1.0)
        out.append(CheckResult(f"geometry.fd_agreement[{chart.name}]", bool(rel < 1e-6),
                               f"rel curvature mismatch {rel:.2e}"))
    flat = geometry.plane_chart()
    rep = geometry.expansion_residuals(flat, [0.1, 0.05])
    worst = max(max(r for _, r in rows) for rows in rep["residuals"].values())
    out.append(CheckResult("geometry.flat_residuals_zero", bool(worst < 1e-14),
                           f"max residual {worst:.2e}"))
    return out


def _material_checks(rng) -> list:
    from .material import (ellipticity_estimate, extend_surface_metric,
                           membrane_tensors, random_spd_metric, tensor3d_elastic,
                           tensor3d_limits, tensor3d_viscous)
    out = []
    params = MaterialParams(lam=1.2, mu=0.8, theta=0.9, rho=1.1)
    worst_sym = 0.0
    worst_min = np.inf
    for _ in range(50):
        g = random_spd_metric(rng, 3, 100.0)
        for T in (tensor3d_elastic(g, params), tensor3d_viscous(g, params)):
            worst_sym = max(worst_sym,
                            np.max(np.abs(T - np.einsum("ijkl->jikl", T))),
                            np.max(np.abs(T - np.einsum("ijkl->ijlk", T))),
                            np.max(np.abs(T - np.einsum("ijkl->klij", T))))
        t = rng.standard_normal((20, 3, 3))
        t = 0.5 * (t + np.swapaxes(t, -1, -2))
        t /= np.linalg.norm(t, axis=(-2, -1), keepdims=True)
        vals = np.einsum("ijkl,nkl,nij->n", tensor3d_elastic(g, params), t, t)
        worst_min = min(worst_min, float(vals.min()))
    out.append(CheckResult("material.full_symmetries", worst_sym == 0.0,
                           f"max symmetry defect {worst_sym:.2e}"))
    out.append(CheckResult("material.ellipticity_uniform", worst_min > 0.0,
                           f"min contraction over metrics {worst_min:.3e}"))

    # eps-uniform ellipticity across scaled metrics of the cylinder
    chart = geometry.cylinder_chart(0.6, 2 * np.pi / 3, 1.0)
    y, _ = geometry.default_sample_points(chart, 4, 1)
    mins = []
    for eps in (0.2, 0.1, 0.05):
        vol = geometry.volume_metrics(chart, eps, y, np.full(y.shape[:-1], 0.9))
        A = tensor3d_elastic(vol.g_ctr, params)
        t = rng.standard_normal((1000, 3, 3))
        t = 0.5 * (t + np.swapaxes(t, -1, -2))
        t /= np.linalg.norm(t, axis=(-2, -1), keepdims=True)
        mins.append(float(np.einsum("pijkl,nkl,nij->pn", A, t, t).min()))
    out.append(CheckResult("material.ellipticity_eps_uniform", min(mins) > 0.0,
                           f"single constant {min(mins):.3e} over eps sweep"))

    a2 = random_spd_metric(rng, 2, 10.0)
    A0, B0 = tensor3d_limits(a2, params)
    dA = np.max(np.abs(A0 - tensor3d_elastic(extend_surface_metric(a2), params)))
    dB = np.max(np.abs(B0 - tensor3d_viscous(extend_surface_metric(a2), params)))
    out.append(CheckResult("material.limit_consistency", max(dA, dB) < 1e-12,
                           f"componentwise gap {max(dA, dB):.2e}"))
    mt = membrane_tensors(a2, params)
    psd_a = ellipticity_estimate(mt.a, 500, rng, require_positive=False)
    psd_b = ellipticity_estimate(mt.b, 500, rng, require_positive=False)
    psd_c = ellipticity_estimate(mt.c, 500, rng, require_positive=False)
    out.append(CheckResult("material.membrane_psd",
                           psd_a > 0 and psd_b > 0 and psd_c >= -1e-15,
                           f"minima a={psd_a:.3e} b={psd_b:.3e} c={psd_c:.3e}"))
    return out


def _kinematics_checks(rng) -> list:
    from .kinematics import gamma_ab, scaled_strains
    out = []
    flat = geometry.plane_chart()
    # flat eps-free reduction: x3-independent v with v3 = 0
    y = rng.uniform(0.1, 0.9, (40, 2))
    vol = geometry.volume_metrics(flat, 0.37, y, np.zeros(len(y)))
    surf = geometry.surface_frame(flat, y)
    c1, c2, c3, c4 = rng.standard_normal(4)
    vals = np.stack([c1 * y[:, 0] + c2 * y[:, 1], c3 * y[:, 0] * y[:, 1], np.zeros(len(y))], -1)
    g2 = np.zeros((len(y), 2, 3))
    g2[:, 0, 0] = c1
    g2[:, 1, 0] = c2
    g2[:, 0, 1] = c3 * y[:, 1]
    g2[:, 1, 1] = c3 * y[:, 0]
    g3 = np.zeros((len(y), 3, 3))
    g3[:, :2, :] = g2
    e = scaled_strains(vals, g3, 0.37, vol)
    gam = gamma_ab(vals, g2, surf)
    gap = np.max(np.abs(e[:, :2, :2] - gam))
    out.append(CheckResult("kinematics.flat_reduction", gap < 1e-12,
                           f"max |e_ab - gamma_ab| = {gap:.2e}"))
    sym = np.max(np.abs(e - np.swapaxes(e, -1, -2)))
    out.append(CheckResult("kinematics.strain_symmetry", sym == 0.0, f"{sym:.2e}"))

    # averaging bound on random nodal fields: |v_bar|_0 <= |v|_0 / sqrt(2)
    mesh2 = fem.rect_mesh2d(flat.domain, 4, 4, gamma0_sides=())
    mesh3 = fem.extrude_mesh(mesh2, 3, degree=2)
    sys3 = _plain_l2_data(mesh3)
    ok = True
    worst = 0.0
    for _ in range(200):
        v = rng.standard_normal(3 * mesh3.n_nodes)
        lhs, rhs = _average_bound_pair(mesh3, sys3, v)
        worst = max(worst, lhs / rhs)
        ok = ok and lhs <= rhs / np.sqrt(2.0) * (1 + 1e-12)
    out.append(CheckResult("kinematics.average_bound", ok,
                           f"max |v_bar|/|v| = {worst:.4f} (bound 0.7071)"))

    # commutation d_a (v_bar) = (d_a v)_bar for an analytic field
    f = lambda y_, x3: np.sin(y_[..., 0]) * (1 + 0.5 * x3**2) * np.cos(y_[..., 1])
    yq = rng.uniform(0.2, 0.8, (20, 2))
    h = 1e-6
    from .kinematics import transversal_average
    davg = (transversal_average(lambda x3: f(yq + [h, 0], x3))
            - transversal_average(lambda x3: f(yq - [h, 0], x3))) / (2 * h)
    avgd = transversal_average(lambda x3: (f(yq + [h, 0], x3) - f(yq - [h, 0], x3)) / (2 * h))
    gap = np.max(np.abs(davg - avgd))
    out.append(CheckResult("kinematics.average_commutes", gap < 1e-6, f"{gap:.2e}"))

    out.extend(_korn_check(rng))
    return out


def _plain_l2_data(mesh3: fem.Mesh3D):
    """Quadrature data for plain L2 norms of nodal 3D fields."""
    tri_pts, tri_w = fem.tri_quadrature()
    gz, gw = np.polynomial.legendre.leggauss(3)
    N2, _ = fem.p2_tri_basis(tri_pts)
    M1, _ = fem.line_basis(gz, mesh3.degree)
    detJ, _ = fem.tri_affine_data(mesh3.mesh2d)
    return tri_pts, tri_w, gz, gw, N2, M1, detJ


def _average_bound_pair(mesh3: fem.Mesh3D, data, v_full: np.ndarray):
    """(|v_bar|_{0,omega}, |v|_{0,Omega}) for a full nodal vector."""
    from .kinematics import thickness_average_weights
    tri_pts, tri_w, gz, gw, N2, M1, detJ = data
    mesh2 = mesh3.mesh2d
    nlev = mesh3.n_levels
    vals3 = v_full.reshape(mesh2.n_nodes, nlev, 3)
    _, wts = thickness_average_weights(mesh3.n_layers, mesh3.degree)
    vbar = np.einsum("l,nlc->nc", wts, vals3)

    h3 = 2.0 / mesh3.n_layers
    lhs_sq = rhs_sq = 0.0
    for e in range(mesh2.n_elements):
        nodes2 = mesh2.tris[e]
        vb_e = vbar[nodes2]                      # (6, 3)
        vq = np.einsum("qa,ac->qc", N2, vb_e)
        lhs_sq += float(np.sum(tri_w * detJ[e] * np.sum(vq * vq, axis=1)))
        for lay in range(mesh3.n_layers):
            lvl0 = mesh3.degree * lay
            vals_e = vals3[nodes2][:, lvl0:lvl0 + mesh3.degree + 1, :]
            v3q = np.einsum("qa,zb,abc->qzc", N2, M1, vals_e)
            w = tri_w[:, None] * gw[None, :] * (h3 / 2.0) * detJ[e]
            rhs_sq += float(np.sum(w[..., None] * v3q * v3q))
    return np.sqrt(lhs_sq), np.sqrt(rhs_sq)


def _korn_check(rng, n_fields: int = 100) -> list:
    """Empirical Korn-type bound: eps*|v|_1 / strain-norm uniform over eps.

    A single constant exists iff the per-eps maxima do not grow as eps
    shrinks (they typically decay: the 1/eps strain terms dominate generic
    fields).  20% slack absorbs sampling noise.
    """
    scen = builtin_scenarios()["cylinder_panel"]
    chart = scen.chart()
    mesh2 = fem.rect_mesh2d(chart.domain, 4, 4, gamma0_sides=scen.gamma0_sides)
    mesh3 = fem.extrude_mesh(mesh2, 2, degree=2)
    consts = []
    for eps in (0.2, 0.1, 0.05):
        sys3 = solver3d.assemble_3d(mesh3, chart, eps, scen.material, with_h1_ops=True)
        worst = 0.0
        for _ in range(n_fields):
            v = rng.standard_normal(sys3.n_free)
            ratio = eps * np.sqrt(sys3.h1_sq_norm(v)) / np.sqrt(sys3.strain_sq_norm(v))
            worst = max(worst, ratio)
        consts.append(worst)
    no_growth = all(consts[i + 1] <= 1.2 * consts[i] for i in range(len(consts) - 1))
    ok = bool(np.isfinite(max(consts)) and no_growth)
    return [CheckResult("kinematics.korn_uniform", ok,
                        f"single C = {max(consts):.4f}; per-eps maxima "
                        + ", ".join(f"{c:.4f}" for c in consts))]


def _memory_checks(rng) -> list:
    out = []
    worst = 0.0
    for _ in range(100):
        k = float(np.exp(rng.uniform(np.log(1e-4), np.log(50.0))))
        dt = float(np.exp(rng.uniform(np.log(1e-2), np.log(2.0))))
        n = int(rng.integers(4, 40))
        f = rng.standard_normal(n + 1)
        rec = memory.convolve_samples(f, k, dt)
        direct = memory.direct_convolution(f, k, dt)
        scale = max(np.max(np.abs(direct)), 1e-30)
        worst = max(worst, float(np.max(np.abs(rec - direct)) / scale))
    out.append(CheckResult("memory.recursion_exact", worst < 1e-12,
                           f"max relative gap {worst:.2e}"))

    f = rng.standard_normal(33)
    k, dt = 1.7, 0.05
    full = memory.convolve_samples(f, k, dt)
    acc = memory.MemoryAccumulator(k)
    acc.start(f[0])
    for n in range(16):
        acc.step(f[n + 1], dt)
    mid = acc.state.copy()
    for n in range(16, 32):
        acc.step(f[n + 1], dt)
    gap = max(abs(mid - full[16]), abs(acc.state - full[32]))
    out.append(CheckResult("memory.semigroup", gap < 1e-12, f"restart gap {gap:.2e}"))

    f = np.abs(rng.standard_normal(65)) + 0.1
    H = memory.convolve_samples(f, 2.0, 0.02)
    ok = bool(np.all(H >= 0.0) and np.max(H) <= np.max(f) / 2.0 + 1e-12)
    out.append(CheckResult("memory.monotone_bound", ok,
                           f"max H {np.max(H):.4f} vs sup f / k {np.max(f)/2:.4f}"))

    out.extend(_closure_residual_checks())
    return out


def _closure_residual_checks(N: int = 2048) -> list:
    """ODE residuals of both transverse strain closures, central differences.

    T is chosen so the second-order difference truncation sits well below
    the 1e-8 relative tolerance at N = 2048.
    """
    out = []
    params = MaterialParams(lam=1.0, mu=1.0, theta=1.0, rho=2.0)
    grid = TimeGrid(T=0.125, N=N)
    t = grid.times
    F = 0.3 + 0.5 * np.sin(2.0 * t) - 0.3 * np.cos(2.0 * t)
    e = memory.shear_closure(F, grid, params)
    edot = np.gradient(e, grid.dt, edge_order=2)
    res = 2.0 * params.mu * e + params.rho * edot - F
    rel = np.max(np.abs(res[1:-1])) / np.max(np.abs(F))
    out.append(CheckResult("memory.shear_ode_residual", rel < 1e-8, f"relative {rel:.2e}"))

    F33 = 0.2 + 0.4 * np.sin(2.0 * t)
    tr = 0.3 * np.cos(1.5 * t) - 0.3
    e33 = memory.normal_closure(F33, tr, grid, params)
    e33dot = np.gradient(e33, grid.dt, edge_order=2)
    trdot = np.gradient(tr, grid.dt, edge_order=2)
    lam, mu, th, rho = params.lam, params.mu, params.theta, params.rho
    res = lam * tr + (lam + 2 * mu) * e33 + th * trdot + (th + rho) * e33dot - F33
    rel = np.max(np.abs(res[1:-1])) / np.max(np.abs(F33))
    out.append(CheckResult("memory.normal_ode_residual", rel < 1e-8, f"relative {rel:.2e}"))
    return out


def _solver2d_checks(rng) -> list:
    out = []
    scen = builtin_scenarios()["cylinder_panel"]
    chart = scen.chart()
    mesh = fem.rect_mesh2d(chart.domain, 4, 4, gamma0_sides=scen.gamma0_sides)
    sys2 = solver2d.assemble_membrane(mesh, chart, scen.material)
    diag = solver2d.kernel_diagnostic(sys2)
    out.append(CheckResult("solver2d.first_kind_cylinder", diag.is_first_kind,
                           f"sigma_min {diag.sigma_min:.3e}"))
    plate = builtin_scenarios()["plate"]
    mesh_p = fem.rect_mesh2d(plate.chart().domain, 4, 4, gamma0_sides=plate.gamma0_sides)
    sys_p = solver2d.assemble_membrane(mesh_p, plate.chart(), plate.material)
    out.append(CheckResult("solver2d.plate_degenerate",
                           not solver2d.kernel_diagnostic(sys_p).is_first_kind,
                           f"sigma_min {sys_p.diagnostic.sigma_min:.3e}"))

    x = rng.standard_normal((20, sys2.n_free))
    psd = float(min(np.einsum("ni,ni->n", x, (sys2.K_a @ x.T).T).min(),
                    np.einsum("ni,ni->n", x, (sys2.K_b @ x.T).T).min()))
    out.append(CheckResult("solver2d.gram_psd", psd > -1e-10, f"min quad form {psd:.2e}"))

    grid = TimeGrid(T=0.5, N=8)
    phi1 = rng.standard_normal((grid.N + 1, sys2.n_qp, 2, 2))
    phi1 = 0.5 * (phi1 + np.swapaxes(phi1, -1, -2))
    phi2 = rng.standard_normal((grid.N + 1, sys2.n_qp, 2, 2))
    phi2 = 0.5 * (phi2 + np.swapaxes(phi2, -1, -2))
    a, b = 0.7, -1.3
    h1 = solver2d.solve_membrane(sys2, phi1, grid)
    h2 = solver2d.solve_membrane(sys2, phi2, grid)
    h12 = solver2d.solve_membrane(sys2, a * phi1 + b * phi2, grid)
    gap = np.max(np.abs(h12.states - a * h1.states - b * h2.states))
    scale = max(np.max(np.abs(h12.states)), 1.0)
    out.append(CheckResult("solver2d.linearity", gap < 1e-10 * scale, f"gap {gap:.2e}"))

    xi0 = rng.standard_normal(sys2.n_free)
    hist = solver2d.solve_membrane(sys2, None, grid, xi0=xi0, include_memory=False)
    E = hist.energies()
    out.append(CheckResult("solver2d.dissipation_no_memory",
                           bool(np.all(np.diff(E) <= 1e-12 * E[0])),
                           f"max energy increment {np.max(np.diff(E)):.2e}"))
    hist_m = solver2d.solve_membrane(sys2, None, grid, xi0=xi0, include_memory=True)
    Em = hist_m.energies()
    out.append(CheckResult("solver2d.dissipation_first_step_memory", Em[1] <= Em[0],
                           f"E1 - E0 = {Em[1] - Em[0]:.3e}"))

    asym = max(float(abs(sys2.K_a - sys2.K_a.T).max()),
               float(abs(sys2.K_b - sys2.K_b.T).max()),
               float(abs(sys2.K_c - sys2.K_c.T).max()))
    out.append(CheckResult("solver2d.symmetry_after_elimination", asym < 1e-12,
                           f"max asymmetry {asym:.2e}"))

    rep1 = solver2d.solve_membrane(sys2, phi1, grid)
    rep2 = solver2d.solve_membrane(sys2, phi1, grid)
    identical = bool(np.array_equal(rep1.states, rep2.states))
    out.append(CheckResult("solver2d.reproducible", identical,
                           "bit-identical repeat solve" if identical else "states differ"))
    return out


def _solver3d_checks(rng) -> list:
    out = []
    scen = builtin_scenarios()["cylinder_panel"]
    chart = scen.chart()
    mesh2 = fem.rect_mesh2d(chart.domain, 4, 4, gamma0_sides=scen.gamma0_sides)
    mesh3 = fem.extrude_mesh(mesh2, 2, degree=2)
    grid = TimeGrid(T=0.5, N=8)

    sysA = solver3d.assemble_3d(mesh3, chart, 0.1, scen.material)
    w = rng.standard_normal(sysA.n_free)
    ev = sysA.strains_at_qp(w)
    e_full = np.zeros((sysA.n_qp, 3, 3))
    for kk, (i, j) in enumerate(solver3d.VOIGT):
        e_full[:, i, j] = ev[:, kk]
        e_full[:, j, i] = ev[:, kk]
    F = np.einsum("qijkl,qkl->qij", sysA.A_qp, e_full)
    gap = np.max(np.abs(solver3d.strain_load(sysA, F) - sysA.K @ w))
    scale = max(np.max(np.abs(sysA.K @ w)), 1.0)
    out.append(CheckResult("solver3d.rhs_stiffness_identity", gap < 1e-12 * scale,
                           f"gap {gap:.2e}"))

    u0 = rng.standard_normal(sysA.n_free)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hist = solver3d.solve_3d(sysA, None, grid, u0=u0)
    E = hist.energies()
    out.append(CheckResult("solver3d.dissipation",
                           bool(np.all(np.diff(E) <= 1e-14 * max(E[0], 1.0))),
                           f"max increment {np.max(np.diff(E)):.2e}"))

    norm01 = float(abs(sysA.K).max())
    sysB = solver3d.assemble_3d(mesh3, chart, 0.05, scen.material)
    ratio = float(abs(sysB.K).max()) / norm01
    out.append(CheckResult("solver3d.stiffness_eps_scaling", 2.0 <= ratio <= 6.0,
                           f"norm ratio eps->eps/2: {ratio:.2f}"))

    forces = scen.forces(chart)
    d3s, shear_gaps = [], []
    for eps in (0.2, 0.1, 0.05):
        sysE = solver3d.assemble_3d(mesh3, chart, eps, scen.material)
        h = solver3d.solve_3d(sysE, forces, grid)
        d3 = np.sqrt(np.trapezoid([sysE.d3_sq_norm(u) for u in h.states], dx=grid.dt))
        d3s.append(float(d3))
        shear_gaps.append(_shear_limit_gap(sysE, h, forces, grid, scen.material))
    out.append(CheckResult("solver3d.d3_decay",
                           bool(d3s[0] > d3s[1] > d3s[2]),
                           "d3 norms " + ", ".join(f"{v:.4f}" for v in d3s)))
    out.append(CheckResult("solver3d.shear_limit_oracle",
                           shear_gaps[-1] < shear_gaps[0],
                           "closure gaps " + ", ".join(f"{v:.4f}" for v in shear_gaps)))
    return out


def _shear_limit_gap(system, history, forces, grid, params) -> float:
    """L2-in-time gap between computed e_{a||3} and the shear closure at
    interior quadrature points."""
    qp = np.flatnonzero(np.abs(system.qp_x3) < 0.9)
    surf = geometry.surface_frame(system.chart, system.qp_y[qp])
    gap_sq = 0.0
    scale_sq = 0.0
    Fsamp = np.array([forces.at(t, system.qp_y[qp], system.qp_x3[qp])
                      for t in grid.times])
    contracted = np.einsum("qas,nqs->nqa", surf.a_cov, Fsamp[..., :2, 2])
    pred = memory.shear_closure(contracted, grid, params)
    for n, t in enumerate(grid.times):
        ev = system.strains_at_qp(history.states[n])[qp]
        got = ev[:, 4:6]                         # (q, [e13, e23])
        gap_sq += np.sum((got - pred[n]) ** 2)
        scale_sq += np.sum(pred[n] ** 2) + 1e-30
    return float(np.sqrt(gap_sq / scale_sq))


PROPERTY_SUITES = {
    "geometry": _geometry_checks,
    "material": _material_checks,
    "kinematics": _kinematics_checks,
    "memory": _memory_checks,
    "solver2d": _solver2d_checks,
    "solver3d": _solver3d_checks,
}


def run_properties(suite: str, seed: int = 0) -> list:
    """Execute one module's invariant checks with a fixed seed."""
    if suite not in PROPERTY_SUITES:
        raise KeyError(f"unknown suite '{suite}'; available: {sorted(PROPERTY_SUITES)}")
    rng = np.random.default_rng(seed)
    return PROPERTY_SUITES[suite](rng)
