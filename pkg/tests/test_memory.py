import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vshell.material import MaterialParams
from vshell.memory import (MemoryAccumulator, TimeGrid, conv_coefficients,
                           conv_step, convolve_samples, direct_convolution,
                           normal_closure, phi_ab, shear_closure)


def test_time_grid():
    g = TimeGrid(T=2.0, N=8)
    assert g.dt == pytest.approx(0.25)
    assert g.times[0] == 0.0 and g.times[-1] == 2.0
    with pytest.raises(ValueError):
        TimeGrid(T=0.0, N=4)
    with pytest.raises(ValueError):
        TimeGrid(T=1.0, N=0)


def test_conv_zero_input():
    H = convolve_samples(np.zeros(17), 2.0, 0.1)
    assert np.all(H == 0.0)


def test_conv_constant_closed_form():
    # f = 1, k = 1: H(1) = 1 - exp(-1); constants are piecewise linear, so
    # the recursion is exact regardless of N
    for N in (1, 4, 64):
        g = TimeGrid(T=1.0, N=N)
        H = convolve_samples(np.ones(N + 1), 1.0, g.dt)
        assert H[-1] == pytest.approx(1.0 - np.exp(-1.0), abs=1e-14)


def test_conv_step_invalid_args():
    with pytest.raises(ValueError):
        conv_step(0.0, 1.0, 1.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        conv_step(0.0, 1.0, 1.0, 1.0, 0.0)


def test_overflow_guard():
    # k dt far beyond the exp underflow threshold: increments stay finite
    # and reduce to the steady-state weights
    decay, c0, c1 = conv_coefficients(10.0, 100.0)
    assert decay == 0.0
    assert np.isfinite(c0) and np.isfinite(c1)
    H1 = conv_step(5.0, 1.0, 1.0, 10.0, 100.0)
    assert H1 == pytest.approx(0.1, rel=1e-6)   # -> sup f / k


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_recursion_exact_piecewise_linear(seed):
    """Recursive update vs direct segment-sum oracle for random samples,
    rates and steps spanning k dt in [1e-6, 100]."""
    rng = np.random.default_rng(seed)
    k = float(np.exp(rng.uniform(np.log(1e-4), np.log(100.0))))
    dt = float(np.exp(rng.uniform(np.log(1e-2), np.log(1.0))))
    n = int(rng.integers(2, 24))
    f = rng.standard_normal(n + 1)
    rec = convolve_samples(f, k, dt)
    direct = direct_convolution(f, k, dt)
    scale = max(np.max(np.abs(direct)), 1e-12)
    assert np.max(np.abs(rec - direct)) <= 1e-12 * max(scale, 1.0)


def test_small_kdt_series_branch():
    # series and closed-form branches agree through the switchover
    for x in (0.9e-3, 1.1e-3):
        k, dt = x / 0.01, 0.01
        d0, c0a, c1a = conv_coefficients(k, dt)
        # reference by 200-point Gauss quadrature of the kernel integral
        nodes, weights = np.polynomial.legendre.leggauss(200)
        u = 0.5 * dt * (nodes + 1.0)
        w = 0.5 * dt * weights
        ker = np.exp(-k * (dt - u))
        c0_ref = np.sum(w * ker * (1.0 - u / dt))
        c1_ref = np.sum(w * ker * (u / dt))
        assert c0a == pytest.approx(c0_ref, rel=1e-12)
        assert c1a == pytest.approx(c1_ref, rel=1e-12)


def test_semigroup_restart(rng):
    f = rng.standard_normal(41)
    k, dt = 0.8, 0.05
    full = convolve_samples(f, k, dt)
    acc = MemoryAccumulator(k)
    acc.start(f[0])
    for n in range(20):
        acc.step(f[n + 1], dt)
    carried = acc.state.copy()
    assert carried == pytest.approx(full[20], abs=1e-12)
    for n in range(20, 40):
        acc.step(f[n + 1], dt)
    assert acc.state == pytest.approx(full[40], abs=1e-12)


def test_accumulator_requires_start():
    acc = MemoryAccumulator(1.0)
    with pytest.raises(RuntimeError):
        acc.step(1.0, 0.1)


def test_monotone_bound(rng):
    f = np.abs(rng.standard_normal(101)) + 0.05
    k, dt = 3.0, 0.04
    H = convolve_samples(f, k, dt)
    assert np.all(H >= 0.0)
    assert np.max(H) <= np.max(f) / k + 1e-14


# ---------------------------------------------------------------------------
# strain closures
# ---------------------------------------------------------------------------

def test_shear_closure_zero():
    p = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=2.0)
    g = TimeGrid(T=1.0, N=32)
    assert np.all(shear_closure(np.zeros(33), g, p) == 0.0)


def test_shear_closure_spot_value():
    # rho = 2, mu = 1, forcing 1: e(1) = (1 - exp(-1))/2 = 0.3160602...
    p = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=2.0)
    g = TimeGrid(T=1.0, N=64)
    e = shear_closure(np.ones(g.N + 1), g, p)
    assert e[-1] == pytest.approx(0.3160602794142788, abs=1e-9)


def test_normal_closure_zero():
    p = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=1.0)
    g = TimeGrid(T=1.0, N=16)
    out = normal_closure(np.zeros(17), np.zeros(17), g, p)
    assert np.all(out == 0.0)


def test_normal_closure_spot_value():
    # lam = 0, mu = 1, theta = rho = 1 (k = 1), F33 = 2, zero trace:
    # e33(1) = 1 - exp(-1) = 0.6321205...
    p = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=1.0)
    g = TimeGrid(T=1.0, N=64)
    e33 = normal_closure(2.0 * np.ones(g.N + 1), np.zeros(g.N + 1), g, p)
    assert e33[-1] == pytest.approx(0.6321205588285577, abs=1e-9)


def _central_residual(vals, dt):
    return np.gradient(vals, dt, edge_order=2)


def test_shear_closure_ode_residual():
    p = MaterialParams(lam=1.0, mu=1.0, theta=1.0, rho=2.0)
    g = TimeGrid(T=0.125, N=2048)
    t = g.times
    F = 0.4 + 0.5 * np.sin(2.0 * t) - 0.2 * np.cos(1.5 * t)
    e = shear_closure(F, g, p)
    res = 2 * p.mu * e + p.rho * _central_residual(e, g.dt) - F
    assert np.max(np.abs(res[1:-1])) / np.max(np.abs(F)) < 1e-8


def test_normal_closure_ode_residual(rng):
    p = MaterialParams(lam=1.3, mu=0.9, theta=1.1, rho=0.8)
    g = TimeGrid(T=0.125, N=2048)
    t = g.times
    F33 = 0.3 + 0.4 * np.sin(2.1 * t)
    tr = 0.2 * np.cos(1.7 * t) - 0.2
    e33 = normal_closure(F33, tr, g, p)
    res = (p.lam * tr + (p.lam + 2 * p.mu) * e33
           + p.theta * _central_residual(tr, g.dt)
           + (p.theta + p.rho) * _central_residual(e33, g.dt) - F33)
    assert np.max(np.abs(res[1:-1])) / np.max(np.abs(F33)) < 1e-8


# ---------------------------------------------------------------------------
# force functional
# ---------------------------------------------------------------------------

def test_phi_inplane_only():
    p = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=1.0)
    g = TimeGrid(T=1.0, N=8)
    y = np.array([[0.1, 0.2], [0.4, 0.6]])
    a_ctr = np.stack([np.eye(2)] * 2)
    phi = phi_ab(lambda t, yy, x3: np.broadcast_to(np.eye(2), (2, 2, 2)).copy(),
                 lambda t, yy, x3: np.zeros(2), y, a_ctr, g, p)
    assert np.allclose(phi, np.broadcast_to(2.0 * np.eye(2), phi.shape))


def test_phi_memory_free_at_t0():
    p = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=1.0)
    g = TimeGrid(T=1.0, N=8)
    y = np.array([[0.3, 0.3]])
    a_ctr = np.eye(2)[None]
    phi = phi_ab(lambda t, yy, x3: np.zeros((1, 2, 2)),
                 lambda t, yy, x3: np.ones(1), y, a_ctr, g, p)
    # t = 0: only the instantaneous transverse coupling survives
    assert np.allclose(phi[0, 0], -np.eye(2), atol=1e-14)


def test_phi_transverse_closed_form():
    """Constant F33 with lam = 0: phi(t) = -exp(-t) a^{ab}.

    The memory term carries the sign that reduces, for constant-in-time
    data, to the static transverse coefficient -lam/(lam + 2 mu); at lam = 0
    the forcing therefore relaxes to zero.
    """
    p = MaterialParams(lam=0.0, mu=1.0, theta=1.0, rho=1.0)   # k = 1, Lambda = -1
    g = TimeGrid(T=2.0, N=256)
    y = np.array([[0.3, 0.3]])
    a_ctr = np.eye(2)[None]
    phi = phi_ab(lambda t, yy, x3: np.zeros((1, 2, 2)),
                 lambda t, yy, x3: np.ones(1), y, a_ctr, g, p)
    ts = g.times
    expect = -np.exp(-ts)
    got = phi[:, 0, 0, 0]
    assert np.max(np.abs(got - expect)) < 1e-4
    assert abs(got[-1]) < 0.15                # relaxing toward zero
    assert np.max(np.abs(phi[:, 0, 0, 1])) < 1e-14


def test_phi_steady_state_matches_static_coefficient():
    """Long-time phi for constant data equals the purely elastic transverse
    reduction int (F^{ab} - lam/(lam+2mu) F33 a^{ab}) dx3."""
    p = MaterialParams(lam=1.7, mu=0.6, theta=0.9, rho=1.4)
    g = TimeGrid(T=60.0, N=4096)
    y = np.array([[0.1, 0.9]])
    a_ctr = (np.eye(2) * np.array([1.3, 0.8]))[None]
    Fab = np.array([[0.7, 0.2], [0.2, -0.4]])
    phi = phi_ab(lambda t, yy, x3: Fab[None],
                 lambda t, yy, x3: np.full(1, 2.5), y, a_ctr, g, p)
    static = 2.0 * (Fab - p.lam / (p.lam + 2 * p.mu) * 2.5 * a_ctr[0])
    assert np.max(np.abs(phi[-1, 0] - static)) < 1e-6


def test_convolution_csv_dump(tmp_path, rng):
    f = rng.standard_normal(9)
    path = tmp_path / "conv.csv"
    from vshell.memory import dump_convolution_csv
    dump_convolution_csv(path, f, 1.5, 0.1)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,H_recursive,H_direct"
    assert len(lines) == 10
    rec = [float(l.split(",")[1]) for l in lines[1:]]
    direct = [float(l.split(",")[2]) for l in lines[1:]]
    assert np.allclose(rec, direct, atol=1e-12)
