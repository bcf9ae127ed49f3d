"""Exponential-kernel convolution machinery and the closed-form transverse
strain closures of the membrane limit.

Every convolution here has the form H(t) = int_0^t exp(-k (t-s)) f(s) ds
with a single decay rate k > 0.  The update is an exponential integrator
that is *exact* when f is piecewise linear on the time grid:

    H_{n+1} = exp(-k dt) H_n + c0(k, dt) f_n + c1(k, dt) f_{n+1}

so the state per channel is a single scalar; no history is stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .material import MaterialParams


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_N = T."""

    T: float
    N: int

    def __post_init__(self):
        if self.T <= 0.0:
            raise ValueError("T must be > 0")
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)


def conv_coefficients(k: float, dt: float):
    """(decay, c0, c1) of the exact piecewise-linear exponential update.

    ``decay = exp(-k dt)`` multiplies the carried state; ``c0``/``c1`` weight
    the segment's start/end samples.  A series branch avoids the cancellation
    in (k dt - 1 + exp(-k dt)) for small k dt; for k dt beyond the exp
    underflow threshold the formulas degrade gracefully to the steady-state
    weights without overflow (only exp(-k dt) is ever evaluated).
    """
    if k <= 0.0 or dt <= 0.0:
        raise ValueError("k and dt must be positive")
    x = k * dt
    decay = np.exp(-x) if x < 700.0 else 0.0
    if x < 1e-3:
        # c1/dt = 1/2 - x/6 + x^2/24 - x^3/120 + x^4/720
        c1 = dt * (0.5 - x / 6.0 + x**2 / 24.0 - x**3 / 120.0 + x**4 / 720.0)
        # c0/dt = 1/2 - x/3 + x^2/8 - x^3/30 + x^4/144
        c0 = dt * (0.5 - x / 3.0 + x**2 / 8.0 - x**3 / 30.0 + x**4 / 144.0)
    else:
        w0 = (1.0 - decay) / k
        c1 = (x - 1.0 + decay) / (k * k * dt)
        c0 = w0 - c1
    return decay, c0, c1


def conv_step(H_n, f_n, f_np1, k: float, dt: float):
    """One exact exponential-integrator step of the kernel convolution.

    Scalar or ndarray channels; exact for globally piecewise-linear f.
    """
    decay, c0, c1 = conv_coefficients(k, dt)
    return decay * H_n + c0 * f_n + c1 * f_np1


def convolve_samples(samples: np.ndarray, k: float, dt: float) -> np.ndarray:
    """Run the recursion over sample axis 0; returns H at every node.

    H[0] = 0 by the zero-initial-strain convention.
    """
    samples = np.asarray(samples, dtype=float)
    out = np.zeros_like(samples)
    decay, c0, c1 = conv_coefficients(k, dt)
    H = np.zeros_like(samples[0])
    for n in range(samples.shape[0] - 1):
        H = decay * H + c0 * samples[n] + c1 * samples[n + 1]
        out[n + 1] = H
    return out


@dataclass
class MemoryAccumulator:
    """Recursive state of exponential-kernel convolutions over flat channels.

    One instance per solver loop; ``state`` holds H_n for every channel and
    ``prev`` the last integrand sample, so callers only feed new samples.
    """

    decay_rate: float
    state: np.ndarray = field(default=None)
    prev: np.ndarray = field(default=None)

    def start(self, f0: np.ndarray):
        f0 = np.asarray(f0, dtype=float)
        self.state = np.zeros_like(f0)
        self.prev = f0.copy()

    def step(self, f1: np.ndarray, dt: float) -> np.ndarray:
        if self.state is None:
            raise RuntimeError("accumulator not started; call start(f0) first")
        f1 = np.asarray(f1, dtype=float)
        self.state = conv_step(self.state, self.prev, f1, self.decay_rate, dt)
        self.prev = f1.copy()
        return self.state


def direct_convolution(samples: np.ndarray, k: float, dt: float) -> np.ndarray:
    """O(N^2) reference: sum the per-segment closed-form integrals directly.

    Independent of the recursion (no carried state); used as the oracle for
    the recursion-exactness checks.
    """
    samples = np.asarray(samples, dtype=float)
    n_nodes = samples.shape[0]
    _, c0, c1 = conv_coefficients(k, dt)
    out = np.zeros_like(samples)
    for n in range(1, n_nodes):
        t_n = n * dt
        acc = np.zeros_like(samples[0])
        for j in range(n):
            seg = c0 * samples[j] + c1 * samples[j + 1]
            acc = acc + np.exp(-k * (t_n - (j + 1) * dt)) * seg
        out[n] = acc
    return out


def dump_convolution_csv(path, samples: np.ndarray, k: float, dt: float):
    """Write (t, H_recursive, H_direct) rows for a scalar sample train."""
    from . import fem
    samples = np.asarray(samples, dtype=float)
    rec = convolve_samples(samples, k, dt)
    direct = direct_convolution(samples, k, dt)
    rows = [[f"{n * dt:.12g}", rec[n], direct[n]] for n in range(len(samples))]
    fem.write_csv(path, ["t", "H_recursive", "H_direct"], rows)
    return path


# ---------------------------------------------------------------------------
# closed-form transverse strain closures
# ---------------------------------------------------------------------------

def shear_closure(F_history: np.ndarray, grid: TimeGrid, params: MaterialParams) -> np.ndarray:
    """Transverse shear strain from its force channel.

    ``F_history[n]`` holds samples of the already-contracted forcing
    a_{as} F^{s3}(t_n) (any trailing shape).  Returns samples of the strain
    solving  2 mu e + rho de/dt = F  from a zero start:

        e(t) = (1/rho) int_0^t exp(-(2 mu/rho)(t-s)) F(s) ds
    """
    decay = 2.0 * params.mu / params.rho
    return convolve_samples(np.asarray(F_history, dtype=float), decay, grid.dt) / params.rho


def normal_closure(F33_history: np.ndarray, gamma_trace_history: np.ndarray,
                   grid: TimeGrid, params: MaterialParams) -> np.ndarray:
    """Transverse normal strain from its force channel and the in-plane trace.

    ``gamma_trace_history[n]`` holds a^{ab} e_{a||b}(t_n).  Solves

        lam tr + (lam+2mu) e33 + theta d(tr)/dt + (theta+rho) d(e33)/dt = F33

    from a zero start, in the integrated form with decay k and constant
    Lambda:

        e33(t) = 1/(theta+rho) int exp(-k(t-s)) F33 ds
                 - theta/(theta+rho) (tr(t) + Lambda int exp(-k(t-s)) tr ds)
    """
    k = params.k
    th, rho = params.theta, params.rho
    F33 = np.asarray(F33_history, dtype=float)
    tr = np.asarray(gamma_trace_history, dtype=float)
    H_F = convolve_samples(F33, k, grid.dt)
    H_tr = convolve_samples(tr, k, grid.dt)
    return H_F / (th + rho) - (th / (th + rho)) * (tr + params.Lambda * H_tr)


def phi_ab(F_ab_sampler, F_33_sampler, y_pts: np.ndarray, a_ctr: np.ndarray,
           grid: TimeGrid, params: MaterialParams, thickness_rule: int = 4) -> np.ndarray:
    """Membrane force functional phi^{ab} on points of the midsurface domain.

    Parameters
    ----------
    F_ab_sampler : callable
        ``(t, y (npts, 2), x3 (npts,)) -> (npts, 2, 2)`` in-plane force
        components F^{ab}.
    F_33_sampler : callable
        ``(t, y, x3) -> (npts,)`` transverse component F^{33}.
    y_pts : (npts, 2)
        Midsurface evaluation points (typically quadrature points).
    a_ctr : (npts, 2, 2)
        Contravariant surface metric at those points.
    thickness_rule : int
        Gauss-Legendre point count for the transverse integral.

    Returns
    -------
    (N+1, npts, 2, 2) samples of

        phi^{ab}(t) = int_{-1}^{1} ( F^{ab}(t)
                      - theta/(theta+rho) F^{33}(t) a^{ab}
                      - theta Lambda/(theta+rho) [exp(-k .) * F^{33}](t) a^{ab} ) dx3

    The memory term carries a minus sign: with it, the transverse-strain
    elimination is exact (for constant-in-time data the combination reduces
    to the static transverse coefficient -lam/(lam+2mu)).
    """
    y_pts = np.asarray(y_pts, dtype=float)
    a_ctr = np.asarray(a_ctr, dtype=float)
    npts = y_pts.shape[0]
    nodes, weights = np.polynomial.legendre.leggauss(thickness_rule)
    th, rho = params.theta, params.rho
    k = params.k

    times = grid.times
    int_Fab = np.zeros((grid.N + 1, npts, 2, 2))
    int_F33 = np.zeros((grid.N + 1, npts))
    for n, t in enumerate(times):
        for x3v, w in zip(nodes, weights):
            x3arr = np.full(npts, x3v)
            int_Fab[n] += w * np.asarray(F_ab_sampler(t, y_pts, x3arr))
            int_F33[n] += w * np.asarray(F_33_sampler(t, y_pts, x3arr))

    H_F33 = convolve_samples(int_F33, k, grid.dt)
    trans = (-th / (th + rho)) * int_F33 - (th * params.Lambda / (th + rho)) * H_F33
    return int_Fab + trans[..., None, None] * a_ctr[None, :, :, :]
