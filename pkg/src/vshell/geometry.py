"""Surface and volume differential geometry of a parametrized shell midsurface.

All quantities are derived from a chart ``theta`` mapping a planar parameter
domain into 3-space.  Conventions (Greek indices run over {1,2}, stored as
axes of length 2; the transverse direction is index 3, stored as axis 2):

* ``a_cov[a, b]``      covariant surface metric  a_ab = a_a . a_b
* ``a_ctr[a, b]``      contravariant metric (matrix inverse of a_cov)
* ``b_cov[a, b]``      curvature tensor  b_ab = a3 . d_b a_a
* ``b_mix[a, b]``      mixed curvature  b_a^b = a^{bs} b_{sa}
* ``christoffel[s, a, b]``   surface symbols  G^s_ab = a^s . d_b a_a
* ``b_mix_cd[s, a, b]``      covariant derivative  b^s_b|_a
* ``gamma3d[p, i, j]``       volume symbols of the shifted chart

Every evaluator is vectorized: a point argument of shape (..., 2) produces
fields with the same leading batch shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class DegenerateChartError(ValueError):
    """Tangent vectors are (numerically) linearly dependent at a point."""


class ThicknessError(ValueError):
    """Half-thickness exceeds the curvature radius: volume metric not positive."""


@dataclass(frozen=True)
class MidsurfaceChart:
    """Injective immersion of a planar rectangle into 3-space.

    Parameters
    ----------
    name : str
        Identifier used in configs and reports.
    point : callable
        ``y (..., 2) -> (..., 3)``, the chart itself.
    jacobian : callable, optional
        ``y -> (..., 2, 3)`` with ``jacobian[..., a, :] = d_a theta``.
    hessian : callable, optional
        ``y -> (..., 2, 2, 3)`` second partials, symmetric in the two
        parameter axes.
    third : callable, optional
        ``y -> (..., 2, 2, 2, 3)`` third partials.  Only needed for the
        covariant curvature derivative and the volume symbols; charts
        without it fall back to one central-difference level on `hessian`.
    domain : ((y1min, y1max), (y2min, y2max))
        Parameter rectangle.
    degeneracy_tol : float
        Threshold on |a_1 x a_2| below which the chart is rejected.
    fd_step : float
        Central-difference step for missing derivative callbacks.
    """

    name: str
    point: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    third: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: tuple = ((0.0, 1.0), (0.0, 1.0))
    degeneracy_tol: float = 1e-12
    fd_step: float = 1e-6

    @property
    def smoothness(self) -> str:
        """Capability flag: 'C3' when analytic third derivatives exist."""
        if self.third is not None:
            return "C3"
        if self.hessian is not None:
            return "C2"
        return "C1"

    def d1(self, y):
        if self.jacobian is not None:
            return np.asarray(self.jacobian(y), dtype=float)
        return _fd_stack(self.point, y, self.fd_step)

    def d2(self, y):
        if self.hessian is not None:
            return np.asarray(self.hessian(y), dtype=float)
        # direct second differences of the chart itself: one roundoff level
        # instead of two, so a much larger step is safe
        return _fd_hessian(self.point, y, max(self.fd_step, 1e-4))

    def d3(self, y):
        if self.third is not None:
            return np.asarray(self.third(y), dtype=float)
        if self.hessian is not None:
            return _fd_stack(self.hessian, y, self.fd_step)
        return _fd_stack(lambda yy: _fd_hessian(self.point, yy, 1e-4), y, 1e-3)


def _fd_stack(f, y, step):
    """Stack central differences of ``f`` along a new leading tensor axis.

    The derivative axis is inserted right after the batch axes so that
    repeated application builds ``(..., 2, 2, ..., 3)`` stacks in the same
    order as analytic callbacks.
    """
    y = np.asarray(y, dtype=float)
    batch = y.shape[:-1]
    cols = []
    for a in range(2):
        e = np.zeros_like(y)
        e[..., a] = step
        cols.append((np.asarray(f(y + e), dtype=float) - np.asarray(f(y - e), dtype=float)) / (2.0 * step))
    return np.stack(cols, axis=len(batch))


def _fd_hessian(point, y, step):
    """Second partials of the chart by direct central second differences."""
    y = np.asarray(y, dtype=float)
    batch = y.shape[:-1]
    p0 = np.asarray(point(y), dtype=float)
    H = np.zeros(batch + (2, 2, 3))
    for a in range(2):
        ea = np.zeros_like(y)
        ea[..., a] = step
        H[..., a, a, :] = (np.asarray(point(y + ea), dtype=float) - 2.0 * p0
                           + np.asarray(point(y - ea), dtype=float)) / step**2
    e0 = np.zeros_like(y)
    e0[..., 0] = step
    e1 = np.zeros_like(y)
    e1[..., 1] = step
    mixed = (np.asarray(point(y + e0 + e1), dtype=float)
             - np.asarray(point(y + e0 - e1), dtype=float)
             - np.asarray(point(y - e0 + e1), dtype=float)
             + np.asarray(point(y - e0 - e1), dtype=float)) / (4.0 * step**2)
    H[..., 0, 1, :] = mixed
    H[..., 1, 0, :] = mixed
    return H


@dataclass(frozen=True)
class SurfaceGeometry:
    """Pointwise first/second fundamental forms and connection coefficients."""

    a_cov: np.ndarray          # (..., 2, 2)
    a_ctr: np.ndarray          # (..., 2, 2)
    b_cov: np.ndarray          # (..., 2, 2)
    b_mix: np.ndarray          # (..., 2, 2),  b_mix[a, b] = b_a^b
    christoffel: np.ndarray    # (..., 2, 2, 2), [s, a, b] = G^s_ab
    sqrt_a: np.ndarray         # (...)
    normal: np.ndarray         # (..., 3)
    tangents: np.ndarray       # (..., 2, 3)
    b_mix_cd: Optional[np.ndarray] = None   # (..., 2, 2, 2), [s, a, b] = b^s_b|_a


@dataclass(frozen=True)
class VolumeGeometry:
    """Metric data of the shifted chart at a scaled point (y, eps*x3)."""

    eps: float
    g_cov: np.ndarray          # (..., 3, 3)
    g_ctr: np.ndarray          # (..., 3, 3)
    gamma3d: np.ndarray        # (..., 3, 3, 3), [p, i, j] = G^p_ij(eps)
    det_g: np.ndarray          # (...)
    sqrt_g: np.ndarray         # (...)


def surface_frame(chart: MidsurfaceChart, y, need_third: bool = False) -> SurfaceGeometry:
    """Evaluate all first/second-order surface quantities at ``y``.

    With ``need_third=True`` the covariant curvature derivative b^s_b|_a is
    also computed (requires third derivatives of the chart, analytic or by
    finite-difference fallback).
    """
    y = np.asarray(y, dtype=float)
    d1 = chart.d1(y)                      # (..., 2, 3)
    d2 = chart.d2(y)                      # (..., 2, 2, 3)

    cross = np.cross(d1[..., 0, :], d1[..., 1, :])
    norm = np.linalg.norm(cross, axis=-1)
    if np.any(norm < chart.degeneracy_tol):
        raise DegenerateChartError(
            f"chart '{chart.name}': |a_1 x a_2| < {chart.degeneracy_tol:g} at some point"
        )
    a3 = cross / norm[..., None]

    a_cov = np.einsum("...ak,...bk->...ab", d1, d1)
    det_a = a_cov[..., 0, 0] * a_cov[..., 1, 1] - a_cov[..., 0, 1] * a_cov[..., 1, 0]
    a_ctr = np.linalg.inv(a_cov)
    a_ctr = 0.5 * (a_ctr + np.swapaxes(a_ctr, -1, -2))   # exact symmetry
    sqrt_a = np.sqrt(det_a)

    # b_ab = a3 . d_b a_a ; symmetric because d2 is.
    b_cov = np.einsum("...k,...abk->...ab", a3, d2)
    b_mix = np.einsum("...bs,...sa->...ab", a_ctr, b_cov)  # b_a^b

    # a^s = a^{st} a_t (contravariant tangent basis)
    a_ctr_vec = np.einsum("...st,...tk->...sk", a_ctr, d1)
    christoffel = np.einsum("...sk,...abk->...sab", a_ctr_vec, d2)
    # stored as [s, a, b]; symmetric in (a, b) by construction of d2

    b_mix_cd = None
    if need_third:
        b_mix_cd = _curvature_covariant_derivative(chart, y, d1, d2, a_ctr, b_cov, b_mix, a3, christoffel)

    return SurfaceGeometry(
        a_cov=a_cov, a_ctr=a_ctr, b_cov=b_cov, b_mix=b_mix,
        christoffel=np.einsum("...sab->...sab", christoffel),
        sqrt_a=sqrt_a, normal=a3, tangents=d1, b_mix_cd=b_mix_cd,
    )


def _mixed_curvature_derivative(chart, y, d1, d2, a_ctr, b_cov, b_mix, a3):
    """Plain partial derivative d_c b_a^s, returned as [..., c, a, s].

    Uses the Weingarten relation d_a a3 = -b_a^s a_s so that only the chart
    derivatives up to third order enter.
    """
    d3 = chart.d3(y)                       # (..., 2, 2, 2, 3)
    # d_c a_{mn}
    da_cov = np.einsum("...mck,...nk->...cmn", d2, d1) + np.einsum("...mk,...nck->...cmn", d1, d2)
    # d_c a^{st} = -a^{sm} (d_c a_{mn}) a^{nt}
    da_ctr = -np.einsum("...sm,...cmn,...nt->...cst", a_ctr, da_cov, a_ctr)
    # d_c a3 = -b_c^r a_r
    da3 = -np.einsum("...cr,...rk->...ck", b_mix, d1)
    # d_c b_{ta} = (d_c a3) . d2[t,a] + a3 . d3[t,a,c]
    db_cov = np.einsum("...ck,...tak->...cta", da3, d2) + np.einsum("...k,...tack->...cta", a3, d3)
    # d_c b_a^s = (d_c a^{st}) b_{ta} + a^{st} d_c b_{ta}
    return np.einsum("...cst,...ta->...cas", da_ctr, b_cov) + np.einsum("...st,...cta->...cas", a_ctr, db_cov)


def _curvature_covariant_derivative(chart, y, d1, d2, a_ctr, b_cov, b_mix, a3, christoffel):
    """b^s_b|_a = d_a b_b^s + G^s_at b_b^t - G^t_ab b_t^s, stored [s, a, b]."""
    db_mix = _mixed_curvature_derivative(chart, y, d1, d2, a_ctr, b_cov, b_mix, a3)
    term1 = np.einsum("...abs->...sab", db_mix)
    term2 = np.einsum("...sat,...bt->...sab", christoffel, b_mix)
    term3 = -np.einsum("...tab,...ts->...sab", christoffel, b_mix)
    return term1 + term2 + term3


def volume_metrics(chart: MidsurfaceChart, eps: float, y, x3) -> VolumeGeometry:
    """Metric and connection of the shifted chart at the scaled point (y, eps*x3).

    ``x3`` lives on the fixed interval [-1, 1]; physically the point sits at
    offset ``eps*x3`` along the unit normal.  Raises `ThicknessError` when
    the shifted metric loses positivity (eps beyond the curvature radius).
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    y = np.asarray(y, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    z = eps * x3                                        # physical offset
    sf = surface_frame(chart, y)
    d1, d2, a3, b_mix = sf.tangents, chart.d2(y), sf.normal, sf.b_mix
    a_ctr, b_cov = sf.a_ctr, sf.b_cov

    db_mix = _mixed_curvature_derivative(chart, y, d1, d2, a_ctr, b_cov, b_mix, a3)

    # d_a a3 = -b_a^s a_s  and  d_b d_a a3 = -(d_b b_a^s) a_s - b_a^s d2[s,b];
    # the mixed entry is mirrored so the volume symbols come out exactly
    # symmetric (the two index orders are equal analytically but would be
    # evaluated through different float expressions)
    da3 = -np.einsum("...as,...sk->...ak", b_mix, d1)
    dda3 = (
        -np.einsum("...bas,...sk->...abk", db_mix, d1)
        - np.einsum("...as,...sbk->...abk", b_mix, d2)
    )
    dda3[..., 1, 0, :] = dda3[..., 0, 1, :]

    zb = z[..., None, None]
    g_tan = d1 + zb * da3                               # g_a = a_a + z d_a a3
    g_vec = np.concatenate([g_tan, a3[..., None, :]], axis=-2)   # (..., 3, 3)

    g_cov = np.einsum("...ik,...jk->...ij", g_vec, g_vec)
    # det(g_1,g_2,g_3) = sqrt(a) (1 - z k_1)(1 - z k_2); the determinant
    # alone can stay positive across a fold (both factors flip at an umbilic
    # point), so admissibility tests both offset factors via the curvature
    # invariants: product and sum must stay positive.
    trB = np.einsum("...aa->...", b_mix)
    detB = b_mix[..., 0, 0] * b_mix[..., 1, 1] - b_mix[..., 0, 1] * b_mix[..., 1, 0]
    f_prod = 1.0 - z * trB + z * z * detB
    f_sum = 2.0 - z * trB
    if np.any(f_prod <= 0.0) or np.any(f_sum <= 0.0):
        raise ThicknessError(
            f"chart '{chart.name}': offset metric degenerates at eps={eps:g} "
            "(thickness exceeds the curvature radius)"
        )
    det_g = np.linalg.det(g_vec) ** 2
    g_ctr = np.linalg.inv(g_cov)
    g_ctr = 0.5 * (g_ctr + np.swapaxes(g_ctr, -1, -2))   # exact symmetry
    g_ctr_vec = np.einsum("...pq,...qk->...pk", g_ctr, g_vec)

    # D[i, j] = d_i g_j = d_j g_i (stack of second derivatives of the shifted chart)
    batch = y.shape[:-1]
    D = np.zeros(batch + (3, 3, 3))
    D[..., :2, :2, :] = d2 + zb[..., None] * dda3
    D[..., 2, :2, :] = da3
    D[..., :2, 2, :] = da3
    # D[..., 2, 2, :] = 0 exactly: the shifted chart is affine in the offset

    gamma3d = np.einsum("...pk,...ijk->...pij", g_ctr_vec, D)
    # exact structural zeros (the normal fibre is a geodesic of the shifted metric)
    gamma3d[..., 2, :, 2] = 0.0
    gamma3d[..., 2, 2, :] = 0.0
    gamma3d[..., :, 2, 2] = 0.0

    return VolumeGeometry(eps=float(eps), g_cov=g_cov, g_ctr=g_ctr, gamma3d=gamma3d,
                          det_g=det_g, sqrt_g=np.sqrt(det_g))


# ---------------------------------------------------------------------------
# asymptotic-expansion diagnostics
# ---------------------------------------------------------------------------

#: residual -> expected decay order used for reporting; None = exact identity
EXPANSION_ORDERS = {
    "christoffel_s": 2,     # G^s_ab(eps) = G^s_ab - eps x3 b^s_b|_a + O(eps^2)
    "christoffel_3": None,  # G^3_ab(eps) = b_ab - eps x3 b_a^s b_sb  (no remainder)
    "christoffel_shear": 2, # G^s_a3(eps) = -b_a^s - eps x3 b_a^t b_t^s + O(eps^2)
    "metric_det": 1,        # g(eps) = a + O(eps)
}


def default_sample_points(chart: MidsurfaceChart, n_inplane: int = 5, n_thickness: int = 5):
    """Tensor grid over the parameter box and transverse interval."""
    (x0, x1), (y0, y1) = chart.domain
    ys1 = np.linspace(x0, x1, n_inplane)
    ys2 = np.linspace(y0, y1, n_inplane)
    Y1, Y2 = np.meshgrid(ys1, ys2, indexing="ij")
    y = np.stack([Y1.ravel(), Y2.ravel()], axis=-1)
    x3 = np.linspace(-1.0, 1.0, n_thickness)
    return y, x3


def expansion_residuals(chart: MidsurfaceChart, eps_list, sample_points=None):
    """Sup-norm residuals of the geometric expansions over a sample grid.

    Returns a dict with per-quantity lists of ``(eps, sup_residual)`` and the
    fitted log-log slope of each nonzero residual family.  ``eps_list`` must
    be strictly decreasing with at least two entries.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 2 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing with >= 2 entries")
    if sample_points is None:
        y, x3 = default_sample_points(chart)
    else:
        y, x3 = sample_points
        y = np.asarray(y, dtype=float)
        x3 = np.asarray(x3, dtype=float)

    sf = surface_frame(chart, y, need_third=True)
    b_sq = np.einsum("...as,...sb->...ab", sf.b_mix, sf.b_cov)       # b_a^s b_sb
    b_mix_sq = np.einsum("...at,...ts->...as", sf.b_mix, sf.b_mix)   # b_a^t b_t^s

    rows = {name: [] for name in EXPANSION_ORDERS}
    for eps in eps_list:
        sup = {name: 0.0 for name in EXPANSION_ORDERS}
        for x3v in x3:
            vol = volume_metrics(chart, eps, y, np.full(y.shape[:-1], x3v))
            ex3 = eps * x3v
            g = vol.gamma3d
            # G^s_ab(eps) vs surface symbols minus first-order correction
            pred_s = sf.christoffel - ex3 * sf.b_mix_cd
            sup["christoffel_s"] = max(sup["christoffel_s"], np.max(np.abs(g[..., :2, :2, :2] - pred_s)))
            # G^3_ab(eps): exact identity
            pred_3 = sf.b_cov - ex3 * b_sq
            sup["christoffel_3"] = max(sup["christoffel_3"], np.max(np.abs(g[..., 2, :2, :2] - pred_3)))
            # G^s_a3(eps)
            pred_shear = -sf.b_mix - ex3 * b_mix_sq                  # indexed [a, s]
            got_shear = np.einsum("...sa->...as", g[..., :2, :2, 2])
            sup["christoffel_shear"] = max(sup["christoffel_shear"], np.max(np.abs(got_shear - pred_shear)))
            # metric determinant vs surface determinant
            sup["metric_det"] = max(sup["metric_det"], np.max(np.abs(vol.det_g - sf.sqrt_a**2)))
        for name in EXPANSION_ORDERS:
            rows[name].append((eps, sup[name]))

    slopes = {}
    for name, data in rows.items():
        res = np.array([r for _, r in data])
        if np.all(res > 0.0) and np.max(res) > 1e-14:
            slopes[name] = fit_loglog_slope([e for e, _ in data], res)
        else:
            # identically-vanishing family: any order claim holds, a fit
            # would only measure roundoff noise
            slopes[name] = float("nan")
    return {"residuals": rows, "slopes": slopes}


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(sol[0])


# ---------------------------------------------------------------------------
# chart library
# ---------------------------------------------------------------------------

def plane_chart(lx: float = 1.0, ly: float = 1.0) -> MidsurfaceChart:
    """Flat chart theta(y) = (y1, y2, 0) on [0, lx] x [0, ly]."""
    def point(y):
        y = np.asarray(y, dtype=float)
        return np.concatenate([y, np.zeros(y.shape[:-1] + (1,))], axis=-1)

    def jac(y):
        y = np.asarray(y, dtype=float)
        J = np.zeros(y.shape[:-1] + (2, 3))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
        return J

    def hess(y):
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1] + (2, 2, 3))

    def third(y):
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1] + (2, 2, 2, 3))

    return MidsurfaceChart("plane", point, jac, hess, third,
                           domain=((0.0, lx), (0.0, ly)))


def cylinder_chart(radius: float = 1.0, angle: float = np.pi / 3.0,
                   height: float = 1.0) -> MidsurfaceChart:
    """Cylindrical panel theta(y) = (R cos(y1/R), R sin(y1/R), y2).

    y1 is arclength along the circumference (range R*angle), y2 the axial
    coordinate.  The principal curvature is -1/R in the y1 direction.
    """
    R = float(radius)

    def point(y):
        y = np.asarray(y, dtype=float)
        t = y[..., 0] / R
        return np.stack([R * np.cos(t), R * np.sin(t), y[..., 1]], axis=-1)

    def jac(y):
        y = np.asarray(y, dtype=float)
        t = y[..., 0] / R
        J = np.zeros(y.shape[:-1] + (2, 3))
        J[..., 0, 0] = -np.sin(t)
        J[..., 0, 1] = np.cos(t)
        J[..., 1, 2] = 1.0
        return J

    def hess(y):
        y = np.asarray(y, dtype=float)
        t = y[..., 0] / R
        H = np.zeros(y.shape[:-1] + (2, 2, 3))
        H[..., 0, 0, 0] = -np.cos(t) / R
        H[..., 0, 0, 1] = -np.sin(t) / R
        return H

    def third(y):
        y = np.asarray(y, dtype=float)
        t = y[..., 0] / R
        T = np.zeros(y.shape[:-1] + (2, 2, 2, 3))
        T[..., 0, 0, 0, 0] = np.sin(t) / R**2
        T[..., 0, 0, 0, 1] = -np.cos(t) / R**2
        return T

    return MidsurfaceChart("cylinder", point, jac, hess, third,
                           domain=((0.0, R * float(angle)), (0.0, float(height))))


def hypar_chart(slope: float = 0.5, lx: float = 1.0, ly: float = 1.0) -> MidsurfaceChart:
    """Hyperbolic paraboloid theta(y) = (y1, y2, c*y1*y2)."""
    c = float(slope)

    def point(y):
        y = np.asarray(y, dtype=float)
        return np.stack([y[..., 0], y[..., 1], c * y[..., 0] * y[..., 1]], axis=-1)

    def jac(y):
        y = np.asarray(y, dtype=float)
        J = np.zeros(y.shape[:-1] + (2, 3))
        J[..., 0, 0] = 1.0
        J[..., 0, 2] = c * y[..., 1]
        J[..., 1, 1] = 1.0
        J[..., 1, 2] = c * y[..., 0]
        return J

    def hess(y):
        y = np.asarray(y, dtype=float)
        H = np.zeros(y.shape[:-1] + (2, 2, 3))
        H[..., 0, 1, 2] = c
        H[..., 1, 0, 2] = c
        return H

    def third(y):
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1] + (2, 2, 2, 3))

    return MidsurfaceChart("hypar", point, jac, hess, third,
                           domain=((0.0, lx), (0.0, ly)))


def cap_chart(curvature: float = 0.5, lx: float = 1.0, ly: float = 1.0) -> MidsurfaceChart:
    """Elliptic paraboloid cap theta(y) = (y1, y2, c/2 (y1^2 + y2^2))."""
    c = float(curvature)

    def point(y):
        y = np.asarray(y, dtype=float)
        z = 0.5 * c * (y[..., 0] ** 2 + y[..., 1] ** 2)
        return np.stack([y[..., 0], y[..., 1], z], axis=-1)

    def jac(y):
        y = np.asarray(y, dtype=float)
        J = np.zeros(y.shape[:-1] + (2, 3))
        J[..., 0, 0] = 1.0
        J[..., 0, 2] = c * y[..., 0]
        J[..., 1, 1] = 1.0
        J[..., 1, 2] = c * y[..., 1]
        return J

    def hess(y):
        y = np.asarray(y, dtype=float)
        H = np.zeros(y.shape[:-1] + (2, 2, 3))
        H[..., 0, 0, 2] = c
        H[..., 1, 1, 2] = c
        return H

    def third(y):
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1] + (2, 2, 2, 3))

    return MidsurfaceChart("cap", point, jac, hess, third,
                           domain=((0.0, lx), (0.0, ly)))


CHART_FACTORIES = {
    "plane": plane_chart,
    "cylinder": cylinder_chart,
    "hypar": hypar_chart,
    "cap": cap_chart,
}


def chart_from_config(name: str, params: dict | None = None) -> MidsurfaceChart:
    """Instantiate a library chart from its config identifier and parameters."""
    if name not in CHART_FACTORIES:
        raise KeyError(f"unknown chart '{name}'; available: {sorted(CHART_FACTORIES)}")
    return CHART_FACTORIES[name](**(params or {}))
