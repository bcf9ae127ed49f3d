"""Strain operators and transverse averaging.

Pointwise operators take geometry evaluated at the same points (see
`geometry.surface_frame` / `geometry.volume_metrics`) and derivative data of
the displacement field.  Derivative layout conventions:

* 2D fields eta on omega:  ``grad[..., a, i] = d_a eta_i`` (a in {1,2}, i in {1,2,3})
* 3D fields v on Omega:    ``grad[..., j, i] = d_j v_i``  (j in {1,2,3})

All strain outputs are symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import MidsurfaceChart, SurfaceGeometry, VolumeGeometry, surface_frame


@dataclass(frozen=True)
class AnalyticField2D:
    """Three-component displacement field on omega with analytic derivatives."""

    value: Callable[[np.ndarray], np.ndarray]                 # y -> (..., 3)
    grad: Callable[[np.ndarray], np.ndarray]                  # y -> (..., 2, 3)
    hess3: Optional[Callable[[np.ndarray], np.ndarray]] = None  # y -> (..., 2, 2), d_ab eta_3


@dataclass(frozen=True)
class AnalyticField3D:
    """Displacement field on Omega = omega x (-1, 1) with analytic derivatives."""

    value: Callable[..., np.ndarray]                          # (y, x3) -> (..., 3)
    grad: Callable[..., np.ndarray]                           # (y, x3) -> (..., 3, 3)


def scaled_strains(values: np.ndarray, grads: np.ndarray, eps: float,
                   vol: VolumeGeometry) -> np.ndarray:
    """Scaled linearized strains e_{i||j}(eps; v) at points.

    ``values``: (..., 3) field components; ``grads``: (..., 3, 3) partials
    ``grads[j, i] = d_j v_i`` with d_3 the derivative in the fixed transverse
    variable x3 in [-1, 1].  Transverse derivatives carry the 1/eps factors
    of the scaling; eps = 0 is rejected (singular limit).
    """
    if eps <= 0.0:
        raise ValueError("eps must be > 0; the eps -> 0 strains are singular")
    v = np.asarray(values, dtype=float)
    dv = np.asarray(grads, dtype=float)
    G = vol.gamma3d
    e = np.zeros(v.shape[:-1] + (3, 3))

    # sym[a, b] = (d_a v_b + d_b v_a)/2 ; Christoffel term couples all 3 components
    sym = 0.5 * (dv[..., :2, :2] + np.swapaxes(dv[..., :2, :2], -1, -2))
    e[..., :2, :2] = sym - np.einsum("...pab,...p->...ab", G[..., :, :2, :2], v)

    ea3 = (0.5 * (dv[..., 2, :2] / eps + dv[..., :2, 2])
           - np.einsum("...sa,...s->...a", G[..., :2, :2, 2], v[..., :2]))
    e[..., :2, 2] = ea3
    e[..., 2, :2] = ea3
    e[..., 2, 2] = dv[..., 2, 2] / eps
    return e


def gamma_ab(values: np.ndarray, grads: np.ndarray, surf: SurfaceGeometry) -> np.ndarray:
    """Linearized change-of-metric tensor gamma_{ab}(eta) at points.

    ``values``: (..., 3); ``grads``: (..., 2, 3) with grads[a, i] = d_a eta_i.
    """
    eta = np.asarray(values, dtype=float)
    d = np.asarray(grads, dtype=float)
    sym = 0.5 * (d[..., :, :2] + np.swapaxes(d[..., :, :2], -1, -2))
    return (sym
            - np.einsum("...sab,...s->...ab", surf.christoffel, eta[..., :2])
            - surf.b_cov * eta[..., 2][..., None, None])


def rho_ab(values: np.ndarray, grads: np.ndarray, hess3: np.ndarray,
           surf: SurfaceGeometry) -> np.ndarray:
    """Bending-type operator rho_{ab}(v) for fields with second derivatives.

    Implements the full expression including the covariant-curvature-
    derivative term; requires `surface_frame(..., need_third=True)` geometry.
    Only d_ab v_3 is needed at second order (``hess3``, shape (..., 2, 2)).
    """
    if surf.b_mix_cd is None:
        raise ValueError("rho_ab needs geometry with b_mix_cd (need_third=True)")
    v = np.asarray(values, dtype=float)
    d = np.asarray(grads, dtype=float)
    h3 = np.asarray(hess3, dtype=float)

    cov1 = d[..., :, :2] - np.einsum("...tab,...t->...ba", surf.christoffel, v[..., :2])
    # cov1[b, s] = d_b v_s - G^t_bs v_t  (symmetric in the Christoffel slot)
    term_b = np.einsum("...as,...bs->...ab", surf.b_mix, cov1)
    term_bt = np.einsum("...bt,...at->...ab", surf.b_mix, cov1)
    return (h3
            - np.einsum("...sab,...s->...ab", surf.christoffel, d[..., :, 2])
            - np.einsum("...as,...sb->...ab", surf.b_mix, surf.b_cov) * v[..., 2][..., None, None]
            + term_b + term_bt
            + np.einsum("...tab,...t->...ab", surf.b_mix_cd, v[..., :2]))


def transversal_average(f: Callable[[np.ndarray], np.ndarray], n_quad: int = 6) -> np.ndarray:
    """Average (1/2) int_{-1}^{1} f(x3) dx3 by Gauss quadrature.

    Exact for polynomials in x3 up to degree 2*n_quad - 1.
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    vals = [np.asarray(f(x), dtype=float) for x in nodes]
    return 0.5 * sum(w * v for w, v in zip(weights, vals))


def thickness_average_weights(n_layers: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Levels and averaging weights for a layered 1D Lagrange basis on [-1, 1].

    Returns ``(levels, weights)`` with ``sum(weights) == 1`` such that the
    average of the interpolant equals ``weights @ nodal_values`` exactly.
    """
    if degree not in (1, 2):
        raise ValueError("through-thickness degree must be 1 or 2")
    n_levels = n_layers * degree + 1
    levels = np.linspace(-1.0, 1.0, n_levels)
    weights = np.zeros(n_levels)
    h = 2.0 / n_layers
    for j in range(n_layers):
        base = degree * j
        if degree == 1:
            weights[base] += h / 2.0
            weights[base + 1] += h / 2.0
        else:
            weights[base] += h / 6.0
            weights[base + 1] += 4.0 * h / 6.0
            weights[base + 2] += h / 6.0
    return levels, weights / 2.0


def membrane_seminorm(field: AnalyticField2D, chart: MidsurfaceChart,
                      n_quad: int = 24) -> float:
    """Membrane seminorm (sum_ab |gamma_ab(eta)|^2_{0,omega})^{1/2}.

    The L2 norms use the plain parameter measure dy.  Analytic fields are
    integrated with a tensor Gauss rule on the chart rectangle; discrete
    fields use the mesh-based evaluator in `solver2d`.
    """
    (x0, x1), (y0, y1) = chart.domain
    n1, w1 = np.polynomial.legendre.leggauss(n_quad)
    p1 = 0.5 * (x1 - x0) * (n1 + 1.0) + x0
    p2 = 0.5 * (y1 - y0) * (n1 + 1.0) + y0
    W1 = 0.5 * (x1 - x0) * w1
    W2 = 0.5 * (y1 - y0) * w1
    P1, P2 = np.meshgrid(p1, p2, indexing="ij")
    pts = np.stack([P1.ravel(), P2.ravel()], axis=-1)
    wts = np.outer(W1, W2).ravel()

    surf = surface_frame(chart, pts)
    g = gamma_ab(field.value(pts), field.grad(pts), surf)
    return float(np.sqrt(np.sum(wts * np.sum(g * g, axis=(-2, -1)))))


def space_time_seminorm(seminorms: np.ndarray, dt: float) -> float:
    """Time-integrated seminorm (int_0^T s(t)^2 dt)^{1/2}, trapezoidal rule."""
    s = np.asarray(seminorms, dtype=float)
    return float(np.sqrt(np.trapezoid(s * s, dx=dt)))
