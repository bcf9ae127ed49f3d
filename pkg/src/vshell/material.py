"""Constitutive tensors: 3D elasticity/viscosity, their thin limits, and the
2D membrane tensors of the long-term-memory limit problem.

The 3D tensors are built pointwise from a contravariant metric ``g^{ij}``:

    A^{ijkl} = lam g^{ij} g^{kl} + mu (g^{ik} g^{jl} + g^{il} g^{jk})
    B^{ijkl} = theta g^{ij} g^{kl} + rho/2 (g^{ik} g^{jl} + g^{il} g^{jk})

The 2D membrane tensors combine the material constants through the derived
decay rate ``k = (lam + 2 mu)/(theta + rho)`` and the constant
``Lambda = lam/theta - (lam + 2 mu)/(theta + rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NonEllipticError(ValueError):
    """A 3D constitutive tensor failed the positivity sampling check."""


@dataclass(frozen=True)
class MaterialParams:
    """Lame and viscosity coefficients with derived constants.

    ``theta`` and ``rho`` must be strictly positive: the transverse strain
    closures and the 2D tensors divide by them, and the purely elastic
    degenerate case is out of scope.
    """

    lam: float
    mu: float
    theta: float
    rho: float

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.mu <= 0.0:
            raise ValueError("mu must be > 0")
        if self.theta <= 0.0 or self.rho <= 0.0:
            raise ValueError("viscosity coefficients theta and rho must be > 0")

    @property
    def k(self) -> float:
        """Memory-kernel decay rate (lam + 2 mu)/(theta + rho); always > 0."""
        return (self.lam + 2.0 * self.mu) / (self.theta + self.rho)

    @property
    def Lambda(self) -> float:
        """lam/theta - (lam + 2 mu)/(theta + rho)."""
        return self.lam / self.theta - (self.lam + 2.0 * self.mu) / (self.theta + self.rho)


@dataclass(frozen=True)
class MembraneTensors2D:
    """Pointwise contravariant 2x2x2x2 membrane tensors.

    ``a`` multiplies the instantaneous strain, ``b`` the strain rate, and
    ``c`` the exponential memory of the strain.  ``c`` is a pure metric dyad
    and therefore only positive semidefinite.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray


def _isotropic_from_metric(gctr: np.ndarray, dyad_coef: float, sym_coef: float) -> np.ndarray:
    """coef1 g^{ij}g^{kl} + coef2 (g^{ik}g^{jl} + g^{il}g^{jk}), batched."""
    g = np.asarray(gctr, dtype=float)
    return (
        dyad_coef * np.einsum("...ij,...kl->...ijkl", g, g)
        + sym_coef * (np.einsum("...ik,...jl->...ijkl", g, g)
                      + np.einsum("...il,...jk->...ijkl", g, g))
    )


def tensor3d_elastic(gctr: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Contravariant elasticity tensor from a contravariant 3x3 metric."""
    return _isotropic_from_metric(gctr, params.lam, params.mu)


def tensor3d_viscous(gctr: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Contravariant viscosity tensor from a contravariant 3x3 metric."""
    return _isotropic_from_metric(gctr, params.theta, 0.5 * params.rho)


def extend_surface_metric(a_ctr: np.ndarray) -> np.ndarray:
    """Embed a contravariant 2x2 surface metric as the 3x3 thin-limit metric
    (surface block plus unit normal component)."""
    a = np.asarray(a_ctr, dtype=float)
    out = np.zeros(a.shape[:-2] + (3, 3))
    out[..., :2, :2] = a
    out[..., 2, 2] = 1.0
    return out


def tensor3d_limits(a_ctr: np.ndarray, params: MaterialParams):
    """Thin limits A(0), B(0) assembled componentwise from the limit table.

    The surface-block/transverse structure is written out explicitly; the
    consistency property `tensor3d_elastic(extend_surface_metric(a)) == A(0)`
    is checked by the test suite, not assumed here.
    """
    a = np.asarray(a_ctr, dtype=float)
    batch = a.shape[:-2]

    def _table(dyad, sym, transverse):
        T = np.zeros(batch + (3, 3, 3, 3))
        T[..., :2, :2, :2, :2] = (
            dyad * np.einsum("...ab,...st->...abst", a, a)
            + sym * (np.einsum("...as,...bt->...abst", a, a)
                     + np.einsum("...at,...bs->...abst", a, a))
        )
        # ab33 block (both orders, tensor major symmetry)
        T[..., :2, :2, 2, 2] = dyad * a
        T[..., 2, 2, :2, :2] = dyad * a
        # a3s3 block in all four minor-symmetric placements (a symmetric)
        T[..., :2, 2, :2, 2] = sym * a
        T[..., 2, :2, :2, 2] = sym * a
        T[..., :2, 2, 2, :2] = sym * a
        T[..., 2, :2, 2, :2] = sym * a
        T[..., 2, 2, 2, 2] = transverse
        return T

    A0 = _table(params.lam, params.mu, params.lam + 2.0 * params.mu)
    B0 = _table(params.theta, 0.5 * params.rho, params.theta + params.rho)
    return A0, B0


def membrane_tensors(a_ctr: np.ndarray, params: MaterialParams) -> MembraneTensors2D:
    """2D fourth-order tensors of the membrane limit problem at given metric."""
    a = np.asarray(a_ctr, dtype=float)
    lam, mu, th, rho = params.lam, params.mu, params.theta, params.rho
    dyad = np.einsum("...ab,...st->...abst", a, a)
    sym = np.einsum("...as,...bt->...abst", a, a) + np.einsum("...at,...bs->...abst", a, a)

    coef_a = (2.0 * lam * rho**2 + 4.0 * mu * th**2) / (th + rho) ** 2
    coef_b = 2.0 * th * rho / (th + rho)
    coef_c = 2.0 * (th * params.Lambda) ** 2 / (th + rho)

    return MembraneTensors2D(
        a=coef_a * dyad + 2.0 * mu * sym,
        b=coef_b * dyad + rho * sym,
        c=coef_c * dyad,
    )


def random_unit_symmetric(rng: np.random.Generator, dim: int, n: int) -> np.ndarray:
    """n random symmetric dim x dim matrices with unit Frobenius norm."""
    m = rng.standard_normal((n, dim, dim))
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    m /= np.linalg.norm(m, axis=(-2, -1), keepdims=True)
    return m


def ellipticity_estimate(tensor: np.ndarray, n_samples: int = 1000,
                         rng: np.random.Generator | None = None,
                         require_positive: bool | None = None) -> float:
    """Empirical ellipticity minimum of T^{ijkl} t_kl t_ij over random unit
    symmetric arguments.

    For 3D tensors a nonpositive minimum raises `NonEllipticError` (it
    signals a metric or coefficient bug); 2D membrane tensors may legally
    attain zero (the memory tensor is a rank-one dyad).
    """
    T = np.asarray(tensor, dtype=float)
    dim = T.shape[-1]
    if require_positive is None:
        require_positive = dim == 3
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    rng = rng or np.random.default_rng(0)
    t = random_unit_symmetric(rng, dim, n_samples)
    vals = np.einsum("ijkl,nkl,nij->n", T, t, t)
    out = float(vals.min())
    if require_positive and out <= 0.0:
        raise NonEllipticError(f"contraction minimum {out:g} <= 0 over {n_samples} samples")
    return out


def random_spd_metric(rng: np.random.Generator, dim: int, max_condition: float = 100.0) -> np.ndarray:
    """Random SPD matrix with condition number bounded by ``max_condition``."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    cond = rng.uniform(1.0, max_condition)
    eigs = np.exp(rng.uniform(0.0, 1.0, dim) * np.log(cond))
    eigs = eigs / eigs.max()
    m = (q * eigs) @ q.T
    return 0.5 * (m + m.T)
