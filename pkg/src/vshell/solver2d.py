"""Finite element solver for the 2D viscoelastic generalized membrane problem.

The evolution in the scaled formulation reads, for every admissible eta,

    (a : gamma(xi(t)), gamma(eta)) + (b : gamma(xi'(t)), gamma(eta))
      - int_0^t exp(-k(t-s)) (c : gamma(xi(s)), gamma(eta)) ds
      = (phi(t), gamma(eta))

with the inner products weighted by sqrt(a) dy.  Time discretization is
backward Euler; the memory integral is advanced per quadrature point by the
exact exponential-integrator recursion, with the end-of-step strain treated
implicitly (its coefficient folds into the constant system matrix, so a
single factorization serves the whole run).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem
from .geometry import MidsurfaceChart, surface_frame
from .material import MaterialParams, membrane_tensors
from .memory import TimeGrid, conv_coefficients


class SingularSystemError(RuntimeError):
    """Factorization failed with delta = 0: the first-kind classification was wrong."""


@dataclass(frozen=True)
class KernelDiagnostic:
    """Spectral floor of the discrete membrane operator and its reading."""

    sigma_min: float
    norm_estimate: float
    tol: float
    kind: str                 # "first" or "degenerate"

    @property
    def is_first_kind(self) -> bool:
        return self.kind == "first"


@dataclass
class MembraneSystem:
    """Assembled operators and quadrature data of the membrane problem."""

    mesh: fem.Mesh2D
    chart: MidsurfaceChart
    params: MaterialParams
    dofmap: fem.DofMap
    K_a: sp.csr_matrix
    K_b: sp.csr_matrix
    K_c: sp.csr_matrix
    M: sp.csr_matrix
    strain_op: sp.csr_matrix      # (3 nqp, n_free): [g11; g22; g12] per qp
    qp_pts: np.ndarray            # (nqp, 2)
    qp_w: np.ndarray              # (nqp,) plain-measure weights w * detJ
    qp_sqrt_a: np.ndarray         # (nqp,)
    qp_a_ctr: np.ndarray          # (nqp, 2, 2)
    qp_c_tensor: np.ndarray       # (nqp, 2, 2, 2, 2)
    diagnostic: Optional[KernelDiagnostic] = None

    @property
    def n_free(self) -> int:
        return self.dofmap.n_free

    @property
    def n_qp(self) -> int:
        return self.qp_pts.shape[0]

    # -- strain evaluation and seminorms -----------------------------------

    def gamma_at_qp(self, xi: np.ndarray) -> np.ndarray:
        """Membrane strain channels (nqp, 3) = [g11, g22, g12] of a reduced vector."""
        return (self.strain_op @ xi).reshape(self.n_qp, 3)

    def seminorm(self, xi: np.ndarray) -> float:
        """Discrete membrane seminorm, plain dy measure (assembly quadrature)."""
        g = self.gamma_at_qp(xi)
        dens = g[:, 0] ** 2 + g[:, 1] ** 2 + 2.0 * g[:, 2] ** 2
        return float(np.sqrt(self.qp_w @ dens))

    def space_time_seminorm(self, states: np.ndarray, dt: float) -> float:
        s = np.array([self.seminorm(u) for u in states])
        return float(np.sqrt(np.trapezoid(s * s, dx=dt)))

    def elastic_energy(self, xi: np.ndarray) -> float:
        return float(0.5 * xi @ (self.K_a @ xi))

    def strain_load(self, s_qp: np.ndarray) -> np.ndarray:
        """Load vector of eta -> sum_ab int S^{ab} gamma_ab(eta) sqrt(a) dy.

        ``s_qp``: (nqp, 2, 2) symmetric densities at quadrature points.
        """
        wsa = self.qp_w * self.qp_sqrt_a
        stacked = np.stack([wsa * s_qp[:, 0, 0], wsa * s_qp[:, 1, 1],
                            2.0 * wsa * s_qp[:, 0, 1]], axis=1).ravel()
        return self.strain_op.T @ stacked

    def phi_load(self, phi_qp: np.ndarray) -> np.ndarray:
        return self.strain_load(np.asarray(phi_qp, dtype=float))

    def interpolate(self, field: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Nodal interpolant of an analytic field, restricted to free dofs."""
        vals = np.asarray(field(self.mesh.nodes), dtype=float)  # (nn, 3)
        return self.dofmap.restrict(vals.ravel())


@dataclass
class DisplacementHistory:
    """Reduced nodal trajectories xi^n and access helpers.

    ``memory_state`` holds the final per-quadrature-point convolution
    channels (g11, g22, g12) of the strain memory, when the run carried one.
    """

    grid: TimeGrid
    states: np.ndarray            # (N+1, n_free)
    system: MembraneSystem
    memory_state: Optional[np.ndarray] = None   # (n_qp, 3)

    def full(self, n: int) -> np.ndarray:
        """Full nodal field at step n, shape (n_nodes, 3)."""
        return self.system.dofmap.expand(self.states[n]).reshape(-1, 3)

    def seminorms(self) -> np.ndarray:
        return np.array([self.system.seminorm(u) for u in self.states])

    def energies(self) -> np.ndarray:
        return np.array([self.system.elastic_energy(u) for u in self.states])


def assemble_membrane(mesh: fem.Mesh2D, chart: MidsurfaceChart,
                      params: MaterialParams) -> MembraneSystem:
    """Assemble stiffness/viscosity/memory operators with 7-point quadrature.

    Dirichlet rows/columns on gamma0 are eliminated; all three operators are
    built from the same strain factorization so they share an exact kernel
    structure.
    """
    ref_pts, ref_w = fem.tri_quadrature()
    nq = len(ref_w)
    N, dN = fem.p2_tri_basis(ref_pts)
    detJ, invJT = fem.tri_affine_data(mesh)
    ne = mesh.n_elements

    qp_pts = fem.tri_qp_coords(mesh, ref_pts)             # (ne, nq, 2)
    qp_w = (ref_w[None, :] * detJ[:, None])               # (ne, nq)

    surf = surface_frame(chart, qp_pts.reshape(-1, 2))
    sqrt_a = surf.sqrt_a.reshape(ne, nq)
    tens = membrane_tensors(surf.a_ctr, params)
    Ta = tens.a.reshape(ne, nq, 2, 2, 2, 2)
    Tb = tens.b.reshape(ne, nq, 2, 2, 2, 2)
    Tc = tens.c.reshape(ne, nq, 2, 2, 2, 2)
    chris = surf.christoffel.reshape(ne, nq, 2, 2, 2)
    b_cov = surf.b_cov.reshape(ne, nq, 2, 2)

    # physical gradients of the six shape functions
    dNdy = np.einsum("edk,qak->eqad", invJT, dN)          # (ne, nq, 6, 2)

    # strain operator Gop[e,q,alpha,beta,a,p] = gamma_ab of basis (a, comp p)
    Gop = np.zeros((ne, nq, 2, 2, 6, 3))
    for al in range(2):
        for be in range(2):
            Gop[:, :, al, be, :, al] += 0.5 * dNdy[:, :, :, be]
            Gop[:, :, al, be, :, be] += 0.5 * dNdy[:, :, :, al]
    Gop[..., :2] -= np.einsum("eqpab,qn->eqabnp", chris, N)
    Gop[..., 2] -= np.einsum("eqab,qn->eqabn", b_cov, N)

    wsa = qp_w * sqrt_a

    def stiffness(T):
        Ke = np.einsum("eq,eqabst,eqstnr,eqabmp->empnr", wsa, T, Gop, Gop, optimize=True)
        return Ke.reshape(ne, 18, 18)

    conn_dofs = (3 * mesh.tris[:, :, None] + np.arange(3)[None, None, :]).reshape(ne, 18)
    rows, cols = fem.element_scatter_indices(conn_dofs)
    nn3 = 3 * mesh.n_nodes

    def build(T):
        Ke = stiffness(T)
        return fem.assemble_csr(rows, cols, Ke.ravel(), nn3)

    K_a_full = build(Ta)
    K_b_full = build(Tb)
    K_c_full = build(Tc)

    # component mass matrix (sqrt(a)-weighted)
    Me = np.einsum("eq,qm,qn->emn", wsa, N, N)
    Mfull = np.zeros((ne, 18, 18))
    for c in range(3):
        Mfull[:, c::3, c::3] = Me
    M_full = fem.assemble_csr(rows, cols, Mfull.ravel(), nn3)

    dofmap = fem.DofMap(mesh.n_nodes, mesh.gamma0)
    K_a = fem.restrict_matrix(K_a_full, dofmap)
    K_b = fem.restrict_matrix(K_b_full, dofmap)
    K_c = fem.restrict_matrix(K_c_full, dofmap)
    M = fem.restrict_matrix(M_full, dofmap)

    for name, K in (("K_a", K_a), ("K_b", K_b), ("K_c", K_c)):
        asym = abs(K - K.T).max()
        scale = max(abs(K).max(), 1.0)
        if asym > 1e-12 * scale:
            raise AssertionError(f"{name} asymmetry {asym:g} exceeds 1e-12 relative")

    # sparse strain evaluator rows: [(e*nq+q)*3 + comp]
    chans = np.stack([Gop[:, :, 0, 0], Gop[:, :, 1, 1], Gop[:, :, 0, 1]], axis=2)
    nqp = ne * nq
    r_idx = np.repeat(np.arange(nqp * 3), 18)
    c_idx = np.tile(conn_dofs[:, None, None, :], (1, nq, 3, 1)).ravel()
    vals = chans.reshape(ne, nq, 3, 18).ravel()
    free_cols = dofmap.full_to_free[c_idx]
    keep = free_cols >= 0
    E = sp.coo_matrix((vals[keep], (r_idx[keep], free_cols[keep])),
                      shape=(nqp * 3, dofmap.n_free)).tocsr()

    return MembraneSystem(
        mesh=mesh, chart=chart, params=params, dofmap=dofmap,
        K_a=K_a, K_b=K_b, K_c=K_c, M=M, strain_op=E,
        qp_pts=qp_pts.reshape(-1, 2), qp_w=qp_w.ravel(),
        qp_sqrt_a=sqrt_a.ravel(), qp_a_ctr=surf.a_ctr,
        qp_c_tensor=tens.c,
    )


def _eig_extreme(K: sp.csr_matrix, which: str) -> float:
    n = K.shape[0]
    if n <= 600:
        w = np.linalg.eigvalsh(K.toarray())
        return float(w[0] if which == "min" else w[-1])
    if which == "max":
        return float(spla.eigsh(K, k=1, which="LA", return_eigenvectors=False)[0])
    # smallest eigenvalue of a PSD matrix by shifted inverse iteration
    scale = float(abs(K).max())
    tau = 1e-10 * scale
    lu = spla.splu((K + tau * sp.identity(n, format="csr")).tocsc())
    op = spla.LinearOperator((n, n), matvec=lu.solve)
    mu = float(spla.eigsh(op, k=1, which="LM", return_eigenvectors=False)[0])
    return max(1.0 / mu - tau, 0.0)


def kernel_diagnostic(system: MembraneSystem, tol_factor: float = 1e-10) -> KernelDiagnostic:
    """Classify the discrete problem by the spectral floor of K_a.

    K_a shares its kernel with the discrete membrane strain map, so a
    positive floor certifies that the seminorm is a norm on the discrete
    space ("first kind (discrete)"); otherwise the problem needs the
    Tikhonov term.  The result is cached on the system.
    """
    lam_max = _eig_extreme(system.K_a, "max")
    lam_min = _eig_extreme(system.K_a, "min")
    tol = tol_factor * lam_max
    kind = "first" if lam_min > tol else "degenerate"
    diag = KernelDiagnostic(sigma_min=lam_min, norm_estimate=lam_max, tol=tol, kind=kind)
    system.diagnostic = diag
    return diag


def _resolve_phi(phi, grid: TimeGrid, system: MembraneSystem):
    if phi is None:
        zero = np.zeros((system.n_qp, 2, 2))
        return lambda n: zero
    if isinstance(phi, np.ndarray):
        if phi.shape[0] != grid.N + 1:
            raise ValueError("phi sample array must have N+1 time slabs")
        return lambda n: phi[n]
    if callable(phi):
        times = grid.times
        return lambda n: np.asarray(phi(times[n], system.qp_pts), dtype=float)
    raise TypeError("phi must be None, an (N+1, nqp, 2, 2) array, or callable(t, pts)")


def solve_membrane(system: MembraneSystem, phi, grid: TimeGrid,
                   xi0: Optional[np.ndarray] = None,
                   delta: Optional[float] = None,
                   include_memory: bool = True,
                   form_scale: float = 1.0,
                   load_scale: float = 1.0) -> DisplacementHistory:
    """March the membrane evolution with backward Euler + exact memory update.

    phi : None, (N+1, nqp, 2, 2) samples, or callable (t, qp_pts) -> (nqp, 2, 2)
    delta : Tikhonov weight; default 0 for first-kind systems, else
        1e-8 * trace(K_b)/ndof.  The classification runs lazily if needed.
    form_scale / load_scale : common prefactor of the three bilinear forms
        and of the load (used by the de-scaled problem).
    """
    if not np.any(system.mesh.gamma0):
        raise ValueError("solve requires a nonempty clamped boundary gamma0")
    if system.diagnostic is None:
        kernel_diagnostic(system)
    if delta is None:
        if system.diagnostic.is_first_kind:
            delta = 0.0
        else:
            delta = 1e-8 * system.K_b.diagonal().sum() / system.n_free

    dt = grid.dt
    k = system.params.k
    decay, c0, c1 = conv_coefficients(k, dt)
    s = form_scale

    A = s * ((system.K_b + delta * system.M) / dt + system.K_a)
    if include_memory:
        A = A - s * c1 * system.K_c
    try:
        lu = spla.splu(sp.csc_matrix(A))
        probe = lu.solve(np.ones(system.n_free))
        if not np.all(np.isfinite(probe)):
            raise RuntimeError("non-finite factorization")
    except RuntimeError as exc:
        sig = system.diagnostic.sigma_min if system.diagnostic else float("nan")
        raise SingularSystemError(
            f"membrane system factorization failed with delta={delta:g} "
            f"(sigma_min={sig:g}); classification was likely wrong") from exc

    phi_at = _resolve_phi(phi, grid, system)
    xi = np.zeros(system.n_free) if xi0 is None else np.asarray(xi0, dtype=float).copy()
    states = np.zeros((grid.N + 1, system.n_free))
    states[0] = xi

    wsa = system.qp_w * system.qp_sqrt_a
    # memory state per qp channel of the symmetric strain (g11, g22, g12)
    H = np.zeros((system.n_qp, 3))
    gam_prev = system.gamma_at_qp(xi)

    Kb_dt = s * (system.K_b + delta * system.M) / dt
    for n in range(grid.N):
        rhs = load_scale * system.phi_load(phi_at(n + 1)) + Kb_dt @ xi
        if include_memory:
            H_hat = decay * H + c0 * gam_prev
            # memory load: (c : H_hat) tested against strains of eta
            Hfull = np.empty((system.n_qp, 2, 2))
            Hfull[:, 0, 0] = H_hat[:, 0]
            Hfull[:, 1, 1] = H_hat[:, 1]
            Hfull[:, 0, 1] = H_hat[:, 2]
            Hfull[:, 1, 0] = H_hat[:, 2]
            S = np.einsum("qabst,qst->qab", system.qp_c_tensor, Hfull)
            rhs = rhs + s * system.strain_load(S)
        xi = lu.solve(rhs)
        if not np.all(np.isfinite(xi)):
            sig = system.diagnostic.sigma_min if system.diagnostic else float("nan")
            raise SingularSystemError(
                f"solve produced non-finite state at step {n + 1} "
                f"(delta={delta:g}, sigma_min={sig:g})")
        gam = system.gamma_at_qp(xi)
        if include_memory:
            H = H_hat + c1 * gam
        gam_prev = gam
        states[n + 1] = xi

    return DisplacementHistory(grid=grid, states=states, system=system,
                               memory_state=H if include_memory else None)


def solve_descaled(system: MembraneSystem, phi_eps, eps: float, grid: TimeGrid,
                   xi0: Optional[np.ndarray] = None,
                   delta: Optional[float] = None) -> DisplacementHistory:
    """De-scaled problem: all three forms carry the prefactor eps.

    With phi^{ab,eps} = eps * phi^{ab} the output equals the scaled solution
    (the prefactor cancels); an un-rescaled load yields the 1/eps multiple.
    """
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    return solve_membrane(system, phi_eps, grid, xi0=xi0, delta=delta,
                          form_scale=eps, load_scale=1.0)
