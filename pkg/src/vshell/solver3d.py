"""Finite element solver for the scaled 3D viscoelastic shell problem on
Omega = omega x (-1, 1).

Elements are prisms (quadratic triangles in-plane, P1/P2 line through the
thickness) on the fixed parameter domain; the 1/eps factors of the scaled
strains and the eps-dependent metric coefficients carry all the thinness.
Loads enter in admissible-force form: L(t)(v) = int F^{ij}(t) e_{i||j}(eps;
v) sqrt(g(eps)) dx.  Time discretization is backward Euler with one
factorization per run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem
from .geometry import MidsurfaceChart, volume_metrics
from .kinematics import thickness_average_weights
from .material import MaterialParams, tensor3d_elastic, tensor3d_viscous
from .memory import TimeGrid

#: Voigt component order for symmetric 3x3 strain/stress samples
VOIGT = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


class NonSPDError(RuntimeError):
    """The viscosity operator failed its positivity check after assembly."""


@dataclass(frozen=True)
class AdmissibleForces:
    """Symmetric force field F^{ij}(t, y, x3) in admissible-force form.

    ``spatial(y (n,2), x3 (n,)) -> (n, 3, 3)`` and a scalar ``profile(t)``
    describe separable loads (the common case: one spatial assembly per
    run); a general ``sampler(t, y, x3) -> (n, 3, 3)`` overrides them.
    """

    spatial: Optional[Callable] = None
    profile: Optional[Callable[[float], float]] = None
    sampler: Optional[Callable] = None

    def __post_init__(self):
        if self.sampler is None and (self.spatial is None or self.profile is None):
            raise ValueError("provide either sampler or (spatial, profile)")

    @property
    def separable(self) -> bool:
        return self.sampler is None

    def at(self, t: float, y: np.ndarray, x3: np.ndarray) -> np.ndarray:
        if self.sampler is not None:
            return np.asarray(self.sampler(t, y, x3), dtype=float)
        return float(self.profile(t)) * np.asarray(self.spatial(y, x3), dtype=float)


@dataclass
class ShellSystem3D:
    """Assembled scaled-shell operators plus quadrature-level evaluators."""

    mesh: fem.Mesh3D
    chart: MidsurfaceChart
    params: MaterialParams
    eps: float
    dofmap: fem.DofMap
    K: sp.csr_matrix              # elastic operator (constrained dofs)
    C: sp.csr_matrix              # viscous operator, SPD
    qp_y: np.ndarray              # (nqp, 2) in-plane quadrature coordinates
    qp_x3: np.ndarray             # (nqp,)
    qp_w: np.ndarray              # (nqp,) plain-measure weights
    qp_sqrt_g: np.ndarray         # (nqp,)
    strain_op: sp.csr_matrix      # (6 nqp, n_free), Voigt rows per qp
    grad3_op: sp.csr_matrix       # (3 nqp, n_free): d_3 of components at qps
    value_op: Optional[sp.csr_matrix] = None    # (3 nqp, n_free), with_h1_ops
    grad12_op: Optional[sp.csr_matrix] = None   # (6 nqp, n_free), with_h1_ops
    A_qp: Optional[np.ndarray] = None           # (nqp, 3,3,3,3)
    B_qp: Optional[np.ndarray] = None

    @property
    def n_free(self) -> int:
        return self.dofmap.n_free

    @property
    def n_qp(self) -> int:
        return self.qp_y.shape[0]

    def strains_at_qp(self, u: np.ndarray) -> np.ndarray:
        """Scaled strains of a reduced vector, (nqp, 6) in VOIGT order."""
        return (self.strain_op @ u).reshape(self.n_qp, 6)

    def strain_sq_norm(self, u: np.ndarray) -> float:
        """sum_ij |e_{i||j}(eps; u)|^2_{0,Omega}, plain measure."""
        e = self.strains_at_qp(u)
        dens = (e[:, 0] ** 2 + e[:, 1] ** 2 + e[:, 2] ** 2
                + 2.0 * (e[:, 3] ** 2 + e[:, 4] ** 2 + e[:, 5] ** 2))
        return float(self.qp_w @ dens)

    def h1_sq_norm(self, u: np.ndarray) -> float:
        """Squared H1(Omega) norm (values plus all first partials)."""
        if self.value_op is None or self.grad12_op is None:
            raise ValueError("system assembled without H1 evaluators (with_h1_ops=True)")
        v = (self.value_op @ u).reshape(self.n_qp, 3)
        d3 = (self.grad3_op @ u).reshape(self.n_qp, 3)
        g12 = (self.grad12_op @ u).reshape(self.n_qp, 2, 3)
        dens = (np.sum(v * v, axis=1) + np.sum(d3 * d3, axis=1)
                + np.sum(g12 * g12, axis=(1, 2)))
        return float(self.qp_w @ dens)

    def d3_sq_norm(self, u: np.ndarray) -> float:
        """|d_3 u|^2_{0,Omega} of the reduced vector, plain measure."""
        d3 = (self.grad3_op @ u).reshape(self.n_qp, 3)
        return float(self.qp_w @ np.sum(d3 * d3, axis=1))

    def elastic_energy(self, u: np.ndarray) -> float:
        return float(0.5 * u @ (self.K @ u))

    def interpolate(self, field_fn: Callable) -> np.ndarray:
        """Nodal interpolant of ``field(y (n,2), x3 (n,)) -> (n, 3)``, reduced."""
        coords = self.mesh.node_coords()
        vals = np.asarray(field_fn(coords[:, :2], coords[:, 2]), dtype=float)
        return self.dofmap.restrict(vals.ravel())


@dataclass
class DisplacementHistory3D:
    grid: TimeGrid
    states: np.ndarray            # (N+1, n_free)
    system: ShellSystem3D

    def full(self, n: int) -> np.ndarray:
        return self.system.dofmap.expand(self.states[n]).reshape(-1, 3)

    def energies(self) -> np.ndarray:
        return np.array([self.system.elastic_energy(u) for u in self.states])


def assemble_3d(mesh: fem.Mesh3D, chart: MidsurfaceChart, eps: float,
                params: MaterialParams, chunk: int = 128,
                n_thickness_qp: int = 3, with_h1_ops: bool = False,
                spd_check_vectors: int = 20) -> ShellSystem3D:
    """Assemble K(eps), C(eps) and the quadrature-point evaluators.

    Element blocks are produced in chunks of 2D elements to bound memory;
    assembly order is fixed, so output is deterministic.  C(eps) positivity
    is verified by factorizability plus random-vector checks.  The H1-norm
    evaluators are only built on request (Korn-type diagnostics).
    """
    mesh2d = mesh.mesh2d
    tri_pts, tri_w = fem.tri_quadrature()
    gz, gw = np.polynomial.legendre.leggauss(n_thickness_qp)
    nq2, nq1 = len(tri_w), len(gz)
    nqe = nq2 * nq1
    deg = mesh.degree
    nb1 = deg + 1
    nen = 6 * nb1
    nd = 3 * nen

    N2, dN2 = fem.p2_tri_basis(tri_pts)
    M1, dM1 = fem.line_basis(gz, deg)
    detJ, invJT = fem.tri_affine_data(mesh2d)
    qp2 = fem.tri_qp_coords(mesh2d, tri_pts)          # (ne2, nq2, 2)
    ne2 = mesh2d.n_elements
    nlay = mesh.n_layers
    h3 = 2.0 / nlay

    Nref = np.einsum("qa,zb->qzab", N2, M1).reshape(nq2, nq1, nen)
    d3ref = np.einsum("qa,zb->qzab", N2, dM1 * (2.0 / h3)).reshape(nq2, nq1, nen)
    layer_mid = -1.0 + h3 * (np.arange(nlay) + 0.5)
    x3_qp = layer_mid[:, None] + 0.5 * h3 * gz[None, :]          # (nlay, nq1)

    nn3 = 3 * mesh.n_nodes
    dofmap = fem.DofMap(mesh.n_nodes, mesh.gamma0)

    K_blocks, C_blocks = [], []
    E_blocks, D3_blocks = [], []
    V_blocks, G12_blocks = ([], []) if with_h1_ops else (None, None)
    qp_y_list, qp_x3_list, qp_w_list, qp_sg_list = [], [], [], []
    A_list, B_list = [], []

    for start in range(0, ne2, chunk):
        e2 = np.arange(start, min(start + chunk, ne2))
        nce = len(e2)
        dN2dy = np.einsum("edk,qak->eqad", invJT[e2], dN2)        # (nce, nq2, 6, 2)

        for lay in range(nlay):
            x3q = x3_qp[lay]
            ys = np.repeat(qp2[e2].reshape(nce * nq2, 2), nq1, axis=0)
            x3s = np.tile(x3q, nce * nq2)
            vol = volume_metrics(chart, eps, ys, x3s)
            sg = vol.sqrt_g.reshape(nce, nq2, nq1)
            A = tensor3d_elastic(vol.g_ctr, params).reshape(nce, nq2, nq1, 3, 3, 3, 3)
            B = tensor3d_viscous(vol.g_ctr, params).reshape(nce, nq2, nq1, 3, 3, 3, 3)
            G = vol.gamma3d.reshape(nce, nq2, nq1, 3, 3, 3)

            Nloc = np.broadcast_to(Nref, (nce, nq2, nq1, nen))
            d12 = np.einsum("eqad,zb->eqzabd", dN2dy, M1).reshape(nce, nq2, nq1, nen, 2)
            d3 = np.broadcast_to(d3ref, (nce, nq2, nq1, nen))

            # scaled-strain operator S[e, q2, q1, i, j, n, p]
            S = np.zeros((nce, nq2, nq1, 3, 3, nen, 3))
            for al in range(2):
                for be in range(2):
                    S[..., al, be, :, al] += 0.5 * d12[..., be]
                    S[..., al, be, :, be] += 0.5 * d12[..., al]
                S[..., al, 2, :, al] += 0.5 * d3 / eps
                S[..., al, 2, :, 2] += 0.5 * d12[..., al]
                S[..., 2, al, :, al] += 0.5 * d3 / eps
                S[..., 2, al, :, 2] += 0.5 * d12[..., al]
            S[..., 2, 2, :, 2] += d3 / eps
            S -= np.einsum("eqzpij,eqzn->eqzijnp", G, Nloc)

            wq = (tri_w[None, :, None] * gw[None, None, :] * (h3 / 2.0)
                  * detJ[e2][:, None, None])
            wsg = wq * sg

            Ke = np.einsum("eqz,eqzijkl,eqzklnr,eqzijmp->empnr", wsg, A,
                           S, S, optimize=True).reshape(nce, nd, nd)
            Ce = np.einsum("eqz,eqzijkl,eqzklnr,eqzijmp->empnr", wsg, B,
                           S, S, optimize=True).reshape(nce, nd, nd)

            n2 = mesh2d.tris[e2]
            lvl0 = deg * lay
            node_ids = (n2[:, :, None] * mesh.n_levels
                        + (lvl0 + np.arange(nb1))[None, None, :]).reshape(nce, nen)
            conn_dofs = (3 * node_ids[:, :, None] + np.arange(3)).reshape(nce, nd)
            r, c = fem.element_scatter_indices(conn_dofs)
            K_blocks.append(sp.coo_matrix((Ke.ravel(), (r, c)), shape=(nn3, nn3)).tocsr())
            C_blocks.append(sp.coo_matrix((Ce.ravel(), (r, c)), shape=(nn3, nn3)).tocsr())

            qp_y_list.append(ys)
            qp_x3_list.append(x3s)
            qp_w_list.append(wq.ravel())
            qp_sg_list.append(sg.ravel())
            A_list.append(A.reshape(-1, 3, 3, 3, 3))
            B_list.append(B.reshape(-1, 3, 3, 3, 3))

            free_cols = dofmap.full_to_free[conn_dofs]            # (nce, nd)
            nqp_blk = nce * nqe

            def rowblock(values, n_rows_per_qp):
                """Sparse block with rows (qp-local, row) and free columns."""
                vals = values.reshape(nce, nqe, n_rows_per_qp, nd)
                rr = np.repeat(np.arange(nqp_blk * n_rows_per_qp), nd)
                cc = np.tile(free_cols[:, None, None, :],
                             (1, nqe, n_rows_per_qp, 1)).ravel()
                keep = cc >= 0
                return sp.coo_matrix(
                    (vals.ravel()[keep], (rr[keep], cc[keep])),
                    shape=(nqp_blk * n_rows_per_qp, dofmap.n_free)).tocsr()

            Sv = np.stack([S[..., i, j, :, :] for (i, j) in VOIGT], axis=3)
            E_blocks.append(rowblock(Sv, 6))

            Dv = np.zeros((nce, nq2, nq1, 3, nen, 3))
            for comp in range(3):
                Dv[..., comp, :, comp] = d3
            D3_blocks.append(rowblock(Dv, 3))

            if with_h1_ops:
                Vv = np.zeros((nce, nq2, nq1, 3, nen, 3))
                for comp in range(3):
                    Vv[..., comp, :, comp] = Nloc
                V_blocks.append(rowblock(Vv, 3))
                Gv = np.zeros((nce, nq2, nq1, 2, 3, nen, 3))
                for dd in range(2):
                    for comp in range(3):
                        Gv[..., dd, comp, :, comp] = d12[..., dd]
                G12_blocks.append(rowblock(Gv, 6))

    K_full = K_blocks[0]
    C_full = C_blocks[0]
    for kb, cb in zip(K_blocks[1:], C_blocks[1:]):
        K_full = K_full + kb
        C_full = C_full + cb
    K = fem.restrict_matrix(K_full, dofmap)
    C = fem.restrict_matrix(C_full, dofmap)

    system = ShellSystem3D(
        mesh=mesh, chart=chart, params=params, eps=float(eps), dofmap=dofmap,
        K=K, C=C,
        qp_y=np.concatenate(qp_y_list), qp_x3=np.concatenate(qp_x3_list),
        qp_w=np.concatenate(qp_w_list), qp_sqrt_g=np.concatenate(qp_sg_list),
        strain_op=sp.vstack(E_blocks).tocsr(),
        grad3_op=sp.vstack(D3_blocks).tocsr(),
        value_op=sp.vstack(V_blocks).tocsr() if with_h1_ops else None,
        grad12_op=sp.vstack(G12_blocks).tocsr() if with_h1_ops else None,
        A_qp=np.concatenate(A_list), B_qp=np.concatenate(B_list),
    )
    _verify_spd(system, spd_check_vectors)
    return system


def _verify_spd(system: ShellSystem3D, n_vectors: int):
    rng = np.random.default_rng(12345)
    kmax = abs(system.K).max()
    for _ in range(n_vectors):
        x = rng.standard_normal(system.n_free)
        q = x @ (system.C @ x)
        if not (q > 0.0):
            raise NonSPDError(f"C(eps) indefinite: x.Cx = {q:g}")
        if x @ (system.K @ x) < -1e-12 * kmax:
            raise NonSPDError("K(eps) lost positive semidefiniteness")


def assemble_admissible_rhs(system: ShellSystem3D, forces: AdmissibleForces,
                            t: float) -> np.ndarray:
    """Load vector of v -> int F^{ij}(t) e_{i||j}(eps; v) sqrt(g) dx."""
    F = forces.at(t, system.qp_y, system.qp_x3)
    return strain_load(system, F)


def strain_load(system: ShellSystem3D, F_qp: np.ndarray) -> np.ndarray:
    """Load vector for symmetric densities F (nqp, 3, 3) tested against strains."""
    wsg = system.qp_w * system.qp_sqrt_g
    stacked = np.stack([
        wsg * F_qp[:, 0, 0], wsg * F_qp[:, 1, 1], wsg * F_qp[:, 2, 2],
        2.0 * wsg * F_qp[:, 0, 1], 2.0 * wsg * F_qp[:, 0, 2], 2.0 * wsg * F_qp[:, 1, 2],
    ], axis=1).ravel()
    return system.strain_op.T @ stacked


def body_traction_load(system: ShellSystem3D, body=None, traction=None,
                       t: float = 0.0) -> np.ndarray:
    """Convenience adapter: (f^i, h^i) body/traction data to a load vector.

    ``body(t, y, x3) -> (n, 3)`` is integrated over the volume and
    ``traction(t, y, x3) -> (n, 3)`` over both transverse faces x3 = +-1,
    each against the displacement components with the sqrt(g) weight.  For
    diagnostic runs only: convergence experiments take admissible F^{ij}
    directly.  The volume part needs a system assembled with
    ``with_h1_ops=True``.
    """
    L = np.zeros(system.n_free)
    if body is not None:
        if system.value_op is None:
            raise ValueError("body loads need the value evaluator: assemble "
                             "the system with with_h1_ops=True")
        f = np.asarray(body(t, system.qp_y, system.qp_x3), dtype=float)
        wsg = system.qp_w * system.qp_sqrt_g
        L = L + system.value_op.T @ (wsg[:, None] * f).ravel()
    if traction is not None:
        mesh = system.mesh
        mesh2d = mesh.mesh2d
        tri_pts, tri_w = fem.tri_quadrature()
        N2, _ = fem.p2_tri_basis(tri_pts)
        detJ, _ = fem.tri_affine_data(mesh2d)
        qp2 = fem.tri_qp_coords(mesh2d, tri_pts)
        full = np.zeros(3 * mesh.n_nodes)
        for x3_face, lvl in ((1.0, mesh.n_levels - 1), (-1.0, 0)):
            ys = qp2.reshape(-1, 2)
            vol = volume_metrics(system.chart, system.eps, ys,
                                 np.full(len(ys), x3_face))
            sg = vol.sqrt_g.reshape(mesh2d.n_elements, -1)
            h = np.asarray(traction(t, ys, np.full(len(ys), x3_face)),
                           dtype=float).reshape(mesh2d.n_elements, -1, 3)
            w = tri_w[None, :] * detJ[:, None] * sg
            contrib = np.einsum("eq,qa,eqc->eac", w, N2, h)
            nodes3 = mesh2d.tris * mesh.n_levels + lvl
            dofs = (3 * nodes3[:, :, None] + np.arange(3)).reshape(-1)
            np.add.at(full, dofs, contrib.reshape(-1))
        L = L + system.dofmap.restrict(full)
    return L


def solve_3d(system: ShellSystem3D, forces: Optional[AdmissibleForces],
             grid: TimeGrid, u0: Optional[np.ndarray] = None) -> DisplacementHistory3D:
    """Backward-Euler march (C/dt + K) u^{n+1} = L^{n+1} + C u^n / dt."""
    if not np.any(system.mesh.gamma0):
        raise ValueError("solve requires a nonempty clamped boundary Gamma0")
    dt = grid.dt
    A = sp.csc_matrix(system.C / dt + system.K)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise NonSPDError(f"factorization of C/dt + K failed: {exc}") from exc

    u = np.zeros(system.n_free) if u0 is None else np.asarray(u0, dtype=float).copy()
    if u0 is not None and np.any(u != 0.0):
        warnings.warn("nonzero initial state violates the zero-initial-strain "
                      "hypothesis of the convergence experiment", stacklevel=2)

    load_const = None
    if forces is not None and forces.separable:
        load_const = strain_load(system, np.asarray(
            forces.spatial(system.qp_y, system.qp_x3), dtype=float))

    states = np.zeros((grid.N + 1, system.n_free))
    states[0] = u
    times = grid.times
    for n in range(grid.N):
        if forces is None:
            L = np.zeros(system.n_free)
        elif load_const is not None:
            L = float(forces.profile(times[n + 1])) * load_const
        else:
            L = assemble_admissible_rhs(system, forces, times[n + 1])
        u = lu.solve(L + system.C @ u / dt)
        states[n + 1] = u
    return DisplacementHistory3D(grid=grid, states=states, system=system)


def stress_recovery(system: ShellSystem3D, history: DisplacementHistory3D) -> np.ndarray:
    """Stress samples sigma^{ij}(eps) = A:e + B:e_dot at quadrature points.

    Strain rates use the same backward difference as the time march; the
    initial slab keeps e_dot(0) = 0 (zero-strain natural start).
    Returns (N+1, nqp, 3, 3).
    """
    grid = history.grid
    nqp = system.n_qp
    out = np.zeros((grid.N + 1, nqp, 3, 3))

    def full_strain(u):
        ev = system.strains_at_qp(u)
        e = np.zeros((nqp, 3, 3))
        for k, (i, j) in enumerate(VOIGT):
            e[:, i, j] = ev[:, k]
            e[:, j, i] = ev[:, k]
        return e

    e_prev = full_strain(history.states[0])
    for n in range(grid.N + 1):
        e_n = full_strain(history.states[n])
        e_dot = (e_n - e_prev) / grid.dt if n > 0 else np.zeros_like(e_n)
        out[n] = (np.einsum("qijkl,qkl->qij", system.A_qp, e_n)
                  + np.einsum("qijkl,qkl->qij", system.B_qp, e_dot))
        e_prev = e_n
    return out


def average_to_2d(history: DisplacementHistory3D) -> np.ndarray:
    """Transverse averages of every step as reduced 2D dof vectors.

    Exact for the through-thickness polynomial order; the result lives on
    the underlying Mesh2D with matching gamma0 constraints, directly
    comparable in the 2D system's seminorms.  Returns (N+1, n_free_2d).
    """
    mesh = history.system.mesh
    mesh2d = mesh.mesh2d
    _, wts = thickness_average_weights(mesh.n_layers, mesh.degree)
    nlev = mesh.n_levels

    nsteps = len(history.states)
    full = np.array([history.system.dofmap.expand(u) for u in history.states])
    full = full.reshape(nsteps, mesh2d.n_nodes, nlev, 3)
    avg = np.einsum("l,tnlc->tnc", wts, full)

    dof2d = fem.DofMap(mesh2d.n_nodes, mesh2d.gamma0)
    return np.stack([dof2d.restrict(a.reshape(-1)) for a in avg])
