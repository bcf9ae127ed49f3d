"""Finite element plumbing shared by the 2D membrane and 3D shell solvers.

All elements live on the *parameter* domain (omega, or Omega = omega x
(-1,1)); the shell geometry enters only through coefficient fields at
quadrature points, so element maps are affine and Jacobians exact.

Meshes are structured triangulations of the chart's parameter rectangle with
quadratic (6-node) triangles; 3D meshes extrude them into prisms with a P1
or P2 through-thickness line.  Node numbering, element order and assembly
order are all deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
import scipy.sparse as sp


class MeshError(ValueError):
    pass


# ---------------------------------------------------------------------------
# reference elements and quadrature
# ---------------------------------------------------------------------------

def tri_quadrature():
    """7-point degree-5 rule on the reference triangle {x>=0, y>=0, x+y<=1}."""
    s15 = np.sqrt(15.0)
    g1 = (6.0 - s15) / 21.0
    g2 = (6.0 + s15) / 21.0
    w1 = (155.0 - s15) / 2400.0
    w2 = (155.0 + s15) / 2400.0
    pts = [(1.0 / 3.0, 1.0 / 3.0),
           (g1, g1), (1.0 - 2.0 * g1, g1), (g1, 1.0 - 2.0 * g1),
           (g2, g2), (1.0 - 2.0 * g2, g2), (g2, 1.0 - 2.0 * g2)]
    wts = [9.0 / 80.0, w1, w1, w1, w2, w2, w2]
    return np.array(pts), np.array(wts)


def p2_tri_basis(pts: np.ndarray):
    """Quadratic triangle shape functions and reference gradients at points.

    Node order: 3 vertices (0,0), (1,0), (0,1), then midpoints of edges
    (0-1), (1-2), (2-0).  Returns (N (npts, 6), dN (npts, 6, 2)).
    """
    x, y = pts[:, 0], pts[:, 1]
    l0 = 1.0 - x - y
    N = np.stack([
        l0 * (2.0 * l0 - 1.0),
        x * (2.0 * x - 1.0),
        y * (2.0 * y - 1.0),
        4.0 * l0 * x,
        4.0 * x * y,
        4.0 * y * l0,
    ], axis=1)
    dN = np.empty((len(x), 6, 2))
    dN[:, 0, 0] = 1.0 - 4.0 * l0
    dN[:, 0, 1] = 1.0 - 4.0 * l0
    dN[:, 1, 0] = 4.0 * x - 1.0
    dN[:, 1, 1] = 0.0
    dN[:, 2, 0] = 0.0
    dN[:, 2, 1] = 4.0 * y - 1.0
    dN[:, 3, 0] = 4.0 * (l0 - x)
    dN[:, 3, 1] = -4.0 * x
    dN[:, 4, 0] = 4.0 * y
    dN[:, 4, 1] = 4.0 * x
    dN[:, 5, 0] = -4.0 * y
    dN[:, 5, 1] = 4.0 * (l0 - y)
    return N, dN


def line_basis(zeta: np.ndarray, degree: int):
    """1D Lagrange basis on [-1, 1] at points, (M (npts, nb), dM (npts, nb))."""
    zeta = np.asarray(zeta, dtype=float)
    if degree == 1:
        M = np.stack([(1.0 - zeta) / 2.0, (1.0 + zeta) / 2.0], axis=1)
        dM = np.stack([np.full_like(zeta, -0.5), np.full_like(zeta, 0.5)], axis=1)
    elif degree == 2:
        M = np.stack([zeta * (zeta - 1.0) / 2.0, 1.0 - zeta**2, zeta * (zeta + 1.0) / 2.0], axis=1)
        dM = np.stack([zeta - 0.5, -2.0 * zeta, zeta + 0.5], axis=1)
    else:
        raise ValueError("through-thickness degree must be 1 or 2")
    return M, dM


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

GAMMA0_SIDES = ("y1min", "y1max", "y2min", "y2max")


@dataclass(frozen=True)
class Mesh2D:
    """Structured P2 triangulation of a parameter rectangle.

    ``nodes`` lie on the half-step grid so every grid point is a P2 node;
    ``tris`` holds the 6 global node ids per element (vertices then edge
    midpoints).  ``gamma0`` is a boolean node mask of the clamped boundary
    part (may be empty for unconstrained assembly experiments).
    """

    nodes: np.ndarray        # (nn, 2)
    tris: np.ndarray         # (ne, 6) int
    gamma0: np.ndarray       # (nn,) bool
    shape: tuple             # (nx, ny) cells

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.tris.shape[0]


def rect_mesh2d(domain, nx: int, ny: int, gamma0_sides=("y1min",)) -> Mesh2D:
    """nx x ny structured mesh of the rectangle, each cell split into 2 triangles."""
    (x0, x1), (y0, y1) = domain
    if nx < 1 or ny < 1:
        raise MeshError("need at least one cell per direction")
    mx, my = 2 * nx + 1, 2 * ny + 1
    xs = np.linspace(x0, x1, mx)
    ys = np.linspace(y0, y1, my)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)

    def nid(ix, iy):
        return ix * my + iy

    tris = []
    for i in range(nx):
        for j in range(ny):
            bx, by = 2 * i, 2 * j
            v00 = nid(bx, by)
            v10 = nid(bx + 2, by)
            v01 = nid(bx, by + 2)
            v11 = nid(bx + 2, by + 2)
            # lower triangle (v00, v10, v11)
            tris.append([v00, v10, v11,
                         nid(bx + 1, by), nid(bx + 2, by + 1), nid(bx + 1, by + 1)])
            # upper triangle (v00, v11, v01)
            tris.append([v00, v11, v01,
                         nid(bx + 1, by + 1), nid(bx + 1, by + 2), nid(bx, by + 1)])
    tris = np.array(tris, dtype=np.int64)

    gamma0 = np.zeros(nodes.shape[0], dtype=bool)
    for side in gamma0_sides or ():
        if side not in GAMMA0_SIDES:
            raise MeshError(f"unknown gamma0 side '{side}'")
        if side == "y1min":
            gamma0 |= np.isclose(nodes[:, 0], x0)
        elif side == "y1max":
            gamma0 |= np.isclose(nodes[:, 0], x1)
        elif side == "y2min":
            gamma0 |= np.isclose(nodes[:, 1], y0)
        else:
            gamma0 |= np.isclose(nodes[:, 1], y1)

    mesh = Mesh2D(nodes=nodes, tris=tris, gamma0=gamma0, shape=(nx, ny))
    _check_orientation(mesh)
    return mesh


def _check_orientation(mesh: Mesh2D):
    v = mesh.nodes[mesh.tris[:, :3]]
    det = ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
           - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1]))
    if np.any(det <= 0.0):
        raise MeshError("degenerate or inverted triangle in mesh")


@dataclass(frozen=True)
class Mesh3D:
    """Prism extrusion of a Mesh2D through x3 in [-1, 1].

    Node (i2d, level) has id ``i2d * n_levels + level``; the clamped set
    Gamma0 is exactly the extrusion of gamma0, so transverse averaging maps
    onto the 2D dof layout without interpolation.
    """

    mesh2d: Mesh2D
    levels: np.ndarray       # (n_levels,) x3 values
    degree: int              # through-thickness degree (1 or 2)
    n_layers: int

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def n_nodes(self) -> int:
        return self.mesh2d.n_nodes * self.n_levels

    @property
    def n_elements(self) -> int:
        return self.mesh2d.n_elements * self.n_layers

    def node_id(self, i2d, level):
        return i2d * self.n_levels + level

    @property
    def gamma0(self) -> np.ndarray:
        return np.repeat(self.mesh2d.gamma0, self.n_levels)

    def node_coords(self) -> np.ndarray:
        """(n_nodes, 3) array of (y1, y2, x3) parameter coordinates."""
        y = np.repeat(self.mesh2d.nodes, self.n_levels, axis=0)
        x3 = np.tile(self.levels, self.mesh2d.n_nodes)
        return np.concatenate([y, x3[:, None]], axis=1)


def extrude_mesh(mesh2d: Mesh2D, n_layers: int, degree: int = 2) -> Mesh3D:
    if n_layers < 2:
        raise MeshError("need at least 2 through-thickness layers")
    if degree not in (1, 2):
        raise MeshError("through-thickness degree must be 1 or 2")
    levels = np.linspace(-1.0, 1.0, n_layers * degree + 1)
    return Mesh3D(mesh2d=mesh2d, levels=levels, degree=degree, n_layers=n_layers)


# ---------------------------------------------------------------------------
# dof management
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DofMap:
    """Vector-valued dof numbering with Dirichlet elimination.

    Full dof of node n, component c is ``3 n + c``; ``free`` lists the kept
    dofs and ``full_to_free`` maps eliminated dofs to -1.
    """

    n_nodes: int
    fixed_nodes: np.ndarray           # bool (n_nodes,)
    free: np.ndarray = field(init=False, default=None)
    full_to_free: np.ndarray = field(init=False, default=None)

    def __post_init__(self):
        fixed = np.repeat(self.fixed_nodes, 3)
        free = np.flatnonzero(~fixed)
        full_to_free = -np.ones(3 * self.n_nodes, dtype=np.int64)
        full_to_free[free] = np.arange(free.size)
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "full_to_free", full_to_free)

    @property
    def n_free(self) -> int:
        return self.free.size

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        """Reduced vector -> full nodal vector with zeros on the fixed set."""
        reduced = np.asarray(reduced, dtype=float)
        out = np.zeros(reduced.shape[:-1] + (3 * self.n_nodes,))
        out[..., self.free] = reduced
        return out

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full, dtype=float)[..., self.free]


def assemble_csr(rows, cols, vals, n: int) -> sp.csr_matrix:
    """COO triplets -> CSR with duplicate summation (deterministic)."""
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return A.tocsr()


def element_scatter_indices(conn_dofs: np.ndarray):
    """Row/col index arrays for scattering dense element blocks.

    ``conn_dofs``: (ne, nd) global dof ids per element.  Returns flattened
    (rows, cols) of length ne * nd * nd matching ``blocks.ravel()``.
    """
    ne, nd = conn_dofs.shape
    rows = np.repeat(conn_dofs, nd, axis=1).ravel()
    cols = np.tile(conn_dofs, (1, nd)).ravel()
    return rows, cols


def restrict_matrix(A: sp.csr_matrix, dofmap: DofMap) -> sp.csr_matrix:
    return A[dofmap.free][:, dofmap.free].tocsr()


# ---------------------------------------------------------------------------
# geometric element data
# ---------------------------------------------------------------------------

def tri_affine_data(mesh: Mesh2D):
    """Per-element affine data: (detJ (ne,), invJT (ne, 2, 2))."""
    v = mesh.nodes[mesh.tris[:, :3]]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)  # columns d(phys)/d(ref)
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJ = np.linalg.inv(J)
    return detJ, np.swapaxes(invJ, -1, -2)


def tri_qp_coords(mesh: Mesh2D, ref_pts: np.ndarray) -> np.ndarray:
    """Physical coordinates of reference quadrature points, (ne, nq, 2)."""
    v = mesh.nodes[mesh.tris[:, :3]]
    l0 = 1.0 - ref_pts[:, 0] - ref_pts[:, 1]
    bary = np.stack([l0, ref_pts[:, 0], ref_pts[:, 1]], axis=1)   # (nq, 3)
    return np.einsum("qc,ecd->eqd", bary, v)


# ---------------------------------------------------------------------------
# CSV helpers (deterministic formatting)
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    return f"{x:.12e}"


def write_csv(path, header, rows):
    """Write rows of (str|float) cells; floats use a fixed 12-digit format."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [c if isinstance(c, str) else format_float(float(c)) for c in row]
            fh.write(",".join(cells) + "\n")


def write_field_csv(path, node_ids, coords, values, extra_cols=()):
    """Field snapshot: (node_id, y1, y2[, x3], v1, v2, v3) per row."""
    dim = coords.shape[1]
    header = ["node_id", "y1", "y2"] + (["x3"] if dim == 3 else []) + ["v1", "v2", "v3"]
    rows = []
    for i, nid in enumerate(node_ids):
        row = [str(int(nid))] + [float(coords[i, d]) for d in range(dim)] + \
              [float(values[i, c]) for c in range(3)]
        rows.append(row)
    write_csv(path, header, rows)
