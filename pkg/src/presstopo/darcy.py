"""Design-dependent pressure field via the Darcy law with a drainage term.

The flux follows q = -K(r1) grad p, where the elemental flow coefficient K
steps from the void value K_v down to the solid value K_s = eps * K_v through
a smooth Heaviside of the filtered topology density r1.  A drainage sink
-D(r1) (p - p_ext) with p_ext = 0 makes the pressure decay across solid
members, so the load localizes at the evolving structural boundary.

Assembling both terms over the hexagon quadrature gives the symmetric global
flow matrix A; solving A p = 0 under Dirichlet pressure boundary conditions
yields the nodal pressure field, converted to consistent nodal loads through
the design-independent transformation matrix T as F = -T p.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._element_data import mesh_integrals
from .errors import IllPosedError, InvalidArgumentError, SolverError

_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class FlowParams:
    """Darcy flow and drainage parameters.

    ``beta_k`` or ``beta_d`` equal to zero disables the corresponding step
    (coefficient frozen at its void value / drainage switched off), which
    makes the flow matrix design-independent for diagnostics.
    """

    k_void: float = 1.0
    epsilon: float = 1e-7
    eta_k: float = 0.2
    beta_k: float = 10.0
    eta_d: float = 0.2
    beta_d: float = 10.0
    d_solid: float = 0.0
    p_in: float = 1e5
    p_out: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidArgumentError(f"flow contrast must be in (0,1): {self.epsilon}")
        if self.k_void <= 0:
            raise InvalidArgumentError("void flow coefficient must be positive")
        if self.beta_k < 0 or self.beta_d < 0:
            raise InvalidArgumentError("step slopes must be non-negative")
        for eta in (self.eta_k, self.eta_d):
            if not 0.0 < eta < 1.0:
                raise InvalidArgumentError(f"step position must be in (0,1): {eta}")
        if self.d_solid < 0:
            raise InvalidArgumentError("solid drainage coefficient must be >= 0")

    @property
    def k_solid(self):
        return self.epsilon * self.k_void


def smooth_heaviside(x, beta, eta):
    """Smooth step [tanh(b e) + tanh(b (x - e))] / [tanh(b e) + tanh(b (1 - e))].

    Maps 0 -> 0 and 1 -> 1 exactly for beta > 0; beta == 0 returns 0 (step
    disabled).
    """
    x = np.asarray(x, dtype=float)
    if beta == 0.0:
        out = np.zeros_like(x)
        return float(out) if out.ndim == 0 else out
    denom = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    out = (np.tanh(beta * eta) + np.tanh(beta * (x - eta))) / denom
    return float(out) if out.ndim == 0 else out


def _heaviside_derivative(x, beta, eta):
    x = np.asarray(x, dtype=float)
    if beta == 0.0:
        return np.zeros_like(x)
    denom = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    return beta / (np.cosh(beta * (x - eta)) ** 2 * denom)


def flow_coefficient(rho1, params: FlowParams):
    """Elemental flow coefficient K(r1) and its derivative dK/dr1.

    K = K_v (1 - (1 - eps) H(r1)); depends on the topology variable only,
    irrespective of how many candidate materials are interpolated.
    """
    h = smooth_heaviside(rho1, params.beta_k, params.eta_k)
    dh = _heaviside_derivative(rho1, params.beta_k, params.eta_k)
    k = params.k_void * (1.0 - (1.0 - params.epsilon) * h)
    dk = -params.k_void * (1.0 - params.epsilon) * dh
    return k, dk


def drainage_coefficient(rho1, params: FlowParams):
    """Elemental drainage coefficient D(r1) = D_s H(r1) and its derivative."""
    h = smooth_heaviside(rho1, params.beta_d, params.eta_d)
    dh = _heaviside_derivative(rho1, params.beta_d, params.eta_d)
    return params.d_solid * h, params.d_solid * dh


def penetration_drainage(params: FlowParams, element_height,
                         remainder=0.1, depth_elements=2.0):
    """Solid drainage coefficient from a penetration-depth rule.

    Chooses D_s so that, in a uniformly solid slab, the pressure decays to
    ``remainder`` of its boundary value within ``depth_elements`` element
    heights: D_s = (ln r / ds)^2 K_s.
    """
    if not 0.0 < remainder < 1.0:
        raise InvalidArgumentError("remainder must be in (0,1)")
    ds = depth_elements * element_height
    if ds <= 0:
        raise InvalidArgumentError("penetration depth must be positive")
    return (np.log(remainder) / ds) ** 2 * params.k_solid


@dataclass
class PressureState:
    """Global flow system: matrix A, transformation T, and the solved field."""

    A: sp.csr_matrix
    T: sp.csr_matrix
    design_fingerprint: str
    p: np.ndarray | None = None
    dirichlet_nodes: np.ndarray | None = None
    dirichlet_values: np.ndarray | None = None
    free_nodes: np.ndarray | None = None
    _factorization: object = field(default=None, repr=False)

    def adjoint_solve(self, rhs):
        """Solve A lam = rhs on the free nodes, zero on Dirichlet nodes.

        Reuses the factorization of the state solve (A is symmetric).
        """
        if self._factorization is None:
            raise SolverError("pressure system has not been solved yet")
        lam = np.zeros(self.A.shape[0])
        lam[self.free_nodes] = self._factorization(rhs[self.free_nodes])
        return lam


def assemble_flow(mesh, design, params: FlowParams) -> PressureState:
    """Assemble the global flow matrix A and transformation matrix T.

    A_e = K(r1) * integral grad N^T grad N + D(r1) * integral N^T N over the
    hexagon quadrature; T_e = t * integral N_u^T grad N_p, independent of the
    design, so that F = -T p yields consistent nodal loads.
    """
    data = mesh_integrals(mesh)
    rho1 = design.filtered[:, 0]
    k, _ = flow_coefficient(rho1, params)
    d, _ = drainage_coefficient(rho1, params)

    diff = data.templates("diffusion")[data.group_of]
    mass = data.templates("mass")[data.group_of]
    a_data = k[:, None, None] * diff + d[:, None, None] * mass

    conn = mesh.elements
    n = mesh.n_nodes
    rows = np.broadcast_to(conn[:, :, None], a_data.shape)
    cols = np.broadcast_to(conn[:, None, :], a_data.shape)
    a = sp.coo_matrix(
        (a_data.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)
    ).tocsr()

    t_data = data.templates("load", design.thickness)[data.group_of]
    udofs = _displacement_dofs(conn)
    t_rows = np.broadcast_to(udofs[:, :, None], t_data.shape)
    t_cols = np.broadcast_to(conn[:, None, :], t_data.shape)
    t = sp.coo_matrix(
        (t_data.ravel(), (t_rows.ravel(), t_cols.ravel())), shape=(2 * n, n)
    ).tocsr()
    return PressureState(A=a, T=t, design_fingerprint=design.fingerprint())


def _displacement_dofs(conn):
    """Interleaved displacement DOF indices per element, (n_elements, 12)."""
    dofs = np.empty((conn.shape[0], 12), dtype=conn.dtype)
    dofs[:, 0::2] = 2 * conn
    dofs[:, 1::2] = 2 * conn + 1
    return dofs


def solve_pressure(state: PressureState, mesh, params: FlowParams, pressure_bc):
    """Impose Dirichlet pressures on named boundary edges and solve A p = 0.

    ``pressure_bc`` maps edge names ('top', 'bottom', 'left', 'right') to
    pressure values in Pa.  Returns the nodal pressure vector and caches the
    factorization on the state for adjoint reuse.
    """
    values = {}
    for edge, value in pressure_bc.items():
        if edge not in mesh.boundary_node_sets:
            raise InvalidArgumentError(f"unknown boundary edge {edge!r}")
        for node in mesh.boundary_node_sets[edge]:
            node = int(node)
            if node in values and values[node] != float(value):
                raise InvalidArgumentError(
                    f"conflicting pressure values at node {node}"
                )
            values[node] = float(value)
    if not values:
        raise IllPosedError("no Dirichlet pressure nodes; pressure field is "
                            "determined only up to a constant")

    n = state.A.shape[0]
    dirichlet = np.fromiter(values.keys(), dtype=np.int64)
    dvals = np.fromiter(values.values(), dtype=float)
    order = np.argsort(dirichlet)
    dirichlet, dvals = dirichlet[order], dvals[order]
    free = np.setdiff1d(np.arange(n), dirichlet, assume_unique=True)

    a_fd = state.A[free][:, dirichlet]
    a_ff = state.A[free][:, free].tocsc()
    rhs = -a_fd @ dvals
    try:
        lu = spla.splu(a_ff, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        zero_rows = free[np.asarray(abs(a_ff).sum(axis=1)).ravel() == 0.0]
        raise SolverError(
            f"flow matrix is singular after applying boundary conditions; "
            f"disconnected nodes: {zero_rows.tolist()[:20]}"
        ) from exc

    p = np.zeros(n)
    p[dirichlet] = dvals
    p[free] = lu.solve(rhs)

    residual = np.linalg.norm((state.A @ p)[free])
    denom = spla.norm(state.A) * np.linalg.norm(p)
    if denom > 0 and residual / denom > _RESIDUAL_TOL:
        raise SolverError(
            f"pressure solve residual {residual / denom:.3e} exceeds "
            f"{_RESIDUAL_TOL:.1e}"
        )

    state.p = p
    state.dirichlet_nodes = dirichlet
    state.dirichlet_values = dvals
    state.free_nodes = free
    state._factorization = lu.solve
    return p


def pressure_loads(state: PressureState):
    """Consistent nodal load vector F = -T p from the solved pressure field."""
    if state.p is None:
        raise SolverError("pressure field has not been solved yet")
    return -(state.T @ state.p)
