"""Plane-stress elasticity on the hexagonal mesh with SIMP-interpolated moduli."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._element_data import mesh_integrals
from .darcy import _displacement_dofs
from .errors import InvalidArgumentError, SingularSystemError, SolverError
from .fields import interpolate_modulus
from .honeymesh import _wachspress, hex_quadrature

_RESIDUAL_TOL = 1e-9


@dataclass
class ElasticState:
    """Assembled stiffness, solved displacements, loads, and compliance."""

    K: sp.csr_matrix
    u: np.ndarray
    F: np.ndarray
    fixed_dofs: np.ndarray
    compliance: float
    design_fingerprint: str = ""


def element_stiffness(element_vertices, e_modulus, nu, thickness):
    """12x12 plane-stress stiffness of one hexagon, t * integral B^T C B.

    Uses the centroid-fan quadrature; the matrix is symmetric with exactly the
    three rigid-body modes in its null space (Wachspress linear completeness
    makes rotation strain-free pointwise).
    """
    if e_modulus <= 0:
        raise InvalidArgumentError("Young's modulus must be positive")
    if not 0.0 <= nu < 0.5:
        raise InvalidArgumentError(f"Poisson ratio out of range: {nu}")
    rule = hex_quadrature(element_vertices)
    _, grads = _wachspress(element_vertices, rule.points, with_gradients=True)
    c = e_modulus / (1.0 - nu * nu) * np.array(
        [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]]
    )
    nq = rule.weights.size
    b = np.zeros((nq, 3, 12))
    b[:, 0, 0::2] = grads[:, :, 0]
    b[:, 1, 1::2] = grads[:, :, 1]
    b[:, 2, 0::2] = grads[:, :, 1]
    b[:, 2, 1::2] = grads[:, :, 0]
    return thickness * np.einsum("q,qci,cd,qdj->ij", rule.weights, b, c, b)


def assemble_stiffness(mesh, design, materials):
    """Global stiffness with per-element modulus from the SIMP interpolation."""
    data = mesh_integrals(mesh)
    e_elem = interpolate_modulus(design.filtered, materials)
    k_unit = data.templates("stiffness", materials.nu, materials.thickness)
    k_data = k_unit[data.group_of] * e_elem[:, None, None]
    udofs = _displacement_dofs(mesh.elements)
    rows = np.broadcast_to(udofs[:, :, None], k_data.shape)
    cols = np.broadcast_to(udofs[:, None, :], k_data.shape)
    ndof = 2 * mesh.n_nodes
    return sp.coo_matrix(
        (k_data.ravel(), (rows.ravel(), cols.ravel())), shape=(ndof, ndof)
    ).tocsr()


def solve_displacements(K, F, fixed_dofs, fixed_values=None):
    """Solve K u = F with Dirichlet DOFs eliminated; return (u, compliance).

    ``fixed_values`` defaults to homogeneous supports.  The reduced system is
    solved by sparse LU; the residual on the free DOFs must satisfy
    ||K u - F|| / ||F|| < 1e-9.
    """
    F = np.asarray(F, dtype=float)
    ndof = K.shape[0]
    fixed = np.unique(np.asarray(fixed_dofs, dtype=np.int64))
    if fixed.size < 3:
        raise SingularSystemError(
            "fewer than three constrained DOFs cannot remove the rigid-body "
            "modes (two translations and one rotation)"
        )
    if fixed_values is None:
        fvals = np.zeros(fixed.size)
    else:
        fvals = np.asarray(fixed_values, dtype=float)
        if fvals.shape != fixed.shape:
            raise InvalidArgumentError("fixed_values length mismatch")
    free = np.setdiff1d(np.arange(ndof), fixed, assume_unique=True)

    k_ff = K[free][:, free].tocsc()
    rhs = F[free] - K[free][:, fixed] @ fvals
    try:
        lu = spla.splu(k_ff, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SingularSystemError(
            f"stiffness matrix is singular; {_describe_rigid_mode(k_ff)}"
        ) from exc

    u = np.zeros(ndof)
    u[fixed] = fvals
    u[free] = lu.solve(rhs)
    if not np.all(np.isfinite(u)):
        raise SingularSystemError(
            f"stiffness solve produced non-finite values; "
            f"{_describe_rigid_mode(k_ff)}"
        )

    fnorm = np.linalg.norm(F[free]) or np.linalg.norm(rhs) or 1.0
    residual = np.linalg.norm(K[free][:, free] @ u[free] - rhs) / fnorm
    if residual > _RESIDUAL_TOL:
        raise SolverError(
            f"displacement solve residual {residual:.3e} exceeds "
            f"{_RESIDUAL_TOL:.1e}"
        )
    compliance = float(u @ F)
    return u, compliance


def _describe_rigid_mode(k_ff):
    """Best-effort identification of the unconstrained rigid mode."""
    try:
        n = k_ff.shape[0]
        if n > 20000:
            return "system too large to identify the rigid mode"
        # small negative shift keeps the shift-inverted operator nonsingular
        shift = -1e-9 * max(float(np.abs(k_ff.diagonal()).max()), 1.0)
        _, vecs = spla.eigsh(k_ff.tocsc(), k=1, sigma=shift, which="LM")
        mode = vecs[:, 0]
        ux = np.linalg.norm(mode[0::2])
        uy = np.linalg.norm(mode[1::2])
        if ux > 3 * uy:
            return "near-null mode resembles an x-translation"
        if uy > 3 * ux:
            return "near-null mode resembles a y-translation"
        return "near-null mode mixes both directions (rotation-like)"
    except Exception:
        return "rigid mode could not be identified"
