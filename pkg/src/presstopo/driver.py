"""Optimization driver: couples flow, elasticity, sensitivities, and MMA.

Each iteration filters the design, solves the Darcy pressure field, converts
it to nodal loads, solves the elastic problem, evaluates compliance and the
volume measures, forms adjoint sensitivities, and takes one MMA step.  Runs
are deterministic: the same configuration reproduces the same log.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import adjoint as adjoint_mod
from . import darcy, elasticity, fields, honeymesh
from .errors import ConfigError, PresstopoError
from .mma import MmaState, mma_update


@dataclass
class IterationRecord:
    iteration: int
    compliance: float
    volume_measures: tuple
    max_design_change: float


@dataclass
class RunLog:
    """Per-iteration history of one optimization run."""

    records: list = field(default_factory=list)
    wall_time: float = 0.0
    n_constraints: int = 2

    def append(self, record):
        if not np.isfinite(record.compliance) or record.compliance < 0:
            raise PresstopoError(
                f"iteration {record.iteration}: non-physical compliance "
                f"{record.compliance}"
            )
        self.records.append(record)

    def header(self):
        gs = [f"g{j + 1}" for j in range(self.n_constraints)]
        return ["iter", "compliance", *gs, "max_dx"]

    def rows(self):
        for r in self.records:
            yield [r.iteration, r.compliance, *r.volume_measures,
                   r.max_design_change]

    def write_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([f"{v:.12g}" if isinstance(v, float) else v
                                 for v in row])


@dataclass
class RunResult:
    log: RunLog
    design: fields.DesignField
    pressure: darcy.PressureState
    elastic: elasticity.ElasticState
    mesh: honeymesh.Mesh
    config: object


def build_problem(config):
    """Mesh, filter, materials, flow parameters, and supports from a config."""
    mesh = honeymesh.generate_mesh(config.nex, config.ney, config.lx, config.ly)
    filt = fields.build_filter(mesh, config.filter_radius)
    materials = fields.MaterialSet(
        e_moduli=config.e_moduli,
        nu=config.nu,
        thickness=config.thickness,
        penalty=config.simp_penalty,
    )
    flow = darcy.FlowParams(
        k_void=config.void_flow_coefficient,
        epsilon=config.flow_contrast,
        eta_k=config.flow_eta,
        beta_k=config.flow_beta,
        eta_d=config.drain_eta,
        beta_d=config.drain_beta,
        d_solid=0.0,
        p_in=max(config.pressure_bc.values()),
        p_out=min(config.pressure_bc.values()),
    )
    d_solid = config.drainage_solid
    if d_solid is None:
        d_solid = darcy.penetration_drainage(
            flow, mesh.element_height,
            remainder=config.drainage_remainder,
            depth_elements=config.drainage_depth_elements,
        )
    flow = replace(flow, d_solid=d_solid)
    fixed_dofs = support_dofs(mesh, config.supports)
    return mesh, filt, materials, flow, fixed_dofs


def support_dofs(mesh, supports):
    """Constrained DOF indices from edge-segment support specifications."""
    dofs = []
    for spec in supports:
        nodes = mesh.boundary_node_sets.get(spec.edge)
        if nodes is None:
            raise ConfigError(f"unknown support edge {spec.edge!r}")
        coords = mesh.nodes[nodes]
        along = coords[:, 1] if spec.edge in ("left", "right") else coords[:, 0]
        length = mesh.Ly if spec.edge in ("left", "right") else mesh.Lx
        tol = 1e-9 * length
        sel = nodes[(along >= spec.lo * length - tol)
                    & (along <= spec.hi * length + tol)]
        if spec.directions in ("both", "x"):
            dofs.extend(2 * sel)
        if spec.directions in ("both", "y"):
            dofs.extend(2 * sel + 1)
    if not dofs:
        raise ConfigError("support specification selected no nodes")
    return np.unique(np.asarray(dofs, dtype=np.int64))


def initial_design(config, mesh):
    """Uniform start: column j at the share of its cumulative tail fraction."""
    tails = config.constraint_bounds
    values = [tails[0]]
    for j in range(1, len(tails)):
        values.append(tails[j] / tails[j - 1])
    raw = np.tile(np.asarray(values), (mesh.n_elements, 1))
    if config.initial_design:
        raw = read_design_csv(config.initial_design, mesh.n_elements,
                              len(tails))
    return raw


def read_design_csv(path, n_elements, n_variables):
    """Load raw design variables from a previously written design.csv."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1)
    except OSError as exc:
        raise ConfigError(f"cannot read initial design {path}: {exc}") from exc
    if data.ndim == 1:
        data = data[None, :]
    if data.shape != (n_elements, n_variables + 1):
        raise ConfigError(
            f"initial design {path} has shape {data.shape}, expected "
            f"({n_elements}, {n_variables + 1})"
        )
    return np.clip(data[:, 1:], 0.0, 1.0)


def make_design(raw, filt, mesh, materials):
    filtered = filt.apply_columns(raw)
    volumes = mesh.element_areas() * materials.thickness
    return fields.DesignField(
        raw=raw, filtered=filtered, element_volumes=volumes,
        thickness=materials.thickness,
    )


def analyze(design, mesh, materials, flow, fixed_dofs, pressure_bc):
    """Solve the coupled flow/elasticity problem for one design."""
    pstate = darcy.assemble_flow(mesh, design, flow)
    darcy.solve_pressure(pstate, mesh, flow, pressure_bc)
    force = darcy.pressure_loads(pstate)
    stiffness = elasticity.assemble_stiffness(mesh, design, materials)
    u, compliance = elasticity.solve_displacements(stiffness, force, fixed_dofs)
    estate = elasticity.ElasticState(
        K=stiffness, u=u, F=force, fixed_dofs=fixed_dofs,
        compliance=compliance, design_fingerprint=design.fingerprint(),
    )
    return pstate, estate


def run_optimization(config, progress=None):
    """Run the full optimization loop; returns a ``RunResult``.

    ``progress`` may be a callable taking (iteration, record) for logging.
    """
    start = time.perf_counter()
    mesh, filt, materials, flow, fixed_dofs = build_problem(config)
    bounds = config.constraint_bounds
    m = config.n_materials
    nel = mesh.n_elements

    raw = initial_design(config, mesh)
    state = MmaState.for_variables(nel * m, move_limit=config.move_limit)

    # volume-constraint gradients are design-independent; build them once
    probe = make_design(raw, filt, mesh, materials)
    dg_list = adjoint_mod.constraint_sensitivities(probe, filt)
    dg = np.stack([grad.ravel(order="F") for grad in dg_list])

    objective_scale = None
    log = RunLog(n_constraints=m)

    for it in range(1, config.max_iterations + 1):
        try:
            design = make_design(raw, filt, mesh, materials)
            pstate, estate = analyze(design, mesh, materials, flow,
                                     fixed_dofs, config.pressure_bc)
            g = fields.volume_measures(design)
            dc = adjoint_mod.compliance_sensitivity(
                mesh, design, materials, flow, pstate, estate, filt
            )
            x = raw.ravel(order="F")
            df0 = dc.ravel(order="F")
            if objective_scale is None:
                objective_scale = 1.0 / max(np.abs(df0).max(), 1e-30)
            x_new = mma_update(
                x, estate.compliance * objective_scale,
                df0 * objective_scale, g - bounds, dg, state,
            )
        except PresstopoError as exc:
            raise type(exc)(f"iteration {it}: {exc}") from exc

        max_dx = float(np.abs(x_new - x).max())
        record = IterationRecord(
            iteration=it,
            compliance=estate.compliance,
            volume_measures=tuple(g),
            max_design_change=max_dx,
        )
        log.append(record)
        if progress is not None:
            progress(it, record)
        raw = x_new.reshape((nel, m), order="F")
        if config.step_tolerance > 0 and max_dx < config.step_tolerance:
            break

    # final analysis so returned fields match the final design
    design = make_design(raw, filt, mesh, materials)
    pstate, estate = analyze(design, mesh, materials, flow, fixed_dofs,
                             config.pressure_bc)
    log.wall_time = time.perf_counter() - start
    return RunResult(log=log, design=design, pressure=pstate,
                     elastic=estate, mesh=mesh, config=config)
