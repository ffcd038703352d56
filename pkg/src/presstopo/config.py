"""Problem configuration: INI-style files, validation, shipped benchmarks."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError

_EDGES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class SupportSpec:
    """Zero-displacement segment of a named boundary edge.

    ``lo``/``hi`` are fractions of the edge length; ``directions`` is 'both',
    'x', or 'y'.
    """

    edge: str
    lo: float
    hi: float
    directions: str = "both"


@dataclass
class ProblemConfig:
    """Validated inputs for one optimization run."""

    lx: float
    ly: float
    nex: int
    ney: int
    e_moduli: tuple
    nu: float = 0.40
    thickness: float = 0.001
    simp_penalty: float = 3.0
    volume_fractions: tuple = (0.1, 0.1)
    pressure_bc: dict = field(default_factory=lambda: {"top": 1e5, "bottom": 0.0})
    supports: tuple = ()
    flow_contrast: float = 1e-7
    flow_eta: float = 0.2
    flow_beta: float = 10.0
    drain_eta: float = 0.2
    drain_beta: float = 10.0
    void_flow_coefficient: float = 1.0
    drainage_solid: float | None = None
    drainage_remainder: float = 0.1
    drainage_depth_elements: float = 2.0
    filter_radius_elements: float = 3.0
    filter_radius_abs: float | None = None
    max_iterations: int = 100
    move_limit: float = 0.1
    step_tolerance: float = 0.0
    output_directory: str = "out"
    write_vtk: bool = True
    write_svg: bool = True
    pressure_isolines: bool = True
    log_every: int = 10
    initial_design: str | None = None
    name: str = "problem"

    def validate(self):
        errors = []
        if self.nex < 1 or self.ney < 1:
            errors.append("element counts must be >= 1")
        if self.lx <= 0 or self.ly <= 0:
            errors.append("domain dimensions must be positive")
        if not self.e_moduli or any(e <= 0 for e in self.e_moduli):
            errors.append("young_moduli must be positive")
        if list(self.e_moduli) != sorted(self.e_moduli) or (
            len(set(self.e_moduli)) != len(self.e_moduli)
        ):
            errors.append("young_moduli must be strictly ascending")
        if len(self.volume_fractions) != len(self.e_moduli):
            errors.append("one volume fraction per candidate material is required")
        if any(f <= 0 for f in self.volume_fractions):
            errors.append("volume fractions must be positive")
        if sum(self.volume_fractions) > 1.0 + 1e-12:
            errors.append("volume fractions must sum to at most 1")
        if not 0.0 <= self.nu < 0.5:
            errors.append("poisson ratio must lie in [0, 0.5)")
        if self.thickness <= 0:
            errors.append("thickness must be positive")
        if not 0.0 < self.flow_contrast < 1.0:
            errors.append("flow contrast must lie in (0, 1)")
        for edge in self.pressure_bc:
            if edge not in _EDGES:
                errors.append(f"unknown pressure edge {edge!r}")
        if not self.pressure_bc:
            errors.append("at least one pressure boundary edge is required")
        for s in self.supports:
            if s.edge not in _EDGES:
                errors.append(f"unknown support edge {s.edge!r}")
            if not 0.0 <= s.lo < s.hi <= 1.0:
                errors.append(f"support segment [{s.lo}, {s.hi}] is not valid")
            if s.directions not in ("both", "x", "y"):
                errors.append(f"support direction {s.directions!r} is not valid")
        if not self.supports:
            errors.append("at least one support is required")
        if self.filter_radius_abs is None and self.filter_radius_elements <= 0:
            errors.append("filter radius must be positive")
        if self.max_iterations < 0:
            errors.append("max_iterations must be >= 0")
        if not 0.0 < self.move_limit <= 1.0:
            errors.append("move_limit must lie in (0, 1]")
        if errors:
            raise ConfigError("; ".join(errors))
        return self

    @property
    def n_materials(self):
        return len(self.e_moduli)

    @property
    def filter_radius(self):
        if self.filter_radius_abs is not None:
            return self.filter_radius_abs
        return self.filter_radius_elements * (self.lx / self.nex)

    @property
    def constraint_bounds(self):
        """Upper bound of each volume measure: cumulative tail fractions.

        The first measure (total solid) is bounded by the sum of all material
        fractions; measure j by the fractions of materials j and stiffer.
        """
        f = np.asarray(self.volume_fractions)
        return np.cumsum(f[::-1])[::-1]


def _parse_floats(text):
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_supports(text):
    out = []
    for token in text.replace(",", " ").split():
        parts = token.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(
                f"support spec {token!r} is not edge:lo:hi[:dirs]"
            )
        dirs = parts[3] if len(parts) == 4 else "both"
        try:
            out.append(SupportSpec(parts[0], float(parts[1]), float(parts[2]), dirs))
        except ValueError as exc:
            raise ConfigError(f"support spec {token!r}: {exc}") from exc
    return tuple(out)


def load_config(path) -> ProblemConfig:
    """Parse and validate a configuration file.

    ``path`` may also name a shipped benchmark ('arch-2mat', 'piston-2mat',
    'arch-3mat', 'piston-3mat').
    """
    path = Path(path)
    if not path.exists():
        builtin = builtin_config_path(str(path), missing_ok=True)
        if builtin is None:
            raise ConfigError(f"config file not found: {path}")
        path = builtin

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def get(section, option, cast, default=None):
        if not parser.has_option(section, option):
            return default
        raw = parser.get(section, option).strip()
        if raw == "":
            return default
        try:
            if cast is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"[{section}] {option} = {raw!r}: {exc}") from exc

    required = {
        "lx": get("domain", "lx", float),
        "ly": get("domain", "ly", float),
        "nex": get("domain", "nex", int),
        "ney": get("domain", "ney", int),
        "e_moduli": get("materials", "young_moduli", _parse_floats),
    }
    missing = [k for k, v in required.items() if v is None]
    if missing:
        raise ConfigError(f"missing required options: {', '.join(missing)}")

    pressure_bc = {}
    inlet = get("pressure", "inlet", str, "top")
    outlet = get("pressure", "outlet", str, "bottom")
    inlet_value = get("pressure", "inlet_value", float, 1e5)
    outlet_value = get("pressure", "outlet_value", float, 0.0)
    for edge in (inlet or "").replace(",", " ").split():
        pressure_bc[edge] = inlet_value
    for edge in (outlet or "").replace(",", " ").split():
        pressure_bc[edge] = outlet_value

    cfg = ProblemConfig(
        lx=required["lx"],
        ly=required["ly"],
        nex=required["nex"],
        ney=required["ney"],
        e_moduli=required["e_moduli"],
        nu=get("materials", "poisson", float, 0.40),
        thickness=get("materials", "thickness", float, 0.001),
        simp_penalty=get("materials", "simp_penalty", float, 3.0),
        volume_fractions=get("volume", "fractions", _parse_floats, (0.1, 0.1)),
        pressure_bc=pressure_bc,
        supports=get("supports", "fixed", _parse_supports, ())
        + tuple(
            SupportSpec(s.edge, s.lo, s.hi, "x")
            for s in get("supports", "roller_x", _parse_supports, ())
        )
        + tuple(
            SupportSpec(s.edge, s.lo, s.hi, "y")
            for s in get("supports", "roller_y", _parse_supports, ())
        ),
        flow_contrast=get("flow", "contrast", float, 1e-7),
        flow_eta=get("flow", "step_eta", float, 0.2),
        flow_beta=get("flow", "step_beta", float, 10.0),
        drain_eta=get("flow", "drain_eta", float, 0.2),
        drain_beta=get("flow", "drain_beta", float, 10.0),
        void_flow_coefficient=get("flow", "void_coefficient", float, 1.0),
        drainage_solid=get("flow", "drainage_solid", float, None),
        drainage_remainder=get("flow", "drainage_remainder", float, 0.1),
        drainage_depth_elements=get("flow", "drainage_depth", float, 2.0),
        filter_radius_elements=get("filter", "radius_elements", float, 3.0),
        filter_radius_abs=get("filter", "radius_abs", float, None),
        max_iterations=get("optimizer", "max_iterations", int, 100),
        move_limit=get("optimizer", "move_limit", float, 0.1),
        step_tolerance=get("optimizer", "step_tolerance", float, 0.0),
        output_directory=get("output", "directory", str, "out") or "out",
        write_vtk=get("output", "write_vtk", bool, True),
        write_svg=get("output", "write_svg", bool, True),
        pressure_isolines=get("output", "pressure_isolines", bool, True),
        log_every=get("output", "log_every", int, 10),
        initial_design=get("output", "initial_design", str, None),
        name=path.stem,
    )
    return cfg.validate()


def builtin_config_path(name, missing_ok=False):
    """Filesystem path of a shipped benchmark configuration."""
    filename = name if name.endswith(".cfg") else f"{name}.cfg"
    ref = resources.files("presstopo") / "configs" / filename
    with resources.as_file(ref) as concrete:
        if concrete.exists():
            return Path(concrete)
    if missing_ok:
        return None
    raise ConfigError(f"no builtin config named {name!r}")


def builtin_config_names():
    folder = resources.files("presstopo") / "configs"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))
