"""Plant families and their Galerkin discretizations.

Three families are supported:

* ``Heat1DNeumann``: ``w_t = nu w_xx - alpha w`` on (0, 1), zero flux at 0,
  flux control ``w_x(1) = u``.
* ``Parabolic2D``: ``w_t = nu Lap(w) - alpha w - div(beta w)`` on a
  triangulated polygon with Dirichlet boundary actuators.
* ``BeamKV``: clamped Euler-Bernoulli beam with Kelvin-Voigt damping and a
  moment actuator at the free end.

A :class:`DiscretizedPlant` stores the diffusion/bending part ``a0`` (the
``A_d`` operator in standard form), the remaining reaction-convection part
``arc`` and the sensor rows, so that ``a0 + arc`` is the discrete ``A_0``.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import fields, mesh_fem
from .errors import InvalidArgument
from .numlin import eigenvalues, solve_linear

HEAT1D = "Heat1DNeumann"
PARABOLIC2D = "Parabolic2D"
BEAM = "BeamKV"
FAMILIES = (HEAT1D, PARABOLIC2D, BEAM)

SHEAR_FREE_MOMENT = "ShearFreeMoment"
COMBINED_MOMENT = "CombinedMoment"

_DEFAULTS = {
    HEAT1D: {"nu": 1.0, "alpha": 0.0},
    PARABOLIC2D: {"nu": 1.0},
    BEAM: {"length": 1.0, "alpha": 1.0, "beta": 0.0, "gamma": 0.0},
}


@dataclass(frozen=True)
class ActuatorSpec:
    """Boundary actuator: ``location`` is ``"right"`` in 1D, a boundary tag in 2D."""

    location: object = "right"
    profile: object = None


@dataclass(frozen=True)
class SensorSpec:
    """Output ``y = int(weight * w) + int(velocity_weight * w_t)``.

    ``velocity_weight`` is only meaningful for the beam.
    """

    weight: object
    velocity_weight: object = None


@dataclass(frozen=True)
class PlantSpec:
    family: str
    params: dict = field(default_factory=dict)
    actuators: tuple = ()
    sensors: tuple = ()
    bc_variant: str = SHEAR_FREE_MOMENT
    geometry: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown plant family {self.family!r}")
        params = dict(_DEFAULTS[self.family])
        params.update(self.params)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "actuators", tuple(self.actuators))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if not self.actuators or not self.sensors:
            raise InvalidArgument("a plant needs at least one actuator and one sensor")
        if self.family in (HEAT1D, PARABOLIC2D) and params["nu"] <= 0:
            raise InvalidArgument("nu must be positive")
        if self.family == BEAM:
            if params["alpha"] <= 0 or params["beta"] <= 0 or params["gamma"] < 0:
                raise InvalidArgument("beam needs alpha > 0, beta > 0, gamma >= 0")
            if self.bc_variant not in (SHEAR_FREE_MOMENT, COMBINED_MOMENT):
                raise InvalidArgument(f"unknown beam bc_variant {self.bc_variant!r}")
        if self.family != PARABOLIC2D and len(self.actuators) != 1:
            raise InvalidArgument("1D families have exactly one boundary actuator")

    @property
    def m(self):
        return len(self.actuators)

    @property
    def p(self):
        return len(self.sensors)

    def describe(self):
        """Canonical text used for hashing and reports."""
        out = [f"family={self.family}"]
        if self.family == BEAM:
            out.append(f"bc_variant={self.bc_variant}")
        for k in sorted(self.params):
            v = self.params[k]
            out.append(f"{k}={fields.format_field(v) if not isinstance(v, (int, float)) else repr(float(v))}")
        for k in sorted(self.geometry):
            out.append(f"geometry.{k}={self.geometry[k]!r}")
        for a in self.actuators:
            prof = fields.format_field(a.profile) if a.profile is not None else "none"
            out.append(f"actuator={a.location!r}:{prof}")
        for s in self.sensors:
            vel = fields.format_field(s.velocity_weight) if s.velocity_weight is not None else "none"
            out.append(f"sensor={fields.format_field(s.weight)}:{vel}")
        return "\n".join(out)


def perturb(spec, nu=1.0, alpha=1.0, beta=1.0, gamma=1.0, alpha_shift=0.0):
    """Copy of `spec` with multiplicative factors and an additive reaction shift."""
    p = dict(spec.params)
    if spec.family in (HEAT1D, PARABOLIC2D):
        p["nu"] = p["nu"] * nu
    if spec.family == HEAT1D:
        p["alpha"] = p["alpha"] * alpha + alpha_shift
    elif spec.family == PARABOLIC2D:
        a = p.get("alpha", fields.Constant(0.0))
        if alpha != 1.0:
            raise InvalidArgument("only additive alpha perturbations are supported for field coefficients")
        p["alpha"] = fields.shifted(a, alpha_shift)
    else:
        p["alpha"] *= alpha
        p["beta"] *= beta
        p["gamma"] *= gamma
    return dataclasses.replace(spec, params=p)


@dataclass
class DiscretizedPlant:
    spec: PlantSpec
    mesh: object
    fem: mesh_fem.FemMatrices
    dofmap: mesh_fem.DofMap
    mass: np.ndarray  # Gram matrix of the state space (blockdiag(M, M) for the beam)
    a0: np.ndarray  # diffusion / bending part in standard form
    arc: np.ndarray  # reaction-convection part in standard form
    c0: np.ndarray  # sensor rows on the state
    resolution: int
    extra: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.a0.shape[0]

    @property
    def A0(self):
        return self.a0 + self.arc


def _actuator_tags(spec):
    return [int(a.location) for a in spec.actuators]


def discretize(spec, resolution):
    """Assemble the standard-form operators of `spec` on a mesh of `resolution` elements."""
    resolution = int(resolution)
    if resolution < 1:
        raise InvalidArgument("resolution must be positive")
    p = spec.params
    if spec.family == HEAT1D:
        mesh = mesh_fem.build_interval_mesh(0.0, 1.0, resolution)
        fem, dofmap = mesh_fem.assemble_heat_1d_neumann(mesh)
        M, K = fem.mass, fem.diffusion_stiffness
        a0 = -p["nu"] * solve_linear(M, K)
        arc = -p["alpha"] * np.eye(M.shape[0])
        c0, _ = mesh_fem.output_rows(mesh, "p1", [s.weight for s in spec.sensors], dofmap)
        return DiscretizedPlant(spec, mesh, fem, dofmap, M, a0, arc, c0, resolution)

    if spec.family == PARABOLIC2D:
        mesh = _build_2d_mesh(spec, resolution)
        fem, dofmap = mesh_fem.assemble_parabolic_2d(
            mesh,
            p["nu"],
            p.get("alpha"),
            (p.get("beta1", fields.Constant(0.0)), p.get("beta2", fields.Constant(0.0))),
        )
        M = fem.mass
        a0 = -p["nu"] * solve_linear(M, fem.diffusion_stiffness)
        arc = -solve_linear(M, fem.convection_reaction)
        c0, c_all = mesh_fem.output_rows(mesh, "p1_2d", [s.weight for s in spec.sensors], dofmap)
        return DiscretizedPlant(spec, mesh, fem, dofmap, M, a0, arc, c0, resolution, {"c0_all": c_all})

    # beam
    mesh = mesh_fem.build_interval_mesh(0.0, p["length"], resolution)
    fem, dofmap = mesh_fem.assemble_beam_hermite(mesh)
    M, S = fem.mass, fem.bending_stiffness
    nw = M.shape[0]
    MinvS = solve_linear(M, S)
    Z, I = np.zeros((nw, nw)), np.eye(nw)
    a0 = np.block([[Z, I], [-p["alpha"] * MinvS, -p["beta"] * MinvS]])
    arc = np.block([[Z, Z], [Z, -p["gamma"] * I]])
    c1, _ = mesh_fem.output_rows(mesh, "hermite", [s.weight for s in spec.sensors], dofmap)
    vel = [s.velocity_weight if s.velocity_weight is not None else fields.Constant(0.0) for s in spec.sensors]
    c2, _ = mesh_fem.output_rows(mesh, "hermite", vel, dofmap)
    c0 = np.hstack([c1, c2])
    gram = np.block([[M, Z], [Z, M]])
    return DiscretizedPlant(spec, mesh, fem, dofmap, gram, a0, arc, c0, resolution, {"nw": nw, "c1": c1, "c2": c2})


def _build_2d_mesh(spec, resolution):
    g = spec.geometry
    if "mesh_file" in g:
        return mesh_fem.load_mesh_file(g["mesh_file"])
    tags = {}
    for side, tag in dict(g.get("side_tags", {})).items():
        tags[side] = int(tag)
    nx = int(resolution)
    ny = int(g.get("ny_ratio", 1.0) * resolution)
    return mesh_fem.build_rect_mesh(g.get("x_range", (0.0, 1.0)), g.get("y_range", (0.0, 1.0)), nx, ny, tags)


def plant_open_loop_spectrum(plant):
    """Eigenvalues of the discrete ``A_0 = a0 + arc``."""
    return eigenvalues(plant.A0)


def initial_profile(plant, preset="zero", amplitude=1.0, velocity_preset=None):
    """Discrete initial state for a named preset.

    Presets: ``zero``, ``constant``, ``sin_profile`` (``sin x``),
    ``cos_minus_two`` (``cos 5x - 2``), ``sin5`` (``sin 5x``). Parabolic
    families project onto the free nodes by interpolation; the beam
    interpolates values and slopes, and uses `velocity_preset` for ``w_t``.
    """
    funcs = {
        "zero": (lambda x: 0.0 * x, lambda x: 0.0 * x),
        "constant": (lambda x: 1.0 + 0.0 * x, lambda x: 0.0 * x),
        "sin_profile": (np.sin, np.cos),
        "cos_minus_two": (lambda x: np.cos(5 * x) - 2.0, lambda x: -5 * np.sin(5 * x)),
        "sin5": (lambda x: np.sin(5 * x), lambda x: 5 * np.cos(5 * x)),
    }
    if preset not in funcs or (velocity_preset is not None and velocity_preset not in funcs):
        raise InvalidArgument(f"unknown initial-condition preset {preset!r}")
    fam = plant.spec.family
    if fam == HEAT1D:
        return amplitude * funcs[preset][0](plant.mesh.nodes)
    if fam == PARABOLIC2D:
        x = plant.mesh.nodes[plant.dofmap.free, 0]
        return amplitude * funcs[preset][0](x)

    def hermite(name):
        f, df = funcs[name]
        x = plant.mesh.nodes
        vals = np.column_stack([f(x), df(x)]).ravel()
        return amplitude * vals[plant.dofmap.free]

    vel = hermite(velocity_preset) if velocity_preset else np.zeros(plant.extra["nw"])
    return np.concatenate([hermite(preset), vel])
