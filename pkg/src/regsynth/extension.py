"""Extension operators ``E`` with ``B E = I`` and ``A_d E = eta E``.

In 1D the extension profiles are closed forms: a ``cosh`` profile for the
Neumann heat equation and exponential-trigonometric profiles for the beam.
The beam profiles are written on the shifted basis ``exp(lam*(x - l))`` for
growing modes so that no term overflows for large ``eta``. In 2D the
extension is a discrete Dirichlet lift ``Psi_i`` computed on the FEM mesh.
"""

from dataclasses import dataclass, field

import numpy as np

from . import fields, mesh_fem
from .errors import InvalidArgument, SingularMatrix
from .models import BEAM, COMBINED_MOMENT, HEAT1D, PARABOLIC2D
from .numlin import eigenvalues, solve_linear

HEAT = "Analytic1D"
BEAM_V1 = "BeamV1"
BEAM_V2 = "BeamV2"
BEAM_BC2 = "BeamBC2"
DISCRETE_2D = "Discrete2D"

BC_TOL = 1e-10
RESOLVENT_TOL = 1e-6


class ExpTrigProfile:
    """``g(x) = sum_j m_j * part_j(exp(lam_j * (x - x_j)))``.

    Each basis function is the real or imaginary part of a complex
    exponential, so every derivative is available in closed form:
    ``d^k/dx^k part(exp(lam (x - s))) = part(lam^k exp(lam (x - s)))``.
    """

    def __init__(self, basis, coeffs):
        self.basis = tuple(basis)  # (lam, shift, "re" | "im")
        self.coeffs = np.asarray(coeffs, dtype=float)

    def basis_matrix(self, x, derivative=0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cols = []
        for lam, shift, part in self.basis:
            z = lam**derivative * np.exp(lam * (x - shift))
            cols.append(z.real if part == "re" else z.imag)
        return np.column_stack(cols)

    def __call__(self, x, derivative=0):
        scalar = np.ndim(x) == 0
        out = self.basis_matrix(x, derivative) @ self.coeffs
        return float(out[0]) if scalar else out


def _fit_beam_profile(basis, length, moment):
    """Solve ``g(0) = g'(0) = g'''(l) = 0, g''(l) = moment`` on `basis`."""
    probe = ExpTrigProfile(basis, np.zeros(len(basis)))
    rows = np.vstack(
        [
            probe.basis_matrix(0.0, 0),
            probe.basis_matrix(0.0, 1),
            probe.basis_matrix(length, 3),
            probe.basis_matrix(length, 2),
        ]
    )
    rhs = np.array([0.0, 0.0, 0.0, moment])
    try:
        coeffs = solve_linear(rows, rhs)
    except SingularMatrix as exc:
        raise SingularMatrix(
            f"beam boundary-condition system is degenerate (cond ~ {np.linalg.cond(rows):.3e})"
        ) from exc
    return ExpTrigProfile(basis, coeffs)


@dataclass
class ExtensionOperator:
    eta: float
    kind: str
    profile: object = None  # callable g(x, derivative) for 1D kinds
    lifts: np.ndarray = None  # (n_nodes, m) for Discrete2D
    residual_certificate: float = 0.0
    bc_residuals: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    @property
    def m(self):
        return 1 if self.lifts is None else self.lifts.shape[1]


# ------------------------------------------------------------------ heat


class HeatProfile:
    """``g = cosh(k x) / (k sinh k)``, ``k = sqrt(eta/nu)``, written overflow-free."""

    def __init__(self, eta, nu=1.0):
        self.k = np.sqrt(eta / nu)

    def __call__(self, x, derivative=0):
        k = self.k
        x = np.asarray(x, dtype=float)
        # cosh(kx)/sinh(k) = (e^{k(x-1)} + e^{-k(x+1)}) / (1 - e^{-2k})
        plus, minus = np.exp(k * (x - 1)), np.exp(-k * (x + 1))
        even = derivative % 2 == 0
        num = plus + minus if even else plus - minus
        out = k ** (derivative - 1) * num / (-np.expm1(-2 * k))
        return float(out) if out.ndim == 0 else out


def build_extension_heat1d(eta, nu=1.0):
    """Closed-form extension of the Neumann heat equation on (0, 1).

    Solves ``nu g'' = eta g``, ``g'(0) = 0``, ``g'(1) = 1``.

    Parameters
    ----------
    eta : float
        Shift, must be positive.
    nu : float
        Diffusivity.

    Returns
    -------
    ExtensionOperator
    """
    if not eta > 0:
        raise InvalidArgument("eta must be positive for the Neumann heat extension")
    if not nu > 0:
        raise InvalidArgument("nu must be positive")
    g = HeatProfile(eta, nu)
    xs = np.linspace(0.0, 1.0, 200)
    ode = np.max(np.abs(nu * g(xs, 2) - eta * g(xs)))
    bc = {"g'(0)": abs(g(0.0, 1)), "g'(1)-1": abs(g(1.0, 1) - 1.0)}
    ext = ExtensionOperator(eta, HEAT, profile=g, bc_residuals=bc, data={"nu": nu})
    ext.residual_certificate = max(ode, *bc.values())
    return ext


# ------------------------------------------------------------------ beam


def _v1_basis(mu, length):
    lam_up, lam_down = mu * (1 + 1j), mu * (-1 + 1j)
    return [(lam_up, length, "re"), (lam_up, length, "im"), (lam_down, 0.0, "re"), (lam_down, 0.0, "im")]


def build_extension_beam_v1(eta, alpha, beta, length, moment=1.0):
    """Extension pair ``(g1, g2 = eta g1)`` for the first-order beam realization.

    ``g1'''' = -(eta^2 / (alpha + beta eta)) g1`` with a clamped left end and
    ``g1'''(l) = 0``, ``g1''(l) = moment``. The characteristic roots are
    ``(+-1 +- i) eta_t`` with ``eta_t = (eta^2 / (4 (alpha + beta eta)))^(1/4)``.
    """
    if not eta > 0:
        raise InvalidArgument("eta must be positive")
    damp = alpha + beta * eta
    if not damp > 0:
        raise InvalidArgument("alpha + beta*eta must be positive")
    mu = (eta**2 / (4 * damp)) ** 0.25
    g = _fit_beam_profile(_v1_basis(mu, length), length, moment)
    xs = np.linspace(0.0, length, 200)
    ode = np.max(np.abs(g(xs, 4) + eta**2 / damp * g(xs)))
    bc = _beam_bc_residuals(g, length, moment)
    ext = ExtensionOperator(
        eta, BEAM_V1, profile=g, bc_residuals=bc, data={"eta_tilde": mu, "alpha": alpha, "beta": beta, "length": length}
    )
    ext.data["ode_residual"] = ode
    ext.residual_certificate = max(ode, *bc.values())
    return ext


def build_extension_beam_bc2(eta, alpha, beta, length):
    """Combined-moment variant: as :func:`build_extension_beam_v1` with ``g1''(l) = 1/(alpha + beta eta)``."""
    ext = build_extension_beam_v1(eta, alpha, beta, length, moment=1.0 / (alpha + beta * eta))
    ext.kind = BEAM_BC2
    return ext


def build_extension_beam_v2(eta, length, alpha=None, beta=None, gamma=0.0):
    """Extension profile for the second-order input realization.

    ``g'''' = eta g`` with the clamped/moment conditions; characteristic
    roots ``+-eta^(1/4)`` and ``+-i eta^(1/4)``. The input obeys
    ``kappa = u'' + (beta eta + gamma) u' + alpha eta u``.
    """
    if not eta > 0:
        raise InvalidArgument("eta must be positive")
    k = eta**0.25
    basis = [(k + 0j, length, "re"), (-k + 0j, 0.0, "re"), (1j * k, 0.0, "re"), (1j * k, 0.0, "im")]
    g = _fit_beam_profile(basis, length, 1.0)
    xs = np.linspace(0.0, length, 200)
    ode = np.max(np.abs(g(xs, 4) - eta * g(xs)))
    bc = _beam_bc_residuals(g, length, 1.0)
    data = {"length": length, "ode_residual": ode}
    if alpha is not None and beta is not None:
        data["input_dynamics"] = (alpha * eta, beta * eta + gamma)
    ext = ExtensionOperator(eta, BEAM_V2, profile=g, bc_residuals=bc, data=data)
    ext.residual_certificate = max(ode, *bc.values())
    return ext


def _beam_bc_residuals(g, length, moment):
    return {
        "g(0)": abs(g(0.0)),
        "g'(0)": abs(g(0.0, 1)),
        "g'''(l)": abs(g(length, 3)),
        "g''(l)-moment": abs(g(length, 2) - moment),
    }


# -------------------------------------------------------------------- 2D


def build_extension_parabolic2d(plant, eta, actuator_index):
    """Discrete Dirichlet lift ``Psi`` of one boundary actuator.

    Boundary DOFs on the actuator's tag carry ``psi(arclength)``, all other
    boundary DOFs are zero, and the interior solves
    ``(nu K + eta M)_ff Psi_f = -(nu K + eta M)_fc Psi_c``.

    Returns
    -------
    numpy.ndarray
        Full DOF vector of length ``n_nodes``.
    """
    spec = plant.spec
    if spec.family != PARABOLIC2D:
        raise InvalidArgument("discrete lifts are only defined for Parabolic2D plants")
    if eta < 0:
        raise InvalidArgument("eta must be non-negative")
    act = spec.actuators[actuator_index]
    mesh, fem, dm = plant.mesh, plant.fem, plant.dofmap
    chain, s = mesh_fem.boundary_trace_rows(mesh, int(act.location))
    profile = act.profile if act.profile is not None else fields.Sine(1.0)
    psi = np.zeros(mesh.n_nodes)
    psi[chain] = profile(s)
    if not np.any(psi):
        return psi
    nu = spec.params["nu"]
    op = nu * fem.stiffness_all + eta * fem.mass_all
    f, c = dm.free, dm.constrained
    rhs = -op[np.ix_(f, c)] @ psi[c]
    try:
        psi[f] = solve_linear(op[np.ix_(f, f)], rhs)
    except SingularMatrix as exc:
        near = _nearest_eigenvalue(-plant.a0, eta)
        raise SingularMatrix(
            f"lift operator singular: eta={eta} is within reach of discrete eigenvalue {near:.6g}"
        ) from exc
    return psi


def _nearest_eigenvalue(op, eta):
    ev = eigenvalues(op)
    return ev[np.argmin(np.abs(ev + eta))].real


def lift_residual(plant, eta, psi):
    """``||(nu K + eta M)_{f,:} Psi|| / ||Psi||`` on interior rows."""
    fem, f = plant.fem, plant.dofmap.free
    op = plant.spec.params["nu"] * fem.stiffness_all + eta * fem.mass_all
    return float(np.linalg.norm(op[f] @ psi) / max(np.linalg.norm(psi), 1e-300))


def build_extension(plant, eta, variant=None):
    """Dispatch on the plant family (and `variant` for the beam).

    The beam accepts ``variant`` in ``{"v1", "v2"}``; the combined-moment
    boundary condition only admits the v1-style extension. That ``eta`` is
    not an eigenvalue is checked on the discrete spectrum.
    """
    spec = plant.spec
    p = spec.params
    check_eta_resolvent(plant, eta)
    if spec.family == HEAT1D:
        return build_extension_heat1d(eta, p["nu"])
    if spec.family == PARABOLIC2D:
        lifts = np.column_stack([build_extension_parabolic2d(plant, eta, i) for i in range(spec.m)])
        ext = ExtensionOperator(eta, DISCRETE_2D, lifts=lifts)
        ext.residual_certificate = max(lift_residual(plant, eta, lifts[:, i]) for i in range(spec.m))
        trace = []
        for i, act in enumerate(spec.actuators):
            chain, s = mesh_fem.boundary_trace_rows(plant.mesh, int(act.location))
            prof = act.profile if act.profile is not None else fields.Sine(1.0)
            trace.append(np.max(np.abs(lifts[chain, i] - prof(s)), initial=0.0))
        ext.bc_residuals = {"trace": max(trace)}
        return ext
    variant = (variant or "v1").lower()
    if spec.bc_variant == COMBINED_MOMENT:
        if variant != "v1":
            raise InvalidArgument("the combined-moment boundary condition only supports the v1 extension")
        return build_extension_beam_bc2(eta, p["alpha"], p["beta"], p["length"])
    if variant == "v1":
        return build_extension_beam_v1(eta, p["alpha"], p["beta"], p["length"])
    if variant == "v2":
        return build_extension_beam_v2(eta, p["length"], p["alpha"], p["beta"], p["gamma"])
    raise InvalidArgument(f"unknown beam extension variant {variant!r}")


def check_eta_resolvent(plant, eta, tol=RESOLVENT_TOL):
    """Raise SingularMatrix if `eta` lies within `tol` of an eigenvalue of ``a0``."""
    ev = eigenvalues(plant.a0)
    gap = np.min(np.abs(ev - eta)) if ev.size else np.inf
    if gap < tol:
        raise SingularMatrix(f"eta={eta} is within {gap:.3e} of a discrete eigenvalue of A_d")
    return gap


# ------------------------------------------------------------- projection


def _hermite_samples(plant, g):
    x = plant.mesh.nodes
    vals = np.column_stack([g(x), g(x, 1)]).ravel()
    return vals[plant.dofmap.free]


def project_extension(ext, plant):
    """Discrete ``E^N`` (state-DOFs x m).

    Heat: L2 projection ``M^{-1} int(g phi)``. 2D: L2 projection of the lift
    onto the free DOFs, ``M_ff^{-1} M_{f,:} Psi``. Beam: Hermite
    interpolation of values and slopes; v1 and the combined-moment variant
    stack ``(g1, g2 = eta g1)`` over ``(v, v_t)``, v2 returns ``g`` on the
    deflection DOFs only.
    """
    fam = plant.spec.family
    if fam == HEAT1D:
        if ext.kind != HEAT:
            raise InvalidArgument(f"{ext.kind} extension does not fit a {fam} plant")
        load = mesh_fem.load_vector_1d(plant.mesh, ext.profile, "p1")
        return solve_linear(plant.mass, load).reshape(-1, 1)
    if fam == PARABOLIC2D:
        if ext.kind != DISCRETE_2D or ext.lifts.shape[0] != plant.mesh.n_nodes:
            raise InvalidArgument("lift vectors do not match the plant mesh")
        f = plant.dofmap.free
        return solve_linear(plant.mass, plant.fem.mass_all[f] @ ext.lifts)
    if ext.kind not in (BEAM_V1, BEAM_V2, BEAM_BC2):
        raise InvalidArgument(f"{ext.kind} extension does not fit a {fam} plant")
    g1 = _hermite_samples(plant, ext.profile)
    if ext.kind == BEAM_V2:
        return g1.reshape(-1, 1)
    return np.concatenate([g1, ext.eta * g1]).reshape(-1, 1)


def extension_residual(ext, plant, e_n=None, norm="euclid"):
    """Relative residual ``||A_d^N E^N - eta E^N|| / ||E^N||`` including boundary data.

    The discrete ``A_d`` acting on a lift is the weak form with the boundary
    flux (heat), moment (beam) or Dirichlet trace (2D) kept on the right.

    With ``norm="dual"`` (parabolic plants only) the weak residual
    ``r = -nu K E + flux - eta M E`` is measured in the ``H^1``-dual norm,
    ``sqrt(r^T (K+M)^{-1} r) / sqrt(E^T (K+M) E)``. This is the norm in which
    the Galerkin residual of a smooth lift converges at the full rate ``h^2``;
    the Euclidean coefficient norm picks up the boundary layer of the flux
    term and converges more slowly.
    """
    eta = ext.eta
    fam = plant.spec.family
    E = project_extension(ext, plant) if e_n is None else e_n
    p = plant.spec.params
    if norm not in ("euclid", "dual"):
        raise InvalidArgument(f"unknown residual norm {norm!r}")
    if norm == "dual":
        if fam == BEAM:
            raise InvalidArgument("the dual residual norm is defined for parabolic plants only")
        return _dual_residual(ext, plant, E)
    if fam == HEAT1D:
        fem = plant.fem
        flux = np.zeros(plant.n)
        flux[-1] = p["nu"] * ext.profile(1.0, 1)
        flux[0] -= p["nu"] * ext.profile(0.0, 1)
        ad = solve_linear(plant.mass, -p["nu"] * fem.diffusion_stiffness @ E[:, 0] + flux)
        res = ad - eta * E[:, 0]
    elif fam == PARABOLIC2D:
        fem, f = plant.fem, plant.dofmap.free
        ad = solve_linear(plant.mass, -p["nu"] * fem.stiffness_all[f] @ ext.lifts)
        res = ad - eta * E
    else:
        fem = plant.fem
        nw = plant.extra["nw"]
        slope_end = np.zeros(nw)
        slope_end[-1] = 1.0  # last free DOF is the slope at x = l
        S, M = fem.bending_stiffness, fem.mass
        g = E[:nw, 0]
        if ext.kind == BEAM_V2:
            moment = ext.profile(p["length"], 2)
            res = solve_linear(M, S @ g - moment * slope_end) - eta * g
        else:
            g2 = E[nw:, 0]
            moment = p["alpha"] * ext.profile(p["length"], 2) + p["beta"] * eta * ext.profile(p["length"], 2)
            lower = solve_linear(M, -p["alpha"] * S @ g - p["beta"] * S @ g2 + moment * slope_end)
            res = np.concatenate([g2 - eta * g, lower - eta * g2])
    return float(np.linalg.norm(res) / np.linalg.norm(E))


def _dual_residual(ext, plant, E):
    fem, nu, eta = plant.fem, plant.spec.params["nu"], ext.eta
    if plant.spec.family == HEAT1D:
        K = fem.diffusion_stiffness
        flux = np.zeros(plant.n)
        flux[-1] = nu * ext.profile(1.0, 1)
        flux[0] -= nu * ext.profile(0.0, 1)
        r = (-nu * K @ E[:, 0] + flux - eta * plant.mass @ E[:, 0])[:, None]
    else:
        f = plant.dofmap.free
        K = fem.diffusion_stiffness
        r = -nu * fem.stiffness_all[f] @ ext.lifts - eta * plant.mass @ E
    G = K + plant.mass
    num = np.sqrt(max(float(np.trace(r.T @ solve_linear(G, r))), 0.0))
    den = np.sqrt(float(np.trace(E.T @ G @ E)))
    return num / den
