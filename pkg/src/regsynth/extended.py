"""Extended state-space realizations and their structural checks.

The extended state is ``x = (v, u)`` with ``v = w - E u``; the new input is
``kappa = u' - eta u`` (first-order realizations) or
``kappa = u'' + (beta eta + gamma) u' + alpha eta u`` (second-order beam
realization, state ``(v, v_t, u, u')``).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import InvalidArgument
from .extension import BEAM_V1, BEAM_V2, project_extension
from .models import BEAM
from .numlin import eigenvalues, smallest_singular_value, solve_linear

PARABOLIC_FIRST_ORDER = "ParabolicFirstOrder"
BEAM_V1_SYS = "BeamV1"
BEAM_V2_SYS = "BeamV2"

UNSTABLE_TOL = 1e-9  # Re s >= -UNSTABLE_TOL counts as closed right half-plane
HAUTUS_TOL = 1e-12  # relative to ||A||; unobservable modes give ~eps ||A||


@dataclass
class ExtendedSystem:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    plant_dofs: int
    input_states: int
    variant: str
    eta: float
    e_n: np.ndarray = None
    plant: object = None
    ext: object = None

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return self.b.shape[1]

    @property
    def p(self):
        return self.c.shape[0]

    @property
    def u_index(self):
        """Indices of the physical boundary inputs inside the state."""
        step = 2 if self.variant == BEAM_V2_SYS else 1
        return self.plant_dofs + step * np.arange(self.m)

    def physical_input(self, x):
        """Boundary input ``u`` read from extended state(s) ``x`` (last axis = state)."""
        return np.asarray(x)[..., self.u_index]

    def kappa(self, u, du, d2u=None):
        """New input ``kappa`` produced by a boundary input with derivatives ``du``, ``d2u``."""
        if self.variant == BEAM_V2_SYS:
            a_eta, damp = self.ext.data["input_dynamics"]
            return d2u + damp * du + a_eta * u
        return du - self.eta * u

    def initial_state(self, w0, u0, du0=None):
        """Extended state for plant state ``w0`` and boundary input ``u(0)``.

        For the second-order beam realization ``du0 = u'(0)`` enters both the
        velocity correction and the input-state block.
        """
        u0 = np.atleast_1d(np.asarray(u0, dtype=float))
        w0 = np.asarray(w0, dtype=float)
        if w0.shape != (self.plant_dofs,):
            raise InvalidArgument(f"w0 has shape {w0.shape}, expected ({self.plant_dofs},)")
        if self.variant == BEAM_V2_SYS:
            du0 = np.atleast_1d(np.asarray(0.0 if du0 is None else du0, dtype=float))
            g = self.e_n[:, 0]
            nw = g.size
            v = w0.copy()
            v[:nw] -= g * u0[0]
            v[nw:] -= g * du0[0]
            return np.concatenate([v, [u0[0], du0[0]]])
        return np.concatenate([w0 - self.e_n @ u0, u0])


def assemble_extended(plant, ext, e_n=None, boundary_consistent=True):
    """Build ``(A^N, B^N, C^N)`` from a discretized plant and its extension.

    First-order realizations (parabolic plants, beam v1 and the combined
    moment variant)::

        A = [[A0, Arc E], [0, eta I]],  B = [[-E], [I]],  C = [C0, C0 E]

    For beam v1 with the moment condition ``w''(l) = u`` the velocity
    component ``v_t = w_t - g2 u`` carries the boundary moment
    ``v_t''(l) = kappa``, which the Hermite weak form only sees through its
    natural boundary term. With `boundary_consistent` (default) that term,
    ``beta M^{-1} e_l kappa`` on the velocity rows, is added to ``B``;
    without it the discrete system realizes the moment ``(alpha + beta eta) u``
    instead of ``alpha u + beta u'``.

    The second-order beam realization uses
    ``A = blockdiag(A0, [[0, 1], [-alpha eta, -beta eta - gamma]])``,
    ``B = (0, -g, 0, 1)`` and ``C = [C1, C2, C1 g, C2 g]``.
    """
    E = project_extension(ext, plant) if e_n is None else np.asarray(e_n, dtype=float)
    A0, arc, C0 = plant.A0, plant.arc, plant.c0
    n = plant.n
    eta = float(ext.eta)
    if ext.kind == BEAM_V2:
        nw = plant.extra["nw"]
        if E.shape != (nw, 1):
            raise InvalidArgument(f"beam v2 profile has shape {E.shape}, expected ({nw}, 1)")
        p = plant.spec.params
        a_eta, damp = p["alpha"] * eta, p["beta"] * eta + p["gamma"]
        ext.data["input_dynamics"] = (a_eta, damp)
        g = E[:, 0]
        A = np.zeros((n + 2, n + 2))
        A[:n, :n] = A0
        A[n:, n:] = [[0.0, 1.0], [-a_eta, -damp]]
        B = np.zeros((n + 2, 1))
        B[nw:n, 0] = -g
        B[n + 1, 0] = 1.0
        c1, c2 = plant.extra["c1"], plant.extra["c2"]
        C = np.hstack([C0, (c1 @ g)[:, None], (c2 @ g)[:, None]])
        return ExtendedSystem(A, B, C, n, 2, BEAM_V2_SYS, eta, E, plant, ext)

    if E.shape[0] != n:
        raise InvalidArgument(f"E^N has {E.shape[0]} rows, plant has {n} states")
    m = E.shape[1]
    A = np.block([[A0, arc @ E], [np.zeros((m, n)), eta * np.eye(m)]])
    B = np.vstack([-E, np.eye(m)])
    if ext.kind == BEAM_V1 and boundary_consistent:
        nw = plant.extra["nw"]
        e_l = np.zeros(nw)
        e_l[-1] = 1.0  # slope DOF at x = l
        B[nw:n, 0] += plant.spec.params["beta"] * solve_linear(plant.fem.mass, e_l)
    C = np.hstack([C0, C0 @ E])
    variant = BEAM_V1_SYS if plant.spec.family == BEAM else PARABOLIC_FIRST_ORDER
    return ExtendedSystem(A, B, C, n, m, variant, eta, E, plant, ext)


# ------------------------------------------------------------------ checks


@dataclass
class CheckReport:
    name: str
    passed: bool
    tol: float
    margins: list = field(default_factory=list)  # (label, point, sigma_min)
    witnesses: list = field(default_factory=list)  # failing points
    notes: list = field(default_factory=list)

    @property
    def min_margin(self):
        return min((m[2] for m in self.margins), default=np.inf)

    def summary(self):
        state = "pass" if self.passed else "FAIL"
        return f"{self.name}: {state} (min margin {self.min_margin:.3e}, tol {self.tol:.3e})"


def _closed_rhp(ev):
    ev = ev[ev.real >= -UNSTABLE_TOL]
    # one representative per conjugate pair
    return ev[ev.imag >= -1e-12]


def _record(report, label, s, sigma):
    report.margins.append((label, complex(s), float(sigma)))
    if not sigma > report.tol:
        report.passed = False
        report.witnesses.append((label, complex(s), float(sigma)))


def check_detectability(sys, tol=HAUTUS_TOL):
    """Hautus detectability test of ``(A^N, C^N)`` on the closed right half-plane.

    For every eigenvalue ``s`` with ``Re s >= -1e-9`` the smallest singular
    value of ``[s I - A; C]`` must exceed ``tol * ||A||``. The kernel test at
    ``s = eta`` is always run, and when ``A_rc E = 0`` the injectivity of
    ``C0 E`` is checked as well.
    """
    A, C = sys.a, sys.c
    scale = max(np.linalg.norm(A, 2), 1.0)
    report = CheckReport("detectability", True, tol * scale)
    n = A.shape[0]
    for s in _closed_rhp(eigenvalues(A)):
        _record(report, "hautus", s, smallest_singular_value(np.vstack([s * np.eye(n) - A, C])))
    eta = sys.eta
    _record(report, "ker(eta I - A) & ker(C)", eta, smallest_singular_value(np.vstack([eta * np.eye(n) - A, C])))
    if sys.variant != BEAM_V2_SYS and sys.e_n is not None and sys.plant is not None:
        arc_e = sys.plant.arc @ sys.e_n
        if np.linalg.norm(arc_e) <= 1e-14 * max(np.linalg.norm(sys.e_n), 1.0):
            c0e = sys.plant.c0 @ sys.e_n
            sig = smallest_singular_value(c0e) if c0e.shape[0] >= c0e.shape[1] else 0.0
            rel = tol * max(np.linalg.norm(sys.plant.c0, 2) * np.linalg.norm(sys.e_n, 2), 1e-300)
            report.margins.append(("C0 E injective", complex(eta), float(sig)))
            report.notes.append("A_rc E = 0: injectivity of C0 E tested")
            if not sig > rel:
                report.passed = False
                report.witnesses.append(("C0 E injective", complex(eta), float(sig)))
    return report


def check_stabilizability(sys, tol=HAUTUS_TOL):
    """Hautus stabilizability test of ``(A^N, B^N)`` plus the plant-level kernel test.

    For ``s`` in the discrete ``sigma^+(A0)``: the stacked matrix
    ``[(s I - A0)^*; (Arc E + (eta - s) E)^*]`` must have full column rank
    (first-order realizations). The full-system test uses ``[s I - A, B]``.
    """
    A, B = sys.a, sys.b
    scale = max(np.linalg.norm(A, 2), 1.0)
    report = CheckReport("stabilizability", True, tol * scale)
    n = A.shape[0]
    for s in _closed_rhp(eigenvalues(A)):
        _record(report, "hautus", s, smallest_singular_value(np.hstack([s * np.eye(n) - A, B])))
    plant = sys.plant
    if plant is not None and sys.variant != BEAM_V2_SYS:
        A0, E = plant.A0, sys.e_n
        arc_e = plant.arc @ E
        n0 = A0.shape[0]
        for s in _closed_rhp(eigenvalues(A0)):
            for t in {s, np.conj(s)}:
                stacked = np.vstack([(t * np.eye(n0) - A0).conj().T, (arc_e + (sys.eta - t) * E).conj().T])
                _record(report, "plant kernel", t, smallest_singular_value(stacked))
    return report


def check_nonresonance(sys, frequencies, tol=HAUTUS_TOL):
    """Invariant-zero test at ``i omega_k`` (surrogate for ``P_L(i omega_k) != 0``).

    Reports ``sigma_min([[i w I - A, B], [C, 0]])`` for each frequency and
    fails if it is not above ``tol * (||A|| + ||B|| + ||C||)``.
    """
    A, B, C = sys.a, sys.b, sys.c
    scale = max(np.linalg.norm(A, 2) + np.linalg.norm(B, 2) + np.linalg.norm(C, 2), 1.0)
    report = CheckReport("nonresonance", True, tol * scale)
    n = A.shape[0]
    for w in frequencies:
        rosen = np.block([[1j * w * np.eye(n) - A, B], [C, np.zeros((C.shape[0], B.shape[1]))]])
        _record(report, f"omega={w:g}", 1j * w, smallest_singular_value(rosen))
    return report


def run_checks(sys, frequencies):
    return [check_detectability(sys), check_stabilizability(sys), check_nonresonance(sys, frequencies)]


# -------------------------------------------------------------- coercivity


def _plant_norms(plant):
    fam = plant.spec.family
    fem = plant.fem
    if fam == BEAM:
        alpha = plant.spec.params["alpha"]
        S, M = fem.bending_stiffness, fem.mass
        W = linalg.block_diag(alpha * S, M)  # energy inner product
        GV = linalg.block_diag(alpha * S, S + M)
        return W, GV
    M, K = fem.mass, fem.diffusion_stiffness
    return M, K + M


def coercivity_diagnostic(plant, ext=None, sys=None):
    """Discrete coercivity constants ``(lambda_1, c_2)`` of the extended form.

    With the state Gram matrix ``W`` and the ``V``-norm Gram matrix ``G_V``
    (both padded with an identity on the input states) the form is
    ``F = -W A``. The shift is ``lambda_1 = max(0, 1 - mu)`` where ``mu`` is
    the smallest eigenvalue of ``(sym F, W)``, and
    ``c_2 = lambda_min(sym F + lambda_1 W, G_V)``. This is a diagnostic
    only: it is not a proof of the continuous assumptions.
    """
    W0, G0 = _plant_norms(plant)
    if sys is None and ext is not None:
        sys = assemble_extended(plant, ext)
    if sys is None:
        A, W, G = plant.A0, W0, G0
    else:
        k = sys.n - plant.n
        A = sys.a
        W = linalg.block_diag(W0, np.eye(k))
        G = linalg.block_diag(G0, np.eye(k))
    F = -W @ A
    F = 0.5 * (F + F.T)
    mu = linalg.eigh(F, W, eigvals_only=True)[0]
    lam1 = max(0.0, 1.0 - mu)
    c2 = linalg.eigh(F + lam1 * W, G, eigvals_only=True)[0]
    return float(lam1), float(c2)
