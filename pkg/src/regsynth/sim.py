"""Time integration of closed and open loops, and decay-rate fitting."""

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InsufficientData, InvalidArgument, NonFinite, SingularMatrix
from .numlin import PIVOT_TOL
from .signals import eval_reference

ERROR_FLOOR = 1e-14


@dataclass
class SimResult:
    times: np.ndarray
    y: np.ndarray  # (p, T)
    reference: np.ndarray  # (p, T)
    error: np.ndarray  # (p, T)
    u: np.ndarray  # (m, T) physical boundary input
    state_norm: np.ndarray
    final_state: np.ndarray = None

    @property
    def error_norm(self):
        return np.linalg.norm(self.error, axis=0)

    def max_error_after(self, t0):
        sel = self.times >= t0
        return float(self.error_norm[sel].max())

    def write_csv(self, path):
        """Write ``t,y1..yp,yref1..yrefp,e1..ep,u1..um`` with 17 significant digits."""
        p, m = self.y.shape[0], self.u.shape[0]
        header = (
            ["t"]
            + [f"y{i + 1}" for i in range(p)]
            + [f"yref{i + 1}" for i in range(p)]
            + [f"e{i + 1}" for i in range(p)]
            + [f"u{i + 1}" for i in range(m)]
        )
        data = np.vstack([self.times[None, :], self.y, self.reference, self.error, self.u]).T
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in data:
                w.writerow([f"{v:.17g}" for v in row])


def read_trajectory_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


class _Stepper:
    """Crank-Nicolson map ``(I - dt/2 A) x+ = (I + dt/2 A) x + dt B f``."""

    def __init__(self, A, dt):
        n = A.shape[0]
        lhs = np.eye(n) - 0.5 * dt * A
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            self.lu = linalg.lu_factor(lhs, check_finite=False)
        piv = np.abs(np.diag(self.lu[0]))
        if n and piv.min() <= PIVOT_TOL * np.abs(lhs).max():
            raise SingularMatrix(f"I - dt/2 A is singular at dt={dt}; an eigenvalue sits at 2/dt")
        self.rhs = np.eye(n) + 0.5 * dt * A

    def __call__(self, x, forcing):
        return linalg.lu_solve(self.lu, self.rhs @ x + forcing, check_finite=False)


def _grid(T, dt):
    if not dt > 0 or not T >= dt:
        raise InvalidArgument("need dt > 0 and T >= dt")
    steps = int(round(T / dt))
    return steps, np.arange(steps + 1) * dt


def simulate(cl, sig, x_e0, T, dt):
    """Trapezoidal integration of ``x' = A_e x + B_e y_ref(t)``.

    The reference enters at the midpoint of every step. Outputs, errors and
    the physical boundary input are sampled at every grid point.

    Raises
    ------
    NonFinite
        If the state stops being finite (the step index is attached).
    """
    steps, t = _grid(T, dt)
    x = np.asarray(x_e0, dtype=float).copy()
    if x.shape != (cl.a_e.shape[0],):
        raise InvalidArgument(f"x_e0 has shape {x.shape}, closed loop has {cl.a_e.shape[0]} states")
    step = _Stepper(cl.a_e, dt)
    p = cl.c_e.shape[0]
    ref = eval_reference(sig, t)
    mid = eval_reference(sig, t[:-1] + 0.5 * dt)
    forcing = dt * (cl.b_e @ mid)  # (n, steps)
    uidx = cl.sys.u_index
    X_u = np.empty((uidx.size, steps + 1))
    Y = np.empty((p, steps + 1))
    norms = np.empty(steps + 1)
    for k in range(steps + 1):
        if k:
            x = step(x, forcing[:, k - 1])
        nx = np.linalg.norm(x)
        if not np.isfinite(nx):
            raise NonFinite("closed-loop state is not finite", step=k)
        norms[k] = nx
        Y[:, k] = cl.c_e @ x
        X_u[:, k] = x[uidx]
    err = Y + cl.d_e @ ref
    return SimResult(t, Y, ref, err, X_u, norms, x)


# --------------------------------------------------------- open-loop runs


class SmoothInput:
    """``u(t) = amp * f(omega t)`` for ``f`` in {sin, cos, zero}, with closed-form derivatives."""

    def __init__(self, kind="sin", amp=1.0, omega=1.0):
        if kind not in ("sin", "cos", "zero"):
            raise InvalidArgument(f"unknown input profile {kind!r}")
        self.kind, self.amp, self.omega = kind, float(amp), float(omega)

    def __call__(self, t, derivative=0):
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        phase = np.pi / 2 if self.kind == "cos" else 0.0
        # d^k/dt^k sin(w t + ph) = w^k sin(w t + ph + k pi/2)
        return self.amp * self.omega**derivative * np.sin(self.omega * t + phase + derivative * np.pi / 2)


def simulate_open_loop(sys, u_profile, w0, T, dt):
    """Drive an extended system with the ``kappa`` that realizes ``u_profile``.

    First-order realizations have the unstable input mode ``u' = eta u +
    kappa``, which amplifies any mismatch like ``exp(eta t)``. They are
    therefore driven with the step-consistent input
    ``kappa_n = (u_{n+1} - u_n)/dt - eta (u_{n+1} + u_n)/2`` under which the
    trapezoidal input state equals ``u(t_n)`` exactly. The second-order beam
    realization has a stable input block and uses ``kappa`` at the midpoints.

    Returns ``(times, y)`` with ``y`` of shape ``(p, T)``.
    """
    steps, t = _grid(T, dt)
    u0 = u_profile(0.0)
    x = sys.initial_state(w0, np.full(sys.m, u0), np.full(sys.m, u_profile(0.0, 1)))
    step = _Stepper(sys.a, dt)
    tm = t[:-1] + 0.5 * dt
    if sys.input_states == sys.m:
        un = u_profile(t)
        kappa = np.diff(un) / dt - 0.5 * sys.eta * (un[1:] + un[:-1])
    else:
        kappa = sys.kappa(u_profile(tm), u_profile(tm, 1), u_profile(tm, 2))
    forcing = dt * np.outer(sys.b @ np.ones(sys.m), kappa)
    Y = np.empty((sys.p, steps + 1))
    Y[:, 0] = sys.c @ x
    for k in range(steps):
        x = step(x, forcing[:, k])
        if not np.all(np.isfinite(x)):
            raise NonFinite("open-loop state is not finite", step=k + 1)
        Y[:, k + 1] = sys.c @ x
    return t, Y


def open_loop_compare(sys_a, sys_b, u_profile, T, dt, w0_a=None, w0_b=None):
    """``max_t ||y_a(t) - y_b(t)||`` for two realizations of the same boundary system."""
    w0_a = np.zeros(sys_a.plant_dofs) if w0_a is None else w0_a
    w0_b = np.zeros(sys_b.plant_dofs) if w0_b is None else w0_b
    _, ya = simulate_open_loop(sys_a, u_profile, w0_a, T, dt)
    _, yb = simulate_open_loop(sys_b, u_profile, w0_b, T, dt)
    return float(np.max(np.linalg.norm(ya - yb, axis=0)))


# ------------------------------------------------------------ decay fits


@dataclass
class DecayFit:
    m_e: float
    w_e: float
    fit_window: tuple
    residual: float
    decaying: bool
    points: int


def envelope(times, values, chunk):
    """Maxima of `values` over consecutive chunks of length `chunk` (time and value)."""
    edges = np.arange(times[0], times[-1] + chunk * 0.5, chunk)
    tt, vv = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = np.nonzero((times >= lo) & (times < hi))[0]
        if sel.size:
            k = sel[np.argmax(values[sel])]
            tt.append(times[k])
            vv.append(values[k])
    return np.array(tt), np.array(vv)


def fit_decay(result, window=None, chunk=None, floor=ERROR_FLOOR):
    """Fit ``||e(t)|| <= M_e exp(-w_e t)`` on the upper envelope.

    Parameters
    ----------
    result : SimResult or (times, norms)
    window : (t_start, t_end), optional
        Defaults to the whole run.
    chunk : float, optional
        Envelope chunk length; defaults to 1/40 of the window.

    Raises
    ------
    InsufficientData
        If fewer than 10 envelope points fall inside the window.
    """
    if isinstance(result, SimResult):
        times, norms = result.times, result.error_norm
    else:
        times, norms = (np.asarray(a, dtype=float) for a in result)
    t0, t1 = window if window is not None else (times[0], times[-1])
    sel = (times >= t0) & (times <= t1)
    times, norms = times[sel], np.maximum(norms[sel], floor)
    if times.size < 10:
        raise InsufficientData(f"only {times.size} samples in window ({t0}, {t1})")
    chunk = chunk or (times[-1] - times[0]) / 40.0
    te, ve = envelope(times, norms, chunk)
    if te.size < 10:
        raise InsufficientData(f"only {te.size} envelope points; shorten the chunk or widen the window")
    coef, res, *_ = np.polyfit(te, np.log(ve), 1, full=True)
    slope, intercept = coef
    resid = float(np.sqrt(res[0] / te.size)) if res.size else 0.0
    w_e = -float(slope)
    return DecayFit(float(np.exp(intercept)), w_e, (float(t0), float(t1)), resid, w_e > 1e-8, int(te.size))
