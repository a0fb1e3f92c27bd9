"""Observer-based reduced-order controller synthesis.

Pipeline on a design model ``(A, B, C)``:

1. observer Riccati equation with margin ``alpha1`` gives the output
   injection ``L``;
2. regulator Riccati equation for the internal model in series with the
   plant, margin ``alpha2``, gives ``K = [K1, K2]``;
3. balanced truncation of ``(A + L C, [B, L], K2)`` to order ``r``;
4. the controller
   ``z1' = G1 z1 + G2 e``,
   ``z2' = (A_Lr + B_Lr K2r) z2 + B_Lr K1 z1 - L_r e``,
   ``kappa = K1 z1 + K2r z2``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NotDetectable, NotHurwitz, NotStabilizable, ParseError, SpecMismatch
from .internal_model import check_observable
from .numlin import care_residual, care_solve, lyapunov_residual, lyapunov_solve, solve_linear, spectral_abscissa, svd

log = logging.getLogger(__name__)

HSV_FLOOR = 1e-14
BT_ROUNDOFF = 1e-11  # relative to max ||G(iw)||


def _as_weight(x, k, name):
    W = np.atleast_2d(np.asarray(x, dtype=float))
    if W.shape == (1, 1) and k != 1:
        W = W[0, 0] * np.eye(k)
    if W.shape != (k, k):
        raise InvalidArgument(f"{name} must be {k}x{k} (or a scalar)")
    if not np.allclose(W, W.T):
        raise InvalidArgument(f"{name} must be symmetric")
    if np.linalg.eigvalsh(W).min() <= 0:
        raise InvalidArgument(f"{name} must be positive definite")
    return W


@dataclass
class SynthesisParams:
    """Riccati weights, stability margins and the reduced order.

    ``q0``, ``q1``, ``q2`` default to identities; ``r = None`` keeps the
    full observer (no truncation).
    """

    alpha1: float = 0.5
    alpha2: float = 0.5
    r1: object = 1.0
    r2: object = 1.0
    r: int = None
    q0: np.ndarray = None
    q1: np.ndarray = None
    q2: np.ndarray = None

    def __post_init__(self):
        if not (np.isfinite(self.alpha1) and np.isfinite(self.alpha2)) or self.alpha1 < 0 or self.alpha2 < 0:
            raise InvalidArgument("alpha1 and alpha2 must be finite and non-negative")
        if self.r is not None and int(self.r) < 0:
            raise InvalidArgument("r must be non-negative")


@dataclass
class ControllerRealization:
    g1: np.ndarray
    g2: np.ndarray
    k1: np.ndarray
    a_lr: np.ndarray
    b_lr: np.ndarray
    l_r: np.ndarray
    k2_r: np.ndarray
    hsv: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        z, r = self.g1.shape[0], self.a_lr.shape[0]
        m = self.k1.shape[0]
        shapes = {
            "g2": (self.g2.shape[0], z),
            "k1": (self.k1.shape[1], z),
            "b_lr": (self.b_lr.shape, (r, m)),
            "l_r": (self.l_r.shape, (r, self.g2.shape[1])),
            "k2_r": (self.k2_r.shape, (m, r)),
        }
        for name, (got, want) in shapes.items():
            if got != want:
                raise InvalidArgument(f"controller block {name}: got {got}, expected {want}")

    @property
    def dim_z0(self):
        return self.g1.shape[0]

    @property
    def r(self):
        return self.a_lr.shape[0]

    @property
    def dim(self):
        return self.dim_z0 + self.r

    @property
    def p(self):
        return self.g2.shape[1]

    @property
    def m(self):
        return self.k1.shape[0]

    def realization(self):
        """``(G1c, G2c, Kc)`` of the composite controller state ``(z1, z2)``."""
        z, r = self.dim_z0, self.r
        G1c = np.zeros((z + r, z + r))
        G1c[:z, :z] = self.g1
        G1c[z:, :z] = self.b_lr @ self.k1
        G1c[z:, z:] = self.a_lr + self.b_lr @ self.k2_r
        G2c = np.vstack([self.g2, -self.l_r])
        Kc = np.hstack([self.k1, self.k2_r])
        return G1c, G2c, Kc


@dataclass
class ClosedLoop:
    a_e: np.ndarray
    b_e: np.ndarray
    c_e: np.ndarray
    d_e: np.ndarray
    partition: tuple  # (plant states, z1 states, z2 states)
    sys: object = None
    ctrl: object = None

    def abscissa(self):
        return spectral_abscissa(self.a_e)


def observer_riccati(sys, params):
    """Solve ``(A + a1 I) S + S (A + a1 I)^T - S C^T R1^{-1} C S + Q2 Q2^T = 0``.

    Returns
    -------
    (Sigma, L, residual)
        ``L = -Sigma C^T R1^{-1}`` and the relative CARE residual.
    """
    A, C = sys.a, sys.c
    n, p = A.shape[0], C.shape[0]
    R1 = _as_weight(params.r1, p, "R1")
    Q2 = np.eye(n) if params.q2 is None else np.asarray(params.q2, dtype=float)
    W = Q2 @ Q2.T
    As = (A + params.alpha1 * np.eye(n)).T
    try:
        S = care_solve(As, C.T, W, R1)
    except NotStabilizable as exc:
        raise NotDetectable(f"(C, A + alpha1 I) is not detectable: {exc}") from exc
    L = -S @ C.T @ np.linalg.inv(R1)
    return S, L, care_residual(As, C.T, W, R1, S)


def regulator_riccati(sys, im, params):
    """Solve the regulator Riccati equation for the series connection ``(G1, G2 C; A)``.

    Returns
    -------
    (Pi, K1, K2, residual)
    """
    A, B, C = sys.a, sys.b, sys.c
    n, m = B.shape
    z = im.dim_z0
    R2 = _as_weight(params.r2, m, "R2")
    q0 = np.eye(z) if params.q0 is None else np.asarray(params.q0, dtype=float)
    if z:
        check_observable(q0, im.g1)
    q1 = np.eye(n) if params.q1 is None else np.asarray(params.q1, dtype=float)
    Ac = np.block([[im.g1, im.g2 @ C], [np.zeros((n, z)), A]])
    Bc = np.vstack([np.zeros((z, m)), B])
    Q = np.zeros((z + n, z + n))
    Q[:z, :z] = q0.T @ q0
    Q[z:, z:] = q1.T @ q1
    As = Ac + params.alpha2 * np.eye(z + n)
    try:
        Pi = care_solve(As, Bc, Q, R2)
    except NotStabilizable as exc:
        raise NotStabilizable(
            f"(A_c + alpha2 I, B_c) is not stabilizable; check the nonresonance margins: {exc}"
        ) from exc
    K = -solve_linear(R2, Bc.T @ Pi)
    return Pi, K[:, :z], K[:, z:], care_residual(As, Bc, Q, R2, Pi)


def _psd_factor(X):
    """``F`` with ``X = F F^T`` for symmetric positive semidefinite `X`."""
    d, V = np.linalg.eigh(0.5 * (X + X.T))
    d = np.clip(d, 0.0, None)
    return V * np.sqrt(d)


def gramians(a, b, c):
    """Controllability and observability gramians with their Lyapunov residuals."""
    P = lyapunov_solve(a, b @ b.T)
    Q = lyapunov_solve(a.T, c.T @ c)
    res = max(lyapunov_residual(a, P, b @ b.T), lyapunov_residual(a.T, Q, c.T @ c))
    return P, Q, res


def balanced_truncate(a_stab, b_aug, c_rows, r):
    """Square-root balanced truncation of a stable system.

    Parameters
    ----------
    a_stab : ndarray, shape (n, n)
        Hurwitz state matrix.
    b_aug, c_rows : ndarray
        Input and output matrices.
    r : int
        Reduced order, ``0 <= r <= n``. Hankel singular values below
        ``1e-14 * hsv[0]`` are never kept; `r` is lowered with a warning.

    Returns
    -------
    (a_r, b_r, c_r, hsv, info)
        ``info`` holds the Lyapunov residual and the order actually used.
    """
    n = a_stab.shape[0]
    if not 0 <= r <= n:
        raise InvalidArgument(f"r={r} outside [0, {n}]")
    if spectral_abscissa(a_stab) >= 0:
        raise NotHurwitz("balanced truncation needs a stable system")
    P, Q, lyap_res = gramians(a_stab, b_aug, c_rows)
    Lc, Lo = _psd_factor(P), _psd_factor(Q)
    U, S, V = svd(Lo.T @ Lc)
    hsv = S[:n]
    keep = int(np.sum(hsv > HSV_FLOOR * hsv[0])) if hsv.size and hsv[0] > 0 else 0
    if r > keep:
        log.warning("requested r=%d but only %d Hankel singular values exceed the floor; using r=%d", r, keep, keep)
        r = keep
    s = 1.0 / np.sqrt(hsv[:r])
    T = Lc @ V[:, :r] * s
    Ti = (s[:, None] * U[:, :r].T) @ Lo.T
    info = {"lyapunov_residual": lyap_res, "r": r}
    return Ti @ a_stab @ T, Ti @ b_aug, c_rows @ T, hsv, info


def frequency_response(a, b, c, omegas):
    """``G(i w) = c (i w I - a)^{-1} b`` for each `w`; returns (len(omegas), p, m)."""
    n = a.shape[0]
    out = []
    for w in omegas:
        out.append(c @ np.linalg.solve(1j * w * np.eye(n) - a, b))
    return np.array(out)


def bt_error_check(full, reduced, hsv, r, omegas=None):
    """Sampled ``max sigma_max(G - G_r)`` against the bound ``2 sum_{j>r} hsv_j``.

    Returns
    -------
    err, bound, scale : float
        ``scale = max_w ||G(i w)||``. Once the discarded values sit at the
        rounding level of the gramians, `err` and `bound` are both noise and
        the bound can only be checked as ``err <= bound + BT_ROUNDOFF * scale``
        (see :func:`bt_bound_holds`).
    """
    if omegas is None:
        omegas = np.logspace(-3, 3, 100)
    G = frequency_response(*full, omegas)
    Gr = frequency_response(*reduced, omegas) if reduced[0].shape[0] else np.zeros_like(G)
    err = max(np.linalg.svd(G[k] - Gr[k], compute_uv=False)[0] for k in range(len(omegas)))
    scale = max(np.linalg.svd(G[k], compute_uv=False)[0] for k in range(len(omegas)))
    bound = 2.0 * float(np.sum(hsv[r:]))
    return float(err), bound, float(scale)


def bt_bound_holds(err, bound, scale):
    return err <= bound + BT_ROUNDOFF * scale


def suggest_order(hsv, rel=1e-6):
    """Smallest ``r`` with ``sum_{j>r} hsv_j <= rel * hsv_1``."""
    hsv = np.asarray(hsv, dtype=float)
    if hsv.size == 0:
        return 0
    tails = np.concatenate([np.cumsum(hsv[::-1])[::-1], [0.0]])
    return int(np.argmax(tails <= rel * hsv[0]))


def hsv_report(ctrl):
    """Full Hankel singular value list and the suggested reduced order."""
    hsv = np.asarray(ctrl.hsv if hasattr(ctrl, "hsv") else ctrl, dtype=float)
    return {"hsv": hsv.tolist(), "suggested_r": suggest_order(hsv)}


def assemble_controller(im, k1, reduced, hsv, meta=None):
    """Package ``(G1, G2, K1)`` and the reduced observer ``(A_Lr, B_Lr, L_r, K2r)``."""
    a_lr, b_lr, l_r, k2_r = reduced
    return ControllerRealization(im.g1, im.g2, k1, a_lr, b_lr, l_r, k2_r, np.asarray(hsv), dict(meta or {}))


def synthesize(sys, im, params, check_bound=True):
    """Run both Riccati solves, the reduction and the controller assembly.

    Returns
    -------
    ControllerRealization
        ``meta`` holds the solver certificates: CARE and Lyapunov residuals,
        observer and regulator margins, and the sampled truncation error.
    """
    if im.p != sys.p:
        raise SpecMismatch(f"internal model built for p={im.p}, system has p={sys.p}")
    n, m = sys.n, sys.m
    r = n if params.r is None else int(params.r)
    if r > n:
        raise InvalidArgument(f"reduced order r={r} exceeds the design state size {n}")
    _, L, obs_res = observer_riccati(sys, params)
    _, K1, K2, reg_res = regulator_riccati(sys, im, params)
    A_L = sys.a + L @ sys.c
    b_aug = np.hstack([sys.b, L])
    meta = {
        "care_residual_observer": obs_res,
        "care_residual_regulator": reg_res,
        "observer_abscissa": spectral_abscissa(A_L),
        "design_size": n,
    }
    Ac = np.block([[im.g1, im.g2 @ sys.c], [np.zeros((n, im.dim_z0)), sys.a]])
    Bc = np.vstack([np.zeros((im.dim_z0, m)), sys.b])
    meta["regulator_abscissa"] = spectral_abscissa(Ac + Bc @ np.hstack([K1, K2]))

    if params.r is None:
        # full-order observer; HSVs still reported
        _, _, hsv, info = _hsv_only(A_L, b_aug, K2)
        reduced = (A_L, sys.b, L, K2)
        meta.update(info)
        meta["bt_error"], meta["bt_bound"], meta["bt_scale"] = 0.0, 0.0, 0.0
    else:
        a_r, bl_r, c_r, hsv, info = balanced_truncate(A_L, b_aug, K2, r)
        reduced = (a_r, bl_r[:, :m], bl_r[:, m:], c_r)
        meta.update(info)
        if check_bound:
            err, bound, scale = bt_error_check((A_L, b_aug, K2), (a_r, bl_r, c_r), hsv, info["r"])
            meta["bt_error"], meta["bt_bound"], meta["bt_scale"] = err, bound, scale
    return assemble_controller(im, K1, reduced, hsv, meta)


def _hsv_only(a, b, c):
    P, Q, res = gramians(a, b, c)
    Lc, Lo = _psd_factor(P), _psd_factor(Q)
    hsv = np.linalg.svd(Lo.T @ Lc, compute_uv=False)
    return P, Q, hsv, {"lyapunov_residual": res, "r": a.shape[0]}


def hankel_singular_values(sys, im, params):
    """HSVs of the stabilized observer system without any reduction."""
    _, L, _ = observer_riccati(sys, params)
    _, _, K2, _ = regulator_riccati(sys, im, params)
    return _hsv_only(sys.a + L @ sys.c, np.hstack([sys.b, L]), K2)[2]


def assemble_closed_loop(sys, ctrl):
    """Closed loop of an extended plant (possibly on a finer mesh) with `ctrl`.

    ``A_e = [[A, B Kc], [G2c C, G1c]]``, ``B_e = [0; -G2c]``,
    ``C_e = [C, 0]``, ``D_e = -I``.
    """
    if sys.p != ctrl.p or sys.m != ctrl.m:
        raise SpecMismatch(f"controller is for (p, m)=({ctrl.p}, {ctrl.m}), plant has ({sys.p}, {sys.m})")
    G1c, G2c, Kc = ctrl.realization()
    n, k = sys.n, G1c.shape[0]
    a_e = np.block([[sys.a, sys.b @ Kc], [G2c @ sys.c, G1c]])
    b_e = np.vstack([np.zeros((n, sys.p)), -G2c])
    c_e = np.hstack([sys.c, np.zeros((sys.p, k))])
    d_e = -np.eye(sys.p)
    return ClosedLoop(a_e, b_e, c_e, d_e, (n, ctrl.dim_z0, ctrl.r), sys, ctrl)


# ---------------------------------------------------------- serialization

_BLOCKS = ("g1", "g2", "k1", "a_lr", "b_lr", "l_r", "k2_r", "hsv")


def write_controller(path, ctrl, meta=None):
    """Plain-text controller file: ``meta <key> <value>`` lines, then matrices.

    Every matrix starts with ``matrix <name> <rows> <cols>`` followed by one
    line per row of space-separated values with 17 significant digits.
    """
    lines = ["# regsynth controller realization"]
    for k, v in sorted((meta or {}).items()):
        lines.append(f"meta {k} {v}")
    for name in _BLOCKS:
        M = np.atleast_2d(np.asarray(getattr(ctrl, name), dtype=float))
        if name == "hsv":
            M = M.reshape(1, -1)
        lines.append(f"matrix {name} {M.shape[0]} {M.shape[1]}")
        lines += [" ".join(f"{v:.17g}" for v in row) for row in M]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_controller(path):
    """Inverse of :func:`write_controller`; returns ``(ControllerRealization, meta)``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    meta, mats, i = {}, {}, 0
    while i < len(lines):
        tok = lines[i].split()
        i += 1
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] == "meta" and len(tok) >= 2:
            meta[tok[1]] = " ".join(tok[2:])
        elif tok[0] == "matrix" and len(tok) == 4:
            name, rows, cols = tok[1], int(tok[2]), int(tok[3])
            data = np.zeros((rows, cols))
            for k in range(rows):
                if i >= len(lines):
                    raise ParseError(f"matrix {name} is truncated", line=i)
                vals = lines[i].split()
                if len(vals) != cols:
                    raise ParseError(f"matrix {name} row {k} has {len(vals)} entries, expected {cols}", line=i + 1)
                data[k] = [float(v) for v in vals]
                i += 1
            mats[name] = data
        else:
            raise ParseError(f"unexpected line {lines[i - 1]!r}", line=i)
    missing = [b for b in _BLOCKS if b not in mats]
    if missing:
        raise ParseError(f"controller file lacks {missing}")
    ctrl = ControllerRealization(*(mats[b] for b in _BLOCKS[:-1]), mats["hsv"].ravel(), {})
    return ctrl, meta


def write_hsv_csv(path, hsv):
    """``index,value`` rows, 1-based."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,value\n")
        for k, v in enumerate(np.asarray(hsv, dtype=float), 1):
            fh.write(f"{k},{v:.17g}\n")
