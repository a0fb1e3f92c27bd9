"""Internal model ``(G1, G2)`` for the frequencies of the reference signals."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidArgument, NotObservable
from .numlin import RANK_TOL, eigenvalues, svd


@dataclass(frozen=True)
class InternalModel:
    p: int
    freqs: tuple  # ((omega_k, n_k), ...)
    g1: np.ndarray
    g2: np.ndarray

    @property
    def dim_z0(self):
        return self.g1.shape[0]

    def expected_spectrum(self):
        """Eigenvalues of ``G1`` with their multiplicities, as a flat array."""
        out = []
        for w, nk in self.freqs:
            if w == 0:
                out += [0.0] * (self.p * nk)
            else:
                out += [1j * w] * (self.p * nk) + [-1j * w] * (self.p * nk)
        return np.array(out, dtype=complex)


def _jordan_chain(block, n, p):
    """Block upper-bidiagonal matrix with `block` on the diagonal and I on the superdiagonal."""
    d = block.shape[0]
    J = np.kron(np.eye(n), block)
    J += np.kron(np.eye(n, k=1), np.eye(d))
    return J


def build_internal_model(p, freqs):
    """Assemble ``G1 = diag(J_0, J_1, ...)`` and ``G2 = (G2^0, G2^1, ...)``.

    Parameters
    ----------
    p : int
        Number of outputs.
    freqs : sequence of (float, int)
        Pairs ``(omega_k, n_k)`` with strictly increasing ``omega_k >= 0``;
        ``n_k`` is the number of Jordan copies (polynomial degree + 1).

    Returns
    -------
    InternalModel
        ``J_0`` is the nilpotent chain with ``I_p`` on its superdiagonal and
        ``G2^0 = (0, ..., 0, I_p)``. For ``omega_k > 0`` the chain is built on
        ``Omega_k = [[0, w I_p], [-w I_p, 0]]`` with
        ``G2^k = (0, ..., 0, I_p, 0_p)``.
    """
    p = int(p)
    if p < 1:
        raise InvalidArgument("p must be positive")
    freqs = tuple((float(w), int(nk)) for w, nk in freqs)
    if not freqs:
        raise InvalidArgument("at least one frequency is required")
    ws = [w for w, _ in freqs]
    if any(w < 0 for w in ws):
        raise InvalidArgument("frequencies must be non-negative")
    if any(b <= a for a, b in zip(ws, ws[1:])):
        raise InvalidArgument("frequencies must be strictly increasing (no duplicates)")
    if any(nk < 1 for _, nk in freqs):
        raise InvalidArgument("multiplicities n_k must be at least 1")

    blocks, cols = [], []
    Ip = np.eye(p)
    for w, nk in freqs:
        if w == 0:
            blocks.append(_jordan_chain(np.zeros((p, p)), nk, p))
            col = np.zeros((p * nk, p))
            col[-p:] = Ip
        else:
            omega = np.block([[np.zeros((p, p)), w * Ip], [-w * Ip, np.zeros((p, p))]])
            blocks.append(_jordan_chain(omega, nk, p))
            col = np.zeros((2 * p * nk, p))
            col[-2 * p : -p] = Ip
        cols.append(col)
    return InternalModel(p, freqs, linalg.block_diag(*blocks), np.vstack(cols))


def observability_rank(A, C, tol=RANK_TOL):
    """Numerical rank of ``[C; C A; ...; C A^{n-1}]`` (SVD, relative tolerance).

    The rows are built from an orthonormal basis of the growing Krylov space
    so that powers of ``A`` do not swamp the rank decision.
    """
    n = A.shape[0]
    if C.size == 0:
        return 0
    # staircase: orthonormalize the row space step by step
    Q = np.zeros((0, n))
    block = C
    for _ in range(n):
        U, S, V = svd(np.vstack([Q, block]))
        r = int(np.sum(S > tol * max(S[0], 1e-300)))
        newQ = V[:, :r].T
        if r == Q.shape[0]:
            break
        Q = newQ
        block = block @ A
        nb = np.linalg.norm(block)
        if nb > 0:
            block = block / nb
    return Q.shape[0]


def default_q0(im):
    """Identity weight ``Q0 = I`` on ``Z0``; ``(Q0, G1)`` is observable by construction."""
    q0 = np.eye(im.dim_z0)
    check_observable(q0, im.g1)
    return q0


def _distinct(ev, tol=1e-8):
    out = []
    for s in ev:
        if all(abs(s - t) > tol * max(1.0, abs(t)) for t in out):
            out.append(s)
    return out


def _hautus_margin(stack, points):
    """Smallest ``sigma_min(stack(s))`` over `points`, with the worst point."""
    worst = (np.inf, None)
    for s in points:
        sig = svd(stack(s))[1]
        worst = min(worst, (sig[-1] if sig.size else 0.0, s), key=lambda t: t[0])
    return worst


def check_observable(q0, g1, tol=RANK_TOL):
    """Raise NotObservable unless ``(q0, g1)`` is observable.

    Uses the Hautus test ``rank [s I - G1; Q0] = dim`` at every distinct
    eigenvalue; unlike a Krylov rank it stays well conditioned on long
    Jordan chains. Returns the dimension on success.
    """
    g1, q0 = np.asarray(g1, dtype=float), np.asarray(q0, dtype=float)
    n = g1.shape[0]
    scale = max(np.linalg.norm(g1, 2), np.linalg.norm(q0, 2), 1.0)
    sig, s = _hautus_margin(lambda s: np.vstack([s * np.eye(n) - g1, q0]), _distinct(eigenvalues(g1)))
    if not sig > tol * scale:
        raise NotObservable(f"(Q0, G1) loses observability at s={s:.6g} (sigma_min={sig:.3e})")
    return n


def is_controllable(im, tol=RANK_TOL):
    """Hautus test of ``(G1, G2)`` at the known internal-model spectrum."""
    n = im.dim_z0
    scale = max(np.linalg.norm(im.g1, 2), 1.0)
    sig, _ = _hautus_margin(lambda s: np.hstack([s * np.eye(n) - im.g1, im.g2]), _distinct(im.expected_spectrum()))
    return bool(sig > tol * scale)
