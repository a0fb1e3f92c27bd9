"""Dense linear algebra used throughout the synthesis pipeline.

Matrices are plain 2-D ``numpy.ndarray`` objects. The factorizations are
LAPACK-backed (via numpy/scipy); this module adds the contracts the rest of
the package relies on: finite inputs, pivot checks, Hurwitz checks,
residual certificates, and the Hamiltonian/Newton-Kleinman Riccati solver.
"""

import warnings

import numpy as np
from scipy import linalg

from .errors import InvalidArgument, NoConvergence, NotHurwitz, NotStabilizable, SingularMatrix

PIVOT_TOL = 1e-14
CONVERGENCE_TOL = 1e-10
RANK_TOL = 1e-9


def as_matrix(A, name="matrix", allow_complex=False):
    """Return `A` as a finite 2-D float (or complex) array."""
    dtype = complex if allow_complex and np.iscomplexobj(A) else float
    M = np.atleast_2d(np.asarray(A, dtype=dtype))
    if M.ndim != 2:
        raise InvalidArgument(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidArgument(f"{name} has non-finite entries")
    return M


def _square(A, name="matrix", allow_complex=False):
    M = as_matrix(A, name, allow_complex)
    if M.shape[0] != M.shape[1]:
        raise InvalidArgument(f"{name} must be square, got shape {M.shape}")
    return M


def solve_linear(A, B):
    """Solve ``A X = B`` by partially pivoted LU.

    Raises
    ------
    SingularMatrix
        If a pivot is smaller than ``1e-14 * max|A|``.
    """
    A = _square(A, "A", allow_complex=True)
    B = np.asarray(B)
    vector = B.ndim == 1
    B = as_matrix(B.reshape(-1, 1) if vector else B, "B", allow_complex=True)
    if B.shape[0] != A.shape[0]:
        raise InvalidArgument(f"row mismatch: A is {A.shape}, B is {B.shape}")
    if A.size == 0:
        return np.zeros((0, B.shape[1]))
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrix
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=False)
    scale = np.max(np.abs(A))
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() < PIVOT_TOL * scale:
        raise SingularMatrix(f"pivot {pivots.min():.3e} below {PIVOT_TOL:g} * max|A| = {PIVOT_TOL * scale:.3e}")
    X = linalg.lu_solve((lu, piv), B, check_finite=False)
    return X.ravel() if vector else X


def real_schur(A):
    """Real Schur decomposition ``A = Q T Q^T``.

    ``T`` is quasi upper triangular with 1x1 and 2x2 diagonal blocks.
    """
    A = _square(A, "A")
    try:
        T, Q = linalg.schur(A, output="real", check_finite=False)
    except linalg.LinAlgError as exc:
        raise NoConvergence(f"QR iteration failed: {exc}") from exc
    return Q, T


def _schur_blocks(T):
    """Yield ``(start, size)`` of the diagonal blocks of a quasi-triangular T."""
    n = T.shape[0]
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            yield i, 2
            i += 2
        else:
            yield i, 1
            i += 1


def eigenvalues(A):
    """Eigenvalues read off the diagonal blocks of the real Schur form.

    Returns a complex array; complex eigenvalues appear in conjugate pairs.
    """
    A = _square(A, "A")
    if A.size == 0:
        return np.zeros(0, dtype=complex)
    _, T = real_schur(A)
    out = np.empty(A.shape[0], dtype=complex)
    for i, size in _schur_blocks(T):
        if size == 1:
            out[i] = T[i, i]
            continue
        a, b, c, d = T[i, i], T[i, i + 1], T[i + 1, i], T[i + 1, i + 1]
        mean = 0.5 * (a + d)
        disc = 0.25 * (a - d) ** 2 + b * c
        if disc < 0:
            root = 1j * np.sqrt(-disc)
            out[i], out[i + 1] = mean + root, mean - root
        else:
            root = np.sqrt(disc)
            out[i], out[i + 1] = mean + root, mean - root
    return out


def svd(A):
    """Thin SVD ``A = U diag(S) V^T`` with ``S`` non-increasing.

    Note that ``V`` (not ``V^T``) is returned.
    """
    A = as_matrix(A, "A", allow_complex=True)
    try:
        U, S, Vh = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"SVD did not converge: {exc}") from exc
    return U, S, Vh.conj().T


def spectral_abscissa(A):
    """Largest real part over the spectrum of `A`."""
    ev = eigenvalues(A)
    return float(np.max(ev.real)) if ev.size else -np.inf


def null_space(A, tol=RANK_TOL):
    """Orthonormal basis of the numerical kernel of `A`.

    Columns are right singular vectors whose singular value is at most
    ``tol * max singular value``. Returns an ``(n, 0)`` array when `A` has
    full column rank.
    """
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    A = as_matrix(A, "A", allow_complex=True)
    n = A.shape[1]
    if A.size == 0:
        return np.eye(n)
    _, S, Vh = np.linalg.svd(A, full_matrices=True)
    smax = S[0] if S.size else 0.0
    padded = np.zeros(n)
    padded[: S.size] = S
    mask = padded <= tol * smax if smax > 0 else np.ones(n, dtype=bool)
    return Vh.conj().T[:, mask]


def smallest_singular_value(A):
    """``sigma_min`` over ``min(rows, cols)`` singular values (rank-deficiency measure)."""
    A = np.asarray(A)
    if A.size == 0:
        return np.inf
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def lyapunov_residual(A, X, W):
    """Backward-error style residual of ``A X + X A^T + W = 0``.

    ``||A X + X A^T + W||_F / (2 ||A||_F ||X||_F + ||W||_F)``.
    """
    R = A @ X + X @ A.T + W
    denom = 2 * np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(W)
    return float(np.linalg.norm(R) / denom) if denom > 0 else float(np.linalg.norm(R))


def lyapunov_solve(A, W):
    """Solve ``A X + X A^T + W = 0`` for Hurwitz `A` (Bartels-Stewart).

    The result is symmetrized and its residual is re-verified; one step of
    iterative refinement is taken when the first solve is not accurate
    enough.

    Raises
    ------
    NotHurwitz
        If the spectral abscissa of `A` is not below ``-1e-12``.
    """
    A = _square(A, "A")
    W = _square(W, "W")
    if W.shape != A.shape:
        raise InvalidArgument(f"W has shape {W.shape}, expected {A.shape}")
    if A.size == 0:
        return np.zeros_like(A)
    abscissa = spectral_abscissa(A)
    if abscissa >= -1e-12:
        raise NotHurwitz(f"spectral abscissa {abscissa:.3e} is not negative")
    W = 0.5 * (W + W.T)
    X = linalg.solve_continuous_lyapunov(A, -W)
    X = 0.5 * (X + X.T)
    if lyapunov_residual(A, X, W) > RANK_TOL:
        R = A @ X + X @ A.T + W
        X = X + linalg.solve_continuous_lyapunov(A, -R)
        X = 0.5 * (X + X.T)
    return X


def care_residual(A, B, Q, R, X):
    """Relative residual of ``A^T X + X A - X B R^{-1} B^T X + Q = 0``."""
    G = B @ solve_linear(R, B.T)
    res = A.T @ X + X @ A - X @ G @ X + Q
    denom = np.linalg.norm(Q) + 2 * np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(X @ G @ X)
    return float(np.linalg.norm(res) / denom) if denom > 0 else float(np.linalg.norm(res))


def care_solve(A, B, Q, R, max_newton=20, tol=CONVERGENCE_TOL):
    """Stabilizing solution of ``A^T X + X A - X B R^{-1} B^T X + Q = 0``.

    The stable invariant subspace of the Hamiltonian
    ``[[A, -B R^{-1} B^T], [-Q, -A^T]]`` is extracted with an ordered real
    Schur form and ``X = X2 X1^{-1}``. The result is then polished by
    Newton-Kleinman steps (one Lyapunov solve each) until the relative
    residual drops below `tol`.

    Raises
    ------
    NotStabilizable
        If the stable subspace has the wrong dimension, ``X1`` is singular,
        or the closed loop ``A - B R^{-1} B^T X`` is not Hurwitz.
    NoConvergence
        If the residual stalls above ``1e-8``.
    """
    A = _square(A, "A")
    n = A.shape[0]
    B = as_matrix(B, "B").reshape(n, -1)
    Q = _square(Q, "Q")
    R = _square(R, "R")
    if n == 0:
        return np.zeros((0, 0))
    Q = 0.5 * (Q + Q.T)
    R = 0.5 * (R + R.T)
    G = B @ solve_linear(R, B.T)
    G = 0.5 * (G + G.T)
    H = np.block([[A, -G], [-Q, -A.T]])
    try:
        _, Z, sdim = linalg.schur(H, output="real", sort="lhp", check_finite=False)
    except linalg.LinAlgError as exc:
        raise NoConvergence(f"Hamiltonian Schur failed: {exc}") from exc
    if sdim != n:
        raise NotStabilizable(f"stable invariant subspace has dimension {sdim}, expected {n}")
    X1, X2 = Z[:n, :n], Z[n:, :n]
    try:
        X = solve_linear(X1.T, X2.T).T
    except SingularMatrix as exc:
        raise NotStabilizable(f"X1 is singular: {exc}") from exc
    X = 0.5 * (X + X.T)

    best, best_res = X, care_residual(A, B, Q, R, X)
    for _ in range(max_newton):
        K = solve_linear(R, B.T @ X)
        Ak = A - B @ K
        try:
            Xn = lyapunov_solve(Ak.T, Q + K.T @ R @ K)
        except NotHurwitz:
            break
        res = care_residual(A, B, Q, R, Xn)
        X = Xn
        if res < best_res:
            best, best_res = Xn, res
        if res <= tol:
            break
    X = best
    if best_res > 1e-8:
        raise NoConvergence(f"Riccati residual stalled at {best_res:.3e}")
    closed = A - G @ X
    if spectral_abscissa(closed) >= 0:
        raise NotStabilizable("closed-loop matrix A - B R^-1 B^T X is not Hurwitz")
    return X
