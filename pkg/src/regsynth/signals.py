"""Reference signals ``y_ref(t) = a_0(t) + sum_k (a_k(t) cos w_k t + b_k(t) sin w_k t)``.

The coefficient functions are polynomials in ``t``; ``a_k[:, j]`` holds the
coefficient of ``t**j``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

GAUSS_POINTS = 64


@dataclass(frozen=True)
class SignalTerm:
    omega: float
    a: np.ndarray  # (p, n_k) polynomial coefficients of the cosine part
    b: np.ndarray  # (p, n_k) polynomial coefficients of the sine part (zero for omega = 0)

    @property
    def n(self):
        return self.a.shape[1]


@dataclass(frozen=True)
class ReferenceSignal:
    p: int
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ws = [t.omega for t in self.terms]
        if any(w < 0 for w in ws) or any(b <= a for a, b in zip(ws, ws[1:])):
            raise InvalidArgument("signal frequencies must be non-negative and strictly increasing")
        for t in self.terms:
            if t.a.shape != t.b.shape or t.a.shape[0] != self.p:
                raise InvalidArgument("coefficient arrays must both be (p, n_k)")
            if t.omega == 0 and np.any(t.b):
                raise InvalidArgument("the zero-frequency term has no sine part")

    @classmethod
    def from_terms(cls, p, spec):
        """Build from ``{omega: (a, b)}`` with array-like ``(p, n_k)`` coefficients."""
        terms = []
        for w in sorted(spec):
            a, b = spec[w]
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.zeros_like(a) if b is None else np.atleast_2d(np.asarray(b, dtype=float))
            if a.shape != b.shape:
                width = max(a.shape[1], b.shape[1])
                a = np.pad(a, ((0, 0), (0, width - a.shape[1])))
                b = np.pad(b, ((0, 0), (0, width - b.shape[1])))
            terms.append(SignalTerm(float(w), a, b))
        return cls(int(p), tuple(terms))

    def frequencies(self):
        """``(omega_k, n_k)`` pairs for :func:`internal_model.build_internal_model`."""
        return [(t.omega, t.n) for t in self.terms]

    def __add__(self, other):
        if self.p != other.p:
            raise InvalidArgument("output dimensions differ")
        merged = {}
        for t in self.terms + other.terms:
            a, b = merged.get(t.omega, (np.zeros((self.p, 0)), np.zeros((self.p, 0))))
            width = max(a.shape[1], t.n)
            pad = lambda x: np.pad(x, ((0, 0), (0, width - x.shape[1])))  # noqa: E731
            merged[t.omega] = (pad(a) + pad(t.a), pad(b) + pad(t.b))
        return ReferenceSignal.from_terms(self.p, merged)


def _polyval(coeffs, t):
    # coeffs (p, n) in increasing powers; t array (T,) -> (p, T)
    powers = np.power.outer(t, np.arange(coeffs.shape[1]))  # (T, n)
    return coeffs @ powers.T


def eval_reference(sig, t):
    """``y_ref(t)``: a ``(p,)`` vector for scalar `t`, ``(p, T)`` for an array."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((sig.p, t.size))
    for term in sig.terms:
        if term.omega == 0:
            out += _polyval(term.a, t)
        else:
            out += _polyval(term.a, t) * np.cos(term.omega * t) + _polyval(term.b, t) * np.sin(term.omega * t)
    return out[:, 0] if scalar else out


def lambda_norm(sig):
    """Euclidean norm of all polynomial coefficients (the vector ``Lambda``)."""
    parts = [np.concatenate([t.a.ravel(), t.b.ravel()]) for t in sig.terms]
    return float(np.linalg.norm(np.concatenate(parts))) if parts else 0.0


@dataclass(frozen=True)
class PiecewiseLinearWave:
    """Periodic piecewise-linear profile through ``(t_i, value_i)`` on ``[0, period)``.

    Consecutive points are joined linearly and the last point connects to
    the first one shifted by one period. Repeating a time encodes a jump.
    """

    period: float
    times: tuple
    values: np.ndarray  # (len(times), p)

    def __post_init__(self):
        if not self.period > 0:
            raise InvalidArgument("period must be positive")
        t = np.asarray(self.times, dtype=float)
        if t.size < 1 or t[0] < 0 or t[-1] >= self.period or np.any(np.diff(t) < 0):
            raise InvalidArgument("breakpoints must be ordered within [0, period)")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != t.size:
            raise InvalidArgument("one value vector per breakpoint is required")
        object.__setattr__(self, "times", tuple(t))
        object.__setattr__(self, "values", vals)

    @property
    def p(self):
        return self.values.shape[1]

    def segments(self):
        """Linear pieces ``(t0, t1, v0, v1)`` covering exactly one period."""
        t = list(self.times) + [self.times[0] + self.period]
        v = list(self.values) + [self.values[0]]
        return [(t[i], t[i + 1], v[i], v[i + 1]) for i in range(len(t) - 1) if t[i + 1] > t[i]]

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tau = np.mod(t - self.times[0], self.period) + self.times[0]
        out = np.zeros((self.p, t.size))
        for t0, t1, v0, v1 in self.segments():
            sel = (tau >= t0) & (tau < t1)
            s = (tau[sel] - t0) / (t1 - t0)
            out[:, sel] = np.outer(v0, 1 - s) + np.outer(v1, s)
        return out


def fourier_truncate(wave, q, points=GAUSS_POINTS):
    """Truncated Fourier series of a periodic piecewise-linear wave.

    Coefficients use `points`-point Gauss-Legendre quadrature on every linear
    segment, exact up to rounding for these integrands at the default 64.
    Frequencies are ``2 pi k / period`` for ``k = 0..q``, each with ``n_k = 1``.
    """
    if q < 0:
        raise InvalidArgument("q must be non-negative")
    x, w = np.polynomial.legendre.leggauss(points)
    T = wave.period
    spec = {}
    coeff_a = np.zeros((q + 1, wave.p))
    coeff_b = np.zeros((q + 1, wave.p))
    for t0, t1, v0, v1 in wave.segments():
        tq = 0.5 * (t1 - t0) * x + 0.5 * (t1 + t0)
        wq = 0.5 * (t1 - t0) * w
        s = (tq - t0) / (t1 - t0)
        vals = np.outer(1 - s, v0) + np.outer(s, v1)  # (Q, p)
        for k in range(q + 1):
            om = 2 * np.pi * k / T
            coeff_a[k] += (wq * np.cos(om * tq)) @ vals
            coeff_b[k] += (wq * np.sin(om * tq)) @ vals
    for k in range(q + 1):
        om = 2 * np.pi * k / T
        if k == 0:
            spec[0.0] = (coeff_a[0][:, None] / T, None)
        else:
            spec[om] = ((2 / T) * coeff_a[k][:, None], (2 / T) * coeff_b[k][:, None])
    return ReferenceSignal.from_terms(wave.p, spec)
