import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from regsynth import signals
from regsynth.errors import InvalidArgument
from regsynth.signals import PiecewiseLinearWave, ReferenceSignal, eval_reference, fourier_truncate


def test_eval_shapes(heat_reference):
    assert eval_reference(heat_reference, 0.3).shape == (1,)
    assert eval_reference(heat_reference, np.linspace(0, 1, 7)).shape == (1, 7)
    t = np.linspace(0, 5, 11)
    np.testing.assert_allclose(eval_reference(heat_reference, t)[0], 1 + np.sin(2 * t))


def test_polynomial_coefficients():
    sig = ReferenceSignal.from_terms(2, {0.0: ([[1, 2], [0, 0]], None), 3.0: ([[0], [1]], [[0, 1], [0, 0]])})
    t = np.array([0.0, 0.7, 2.0])
    expect = np.vstack([1 + 2 * t + t * np.sin(3 * t), np.cos(3 * t)])
    np.testing.assert_allclose(eval_reference(sig, t), expect)
    assert sig.frequencies() == [(0.0, 2), (3.0, 2)]
    assert signals.lambda_norm(sig) == pytest.approx(np.sqrt(1 + 4 + 1 + 1))


def test_invalid_signals():
    with pytest.raises(InvalidArgument):
        ReferenceSignal.from_terms(1, {0.0: ([[1.0]], [[1.0]])})
    with pytest.raises(InvalidArgument):
        ReferenceSignal.from_terms(2, {1.0: ([[1.0]], None)})
    with pytest.raises(InvalidArgument):
        ReferenceSignal.from_terms(1, {-1.0: ([[1.0]], None)})


def test_addition_merges_frequencies():
    a = ReferenceSignal.from_terms(1, {0.0: ([[1.0]], None), 2.0: ([[1.0]], None)})
    b = ReferenceSignal.from_terms(1, {2.0: ([[0.0, 1.0]], None), 5.0: ([[0.0]], [[1.0]])})
    s = a + b
    assert s.frequencies() == [(0.0, 1), (2.0, 2), (5.0, 1)]
    t = np.linspace(0, 3, 13)
    np.testing.assert_allclose(eval_reference(s, t), eval_reference(a, t) + eval_reference(b, t))
    with pytest.raises(InvalidArgument):
        a + ReferenceSignal.from_terms(2, {0.0: ([[1.0], [1.0]], None)})


def test_wave_evaluation():
    wave = PiecewiseLinearWave(2.0, (0.0, 1.0), np.array([0.0, -1.0]))
    np.testing.assert_allclose(wave(np.array([0.0, 0.5, 1.0, 1.5, 2.0, 2.5]))[0], [0, -0.5, -1, -0.5, 0, -0.5])
    with pytest.raises(InvalidArgument):
        PiecewiseLinearWave(2.0, (0.0, 2.0), np.array([0.0, 1.0]))
    with pytest.raises(InvalidArgument):
        PiecewiseLinearWave(-1.0, (0.0,), np.array([0.0]))


def quad_coefficients(wave, q):
    T = wave.period
    brk = sorted(set(wave.times) | {T})
    out = []
    for k in range(q + 1):
        om = 2 * np.pi * k / T
        a = sum(
            integrate.quad(lambda t: wave(t)[0, 0] * np.cos(om * t), lo, hi, epsabs=1e-14)[0]
            for lo, hi in zip(brk, brk[1:])
        )
        b = sum(
            integrate.quad(lambda t: wave(t)[0, 0] * np.sin(om * t), lo, hi, epsabs=1e-14)[0]
            for lo, hi in zip(brk, brk[1:])
        )
        out.append((a / T, 0.0) if k == 0 else (2 * a / T, 2 * b / T))
    return out


@pytest.mark.parametrize(
    "wave",
    [
        PiecewiseLinearWave(2.0, (0.0, 1.0), np.array([0.0, -1.0])),
        PiecewiseLinearWave(3.0, (0.0, 0.5, 0.5, 2.0), np.array([1.0, 2.0, -1.0, 0.5])),
    ],
)
def test_fourier_against_quadrature(wave):
    q = 4
    sig = fourier_truncate(wave, q)
    oracle = quad_coefficients(wave, q)
    for term, (a, b) in zip(sig.terms, oracle):
        assert term.a[0, 0] == pytest.approx(a, abs=1e-12)
        assert term.b[0, 0] == pytest.approx(b, abs=1e-12)


def test_triangle_wave_closed_form():
    # mean -1/2; cosine coefficients -4/(pi k)^2 for odd k at period 2
    sig = fourier_truncate(PiecewiseLinearWave(2.0, (0.0, 1.0), np.array([0.0, -1.0])), 3)
    a = [t.a[0, 0] for t in sig.terms]
    np.testing.assert_allclose(a, [-0.5, 4 / np.pi**2, 0.0, 4 / (9 * np.pi**2)], atol=1e-14)
    assert [t.omega for t in sig.terms] == pytest.approx([0, np.pi, 2 * np.pi, 3 * np.pi])


@given(st.integers(1, 6), st.floats(0.5, 5.0), st.lists(st.floats(-2, 2), min_size=2, max_size=5))
def test_truncation_error_decreases(q, period, vals):
    times = tuple(np.linspace(0, period, len(vals), endpoint=False))
    wave = PiecewiseLinearWave(period, times, np.array(vals))
    t = np.linspace(0, period, 301)
    err_q = np.sqrt(np.mean((eval_reference(fourier_truncate(wave, q), t) - wave(t)) ** 2))
    err_2q = np.sqrt(np.mean((eval_reference(fourier_truncate(wave, 4 * q), t) - wave(t)) ** 2))
    assert err_2q <= err_q + 1e-9


def test_negative_order():
    with pytest.raises(InvalidArgument):
        fourier_truncate(PiecewiseLinearWave(1.0, (0.0,), np.array([1.0])), -1)
