import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regsynth import internal_model
from regsynth.errors import InvalidArgument, NotObservable
from regsynth.internal_model import build_internal_model


def sorted_spectrum(z):
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def test_dimension_formula():
    im = build_internal_model(2, [(float(k), 1) for k in range(11)])
    assert im.dim_z0 == 2 * (1 + 2 * 10) == 42
    assert im.g2.shape == (42, 2)
    assert build_internal_model(1, [(0.0, 1), (2.0, 1)]).dim_z0 == 3
    assert build_internal_model(3, [(0.0, 2), (1.5, 3)]).dim_z0 == 3 * 2 + 2 * 3 * 3


def test_spectrum_dim42():
    im = build_internal_model(2, [(float(k), 1) for k in range(11)])
    ev = np.linalg.eigvals(im.g1)
    np.testing.assert_allclose(sorted_spectrum(ev), sorted_spectrum(im.expected_spectrum()), atol=1e-9)


def test_spectrum_dim6():
    im = build_internal_model(2, [(0.0, 1), (np.pi, 1)])
    assert im.dim_z0 == 6
    ev = np.linalg.eigvals(im.g1)
    np.testing.assert_allclose(
        sorted_spectrum(ev), sorted_spectrum([0, 0, 1j * np.pi, 1j * np.pi, -1j * np.pi, -1j * np.pi]), atol=1e-9
    )


def test_jordan_structure():
    # polynomial growth: (G1 - i w)^{n_k} annihilates the block, (G1 - i w)^{n_k - 1} does not
    im = build_internal_model(1, [(0.0, 3)])
    g = im.g1
    assert np.all(np.linalg.matrix_power(g, 3) == 0)
    assert np.any(np.linalg.matrix_power(g, 2))
    im = build_internal_model(1, [(2.0, 2)])
    om = np.array([[0, 2.0], [-2.0, 0]])
    blk = im.g1
    np.testing.assert_array_equal(blk[:2, :2], om)
    np.testing.assert_array_equal(blk[:2, 2:], np.eye(2))
    np.testing.assert_array_equal(im.g2.ravel(), [0, 0, 1, 0])


def test_g1_is_skew_without_jordan_chains():
    im = build_internal_model(2, [(0.5, 1), (1.0, 1), (4.0, 1)])
    np.testing.assert_array_equal(im.g1, -im.g1.T)


@pytest.mark.parametrize(
    "p, freqs",
    [(0, [(0.0, 1)]), (1, []), (1, [(-1.0, 1)]), (1, [(1.0, 1), (1.0, 1)]), (1, [(2.0, 1), (1.0, 1)]), (1, [(1.0, 0)])],
)
def test_invalid(p, freqs):
    with pytest.raises(InvalidArgument):
        build_internal_model(p, freqs)


@given(
    st.integers(1, 3),
    st.lists(
        st.tuples(st.floats(0.0, 20.0), st.integers(1, 3)), min_size=1, max_size=4, unique_by=lambda t: round(t[0], 3)
    ),
)
def test_controllable_and_observable(p, raw):
    freqs = sorted((round(w, 3), n) for w, n in raw)
    im = build_internal_model(p, freqs)
    assert im.dim_z0 == sum(p * n * (1 if w == 0 else 2) for w, n in freqs)
    assert internal_model.is_controllable(im)
    assert internal_model.check_observable(internal_model.default_q0(im), im.g1) == im.dim_z0


def test_not_controllable():
    im = build_internal_model(1, [(0.0, 1), (2.0, 2)])
    broken = internal_model.InternalModel(im.p, im.freqs, im.g1, np.zeros_like(im.g2))
    assert internal_model.is_controllable(im) and not internal_model.is_controllable(broken)


def test_not_observable():
    im = build_internal_model(1, [(0.0, 2)])
    # only the top of the chain is measured: the rank stops at 1
    with pytest.raises(NotObservable):
        internal_model.check_observable(np.array([[0.0, 1.0]]), im.g1)
    assert internal_model.check_observable(np.array([[1.0, 0.0]]), im.g1) == 2


def test_observability_rank_examples():
    a = np.diag([1.0, 2.0, 3.0])
    assert internal_model.observability_rank(a, np.ones((1, 3))) == 3
    assert internal_model.observability_rank(a, np.array([[1.0, 1.0, 0.0]])) == 2
    assert internal_model.observability_rank(a, np.zeros((0, 3))) == 0
