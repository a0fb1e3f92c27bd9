import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from regsynth import synthesis
from regsynth.errors import InvalidArgument, NotHurwitz, ParseError, SpecMismatch
from regsynth.extended import ExtendedSystem
from regsynth.internal_model import build_internal_model
from regsynth.numlin import spectral_abscissa
from regsynth.synthesis import SynthesisParams, balanced_truncate, synthesize

from .conftest import heat_system


def toy(a, b, c, eta=1.0):
    a, b, c = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (a, b, c))
    return ExtendedSystem(a, b, c, a.shape[0], 0, "toy", eta)


@pytest.fixture(scope="module")
def heat_design():
    sys = heat_system(30)
    im = build_internal_model(1, [(0.0, 1), (2.0, 1)])
    return sys, im


# ---------------------------------------------------------------- Riccati


def test_scalar_observer():
    # 2 S - S^2 + 1 = 0 -> S = 1 + sqrt 2
    S, L, res = synthesis.observer_riccati(toy(1.0, 1.0, 1.0), SynthesisParams(alpha1=0.0))
    assert S[0, 0] == pytest.approx(1 + np.sqrt(2), rel=1e-13)
    assert L[0, 0] == pytest.approx(-(1 + np.sqrt(2)), rel=1e-13)
    assert res < 1e-13


def test_scalar_observer_with_margin():
    # (1 + a) 2 S - S^2 / R + 1 = 0
    a, r = 0.5, 2.0
    S, _, _ = synthesis.observer_riccati(toy(1.0, 1.0, 1.0), SynthesisParams(alpha1=a, r1=r))
    assert S[0, 0] == pytest.approx(r * ((1 + a) + np.sqrt((1 + a) ** 2 + 1 / r)), rel=1e-12)


def test_regulator_matches_scipy(heat_design):
    sys, im = heat_design
    params = SynthesisParams(alpha2=0.5, r2=1.0)
    Pi, K1, K2, res = synthesis.regulator_riccati(sys, im, params)
    z, n = im.dim_z0, sys.n
    Ac = np.block([[im.g1, im.g2 @ sys.c], [np.zeros((n, z)), sys.a]]) + 0.5 * np.eye(z + n)
    Bc = np.vstack([np.zeros((z, 1)), sys.b])
    oracle = linalg.solve_continuous_are(Ac, Bc, np.eye(z + n), np.eye(1))
    assert np.linalg.norm(Pi - oracle) <= 1e-8 * np.linalg.norm(oracle)
    assert res < 1e-10
    assert spectral_abscissa(Ac + Bc @ np.hstack([K1, K2])) < 0


def test_weights_must_be_positive():
    with pytest.raises(InvalidArgument):
        synthesis.observer_riccati(toy(1.0, 1.0, 1.0), SynthesisParams(r1=-1.0))
    with pytest.raises(InvalidArgument):
        SynthesisParams(alpha1=-0.1)
    with pytest.raises(InvalidArgument):
        SynthesisParams(r=-1)


# ---------------------------------------------------- balanced truncation


def test_scalar_hsv():
    # P = Q = 1/2 for (-1, 1, 1)
    a, b, c, hsv, info = balanced_truncate(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]), 1)
    assert hsv[0] == pytest.approx(0.5, rel=1e-14)
    assert a[0, 0] == pytest.approx(-1.0) and abs(b[0, 0]) == pytest.approx(1.0) and info["r"] == 1


def test_full_order_transfer_identical(rng):
    n = 6
    a = rng.standard_normal((n, n))
    a -= (spectral_abscissa(a) + 1.0) * np.eye(n)
    b, c = rng.standard_normal((n, 2)), rng.standard_normal((1, n))
    ar, br, cr, hsv, _ = balanced_truncate(a, b, c, n)
    w = np.array([0.1, 1.0, 10.0])
    G = synthesis.frequency_response(a, b, c, w)
    Gr = synthesis.frequency_response(ar, br, cr, w)
    np.testing.assert_allclose(Gr, G, rtol=1e-8, atol=1e-10)


def test_balanced_gramians_equal_diag(rng):
    n = 5
    a = rng.standard_normal((n, n))
    a -= (spectral_abscissa(a) + 0.5) * np.eye(n)
    b, c = rng.standard_normal((n, 1)), rng.standard_normal((1, n))
    ar, br, cr, hsv, _ = balanced_truncate(a, b, c, n)
    P = linalg.solve_continuous_lyapunov(ar, -br @ br.T)
    Q = linalg.solve_continuous_lyapunov(ar.T, -cr.T @ cr)
    np.testing.assert_allclose(P, np.diag(hsv), atol=1e-9 * hsv[0])
    np.testing.assert_allclose(Q, np.diag(hsv), atol=1e-9 * hsv[0])


@given(st.integers(2, 7), st.integers(0, 10_000))
def test_truncation_bound(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a -= (spectral_abscissa(a) + 0.3) * np.eye(n)
    b, c = rng.standard_normal((n, 1)), rng.standard_normal((1, n))
    for r in range(n + 1):
        ar, br, cr, hsv, info = balanced_truncate(a, b, c, r)
        err, bound, scale = synthesis.bt_error_check((a, b, c), (ar, br, cr), hsv, info["r"])
        assert synthesis.bt_bound_holds(err, bound, scale)


def test_truncation_rejects_unstable_and_bad_order():
    with pytest.raises(NotHurwitz):
        balanced_truncate(np.array([[1.0]]), np.ones((1, 1)), np.ones((1, 1)), 1)
    with pytest.raises(InvalidArgument):
        balanced_truncate(-np.eye(2), np.ones((2, 1)), np.ones((1, 2)), 3)


def test_order_lowered_at_floor():
    # a decoupled, unobservable mode has a zero Hankel singular value
    a = np.diag([-1.0, -2.0])
    ar, _, _, hsv, info = balanced_truncate(a, np.array([[1.0], [1.0]]), np.array([[1.0, 0.0]]), 2)
    assert info["r"] == 1 and ar.shape == (1, 1)
    assert hsv[1] <= 1e-14 * hsv[0]


def test_permutation_invariance(rng):
    n = 5
    a = rng.standard_normal((n, n))
    a -= (spectral_abscissa(a) + 0.5) * np.eye(n)
    b, c = rng.standard_normal((n, 1)), rng.standard_normal((1, n))
    P = np.eye(n)[rng.permutation(n)]
    h1 = balanced_truncate(a, b, c, 2)[3]
    h2 = balanced_truncate(P @ a @ P.T, P @ b, c @ P.T, 2)[3]
    np.testing.assert_allclose(h1, h2, rtol=1e-9, atol=1e-12 * h1[0])


def test_suggest_order():
    assert synthesis.suggest_order([1.0, 1e-3, 1e-8, 1e-9]) == 2
    assert synthesis.suggest_order([]) == 0
    assert synthesis.suggest_order([1.0, 0.5]) == 2


# -------------------------------------------------------------- synthesis


def test_synthesize_heat(heat_design):
    sys, im = heat_design
    ctrl = synthesize(sys, im, SynthesisParams(alpha1=0.5, alpha2=0.5, r=8))
    m = ctrl.meta
    assert ctrl.r == 8 and ctrl.dim == im.dim_z0 + 8
    assert m["care_residual_observer"] < 1e-10 and m["care_residual_regulator"] < 1e-10
    assert m["observer_abscissa"] < -0.5 and m["regulator_abscissa"] < -0.5
    assert synthesis.bt_bound_holds(m["bt_error"], m["bt_bound"], m["bt_scale"])
    cl = synthesis.assemble_closed_loop(sys, ctrl)
    assert cl.abscissa() < 0
    assert cl.partition == (sys.n, im.dim_z0, 8)


def test_full_order_observer(heat_design):
    sys, im = heat_design
    ctrl = synthesize(sys, im, SynthesisParams())
    assert ctrl.r == sys.n
    assert synthesis.assemble_closed_loop(sys, ctrl).abscissa() < -0.5


def test_zero_order_observer(heat_design):
    sys, im = heat_design
    ctrl = synthesize(sys, im, SynthesisParams(r=0))
    assert ctrl.r == 0 and ctrl.dim == im.dim_z0
    assert ctrl.meta["bt_bound"] == pytest.approx(2 * ctrl.hsv.sum())


def test_synthesis_errors(heat_design):
    sys, im = heat_design
    with pytest.raises(InvalidArgument):
        synthesize(sys, im, SynthesisParams(r=sys.n + 1))
    with pytest.raises(SpecMismatch):
        synthesize(sys, build_internal_model(2, [(0.0, 1)]), SynthesisParams())


def test_hsv_match_synthesis(heat_design):
    sys, im = heat_design
    params = SynthesisParams(r=5)
    np.testing.assert_allclose(
        synthesis.hankel_singular_values(sys, im, params), synthesize(sys, im, params).hsv, rtol=1e-8, atol=1e-14
    )


# ---------------------------------------------------------- serialization


def test_controller_round_trip(tmp_path, heat_design):
    sys, im = heat_design
    ctrl = synthesize(sys, im, SynthesisParams(r=6))
    path = tmp_path / "controller.txt"
    synthesis.write_controller(path, ctrl, {"plant_hash": "abc", "eta": 1.0})
    back, meta = synthesis.read_controller(path)
    assert meta == {"eta": "1.0", "plant_hash": "abc"}
    for name in ("g1", "g2", "k1", "a_lr", "b_lr", "l_r", "k2_r", "hsv"):
        np.testing.assert_array_equal(getattr(back, name), getattr(ctrl, name))
    text = path.read_text().splitlines()
    assert text[0].startswith("#")
    assert "matrix g1 3 3" in text


def test_controller_parse_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("matrix g1 2 2\n1 2\n")
    with pytest.raises(ParseError):
        synthesis.read_controller(bad)
    bad.write_text("matrix g1 1 2\n1 2 3\n")
    with pytest.raises(ParseError):
        synthesis.read_controller(bad)
    bad.write_text("garbage\n")
    with pytest.raises(ParseError):
        synthesis.read_controller(bad)
    bad.write_text("matrix g1 1 1\n0\n")
    with pytest.raises(ParseError, match="lacks"):
        synthesis.read_controller(bad)


def test_hsv_csv(tmp_path):
    path = tmp_path / "hsv.csv"
    synthesis.write_hsv_csv(path, [0.5, 0.25])
    assert path.read_text() == "index,value\n1,0.5\n2,0.25\n"


def test_closed_loop_dimension_mismatch(heat_design):
    sys, im = heat_design
    ctrl = synthesize(sys, im, SynthesisParams(r=2))
    two = toy(np.eye(2), np.ones((2, 1)), np.eye(2))
    with pytest.raises(SpecMismatch):
        synthesis.assemble_closed_loop(two, ctrl)
