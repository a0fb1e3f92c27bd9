import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from regsynth import extended, extension, fields
from regsynth.errors import InvalidArgument
from regsynth.extended import ExtendedSystem, assemble_extended
from regsynth.models import discretize

from .conftest import beam_spec, heat_spec, heat_system, square_spec

SENSOR_ORTHOGONAL = 0.09199966844773966
SENSOR_DC_ZERO = 0.09199966844773964


def toy(a, b, c, eta=1.0):
    n = a.shape[0]
    return ExtendedSystem(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float), n, 0, "toy", eta)


# ------------------------------------------------------------- structure


def test_heat_block_structure(heat_sys):
    n = heat_sys.plant_dofs
    assert heat_sys.a.shape == (n + 1, n + 1)
    # alpha = 0: no reaction coupling into the plant rows
    assert np.all(heat_sys.a[:n, n:] == 0)
    assert np.all(heat_sys.a[n:, :n] == 0)
    assert heat_sys.a[n, n] == 1.0
    np.testing.assert_array_equal(heat_sys.b[:n], -heat_sys.e_n)
    assert heat_sys.b[n, 0] == 1.0


def test_output_consistency(heat_sys):
    # C x reproduces C0 w for w = v + E u
    rng = np.random.default_rng(3)
    w, u = rng.standard_normal(heat_sys.plant_dofs), rng.standard_normal(1)
    x = heat_sys.initial_state(w, u)
    assert heat_sys.c @ x == pytest.approx(heat_sys.plant.c0 @ w, rel=1e-12)
    assert heat_sys.physical_input(x) == pytest.approx(u)


def test_spectrum_contains_eta():
    sys = heat_system(20, eta=2.5)
    ev = np.linalg.eigvals(sys.a)
    assert np.min(np.abs(ev - 2.5)) < 1e-12
    plant_ev = np.sort(np.linalg.eigvals(sys.plant.A0).real)
    np.testing.assert_allclose(np.sort(ev.real)[:-1], plant_ev, atol=1e-9)


def test_kappa_first_order(heat_sys):
    assert heat_sys.kappa(2.0, 3.0) == pytest.approx(3.0 - heat_sys.eta * 2.0)


def test_beam_v2_companion():
    plant = discretize(beam_spec(), 12)
    eta = 10.0
    sys = assemble_extended(plant, extension.build_extension(plant, eta, "v2"))
    n = plant.n
    blk = sys.a[n:, n:]
    a_eta, damp = 10.0 * eta, 0.01 * eta + 1e-5
    np.testing.assert_allclose(blk, [[0, 1], [-a_eta, -damp]])
    roots = np.sort_complex(np.roots([1, damp, a_eta]))
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(blk)), roots, rtol=1e-12)
    assert sys.b[n + 1, 0] == 1.0 and sys.b[n, 0] == 0.0
    assert np.all(sys.b[: plant.extra["nw"]] == 0)
    assert sys.kappa(1.0, 2.0, 3.0) == pytest.approx(3.0 + damp * 2.0 + a_eta)
    np.testing.assert_array_equal(sys.u_index, [n])


def test_beam_v2_initial_state():
    plant = discretize(beam_spec(), 8)
    sys = assemble_extended(plant, extension.build_extension(plant, 10.0, "v2"))
    w0 = np.zeros(plant.n)
    x = sys.initial_state(w0, 0.5, -0.25)
    g = sys.e_n[:, 0]
    np.testing.assert_allclose(x[: g.size], -0.5 * g)
    np.testing.assert_allclose(x[g.size : plant.n], 0.25 * g)
    np.testing.assert_allclose(x[plant.n :], [0.5, -0.25])


def test_beam_v1_boundary_term():
    plant = discretize(beam_spec(), 10)
    ext = extension.build_extension(plant, 0.12, "v1")
    lit = assemble_extended(plant, ext, boundary_consistent=False)
    cons = assemble_extended(plant, ext)
    nw = plant.extra["nw"]
    np.testing.assert_array_equal(lit.a, cons.a)
    np.testing.assert_array_equal(lit.b[:nw], cons.b[:nw])
    delta = cons.b[nw : plant.n, 0] - lit.b[nw : plant.n, 0]
    # M delta = beta e_slope
    m_delta = plant.fem.mass @ delta
    np.testing.assert_allclose(m_delta[:-1], 0, atol=1e-12)
    assert m_delta[-1] == pytest.approx(0.01)


def test_wrong_extension_shape():
    plant = discretize(heat_spec(), 10)
    ext = extension.build_extension(plant, 1.0)
    with pytest.raises(InvalidArgument):
        assemble_extended(plant, ext, e_n=np.ones((5, 1)))
    with pytest.raises(InvalidArgument):
        heat_system(10).initial_state(np.zeros(3), 0.0)


def test_square_system_shapes():
    plant = discretize(square_spec(2), 8)
    sys = assemble_extended(plant, extension.build_extension(plant, 0.5))
    assert (sys.n, sys.m, sys.p) == (plant.n + 1, 1, 2)


# ---------------------------------------------------------------- checks


def test_hand_examples_3x3():
    a = np.diag([1.0, -1.0, -2.0])
    b = np.array([[1.0], [0.0], [0.0]])
    good = toy(a, b, np.array([[1.0, 0.0, 0.0]]))
    assert extended.check_detectability(good).passed
    assert extended.check_stabilizability(good).passed
    blind = toy(a, b, np.array([[0.0, 1.0, 1.0]]))
    rep = extended.check_detectability(blind)
    assert not rep.passed
    assert any(abs(s - 1.0) < 1e-12 for _, s, _ in rep.witnesses)
    stuck = toy(a, np.array([[0.0], [1.0], [1.0]]), good.c)
    assert not extended.check_stabilizability(stuck).passed


def test_stable_unobservable_mode_is_fine():
    a = np.diag([1.0, -1.0, -2.0])
    sys = toy(a, np.array([[1.0], [0.0], [0.0]]), np.array([[1.0, 0.0, 0.0]]), eta=-5.0)
    assert extended.check_detectability(sys).passed


def test_nonresonance_companion_toy():
    # (s+1)(s+2)(s+3) = s^3 + 6 s^2 + 11 s + 6; C = [w^2, 0, 1] gives zeros at +-i w
    w = 2.0
    a = np.array([[0, 1, 0], [0, 0, 1], [-6, -11, -6]], float)
    b = np.array([[0.0], [0.0], [1.0]])
    sys = toy(a, b, np.array([[w**2, 0.0, 1.0]]))
    assert not extended.check_nonresonance(sys, [w]).passed
    assert extended.check_nonresonance(sys, [0.0, 1.0, 3.0]).passed
    g = (np.array([[w**2, 0, 1]]) @ np.linalg.solve(1j * w * np.eye(3) - a, b))[0, 0]
    assert abs(g) < 1e-12


@given(st.floats(0.1, 5.0))
def test_nonresonance_transfer_oracle(w):
    # sigma_min of the Rosenbrock matrix vanishes exactly when G(i w) does
    a = np.array([[0, 1, 0], [0, 0, 1], [-6, -11, -6]], float)
    b = np.array([[0.0], [0.0], [1.0]])
    c = np.array([[4.0, 0.0, 1.0]])
    rep = extended.check_nonresonance(toy(a, b, c), [w])
    g = abs((c @ np.linalg.solve(1j * w * np.eye(3) - a, b))[0, 0])
    assert rep.passed == (g > 1e-9)


def test_heat_design_passes(heat_sys):
    reps = extended.run_checks(heat_sys, [0.0, 2.0])
    assert all(r.passed for r in reps)
    assert [r.name for r in reps] == ["detectability", "stabilizability", "nonresonance"]
    assert "pass" in reps[0].summary()


def test_sensor_orthogonal_counterexample():
    sys = heat_system(60, sensor=fields.Cosine(1, 1, SENSOR_ORTHOGONAL))
    assert abs((sys.plant.c0 @ sys.e_n)[0, 0]) < 1e-12
    rep = extended.check_detectability(sys)
    assert not rep.passed
    assert any(abs(s - 1.0) < 1e-12 for _, s, _ in rep.witnesses)
    assert extended.check_stabilizability(sys).passed


def test_zero_at_dc_counterexample():
    sys = heat_system(60, alpha=1.0, sensor=fields.Cosine(1, 1, SENSOR_DC_ZERO))
    rep = extended.check_nonresonance(sys, [0.0, 2.0])
    assert not rep.passed
    assert [lab for lab, _, _ in rep.witnesses] == ["omega=0"]
    assert extended.check_detectability(sys).passed


@pytest.mark.parametrize("variant, eta", [("v1", 0.12), ("v2", 10.0)])
def test_beam_checks_pass(variant, eta):
    plant = discretize(beam_spec(), 17)
    sys = assemble_extended(plant, extension.build_extension(plant, eta, variant))
    assert all(r.passed for r in extended.run_checks(sys, [0.0, 3.0]))


# ------------------------------------------------------------ coercivity


def test_coercivity_heat_plant():
    # -A0 = M^{-1} K: sym F = K, W = M, G = K + M, so lambda_1 = 1 and c_2 = 1
    plant = discretize(heat_spec(), 20)
    lam1, c2 = extended.coercivity_diagnostic(plant)
    assert lam1 == pytest.approx(1.0, abs=1e-8)
    assert c2 == pytest.approx(1.0, abs=1e-8)


def test_coercivity_reaction_shift():
    # sym F = K + 3M against G = K + M: c_2 = min (k + 3)/(k + 1) = 1 + 2/(k_max + 1)
    plant = discretize(heat_spec(alpha=3.0), 20)
    lam1, c2 = extended.coercivity_diagnostic(plant)
    k_max = linalg.eigh(plant.fem.diffusion_stiffness, plant.fem.mass, eigvals_only=True)[-1]
    assert lam1 == pytest.approx(0.0, abs=1e-12)
    assert c2 == pytest.approx(1 + 2 / (k_max + 1), rel=1e-9)


def test_coercivity_extended(heat_sys):
    lam1, c2 = extended.coercivity_diagnostic(heat_sys.plant, sys=heat_sys)
    assert lam1 > 1.0 and c2 > 0
