import numpy as np
import pytest
from hypothesis import settings

from regsynth import extended, extension, fields, internal_model, signals
from regsynth.models import BEAM, HEAT1D, PARABOLIC2D, ActuatorSpec, PlantSpec, SensorSpec, discretize

settings.register_profile("regsynth", max_examples=40, deadline=None)
settings.load_profile("regsynth")


def heat_spec(nu=1.0, alpha=0.0, sensor=None):
    return PlantSpec(
        HEAT1D, {"nu": nu, "alpha": alpha}, [ActuatorSpec()], [SensorSpec(sensor or fields.Indicator(0.3, 0.7))]
    )


def beam_spec(**kw):
    p = {"length": 7.0, "alpha": 10.0, "beta": 0.01, "gamma": 1e-5}
    p.update(kw)
    s = fields.Indicator(2, 4)
    return PlantSpec(BEAM, p, [ActuatorSpec()], [SensorSpec(s, s)])


def square_spec(p=1):
    sensors = [SensorSpec(fields.Rect(0.5, 0.75, 0.25, 0.5)), SensorSpec(fields.Rect(0.25, 0.5, 0.5, 0.75))][:p]
    return PlantSpec(
        PARABOLIC2D,
        {
            "nu": 0.5,
            "alpha": fields.Linear(0, 3, 3),
            "beta1": fields.parse_field("trig -2; cos 1 1 0; sin -1 0 2"),
            "beta2": fields.parse_field("trig 0; sin 1 3 0; cos 1 0 4"),
        },
        [ActuatorSpec(1, fields.Sine(1.0))],
        sensors,
        geometry={"side_tags": {"left": 1}},
    )


def heat_system(n=30, eta=1.0, **kw):
    plant = discretize(heat_spec(**kw), n)
    ext = extension.build_extension(plant, eta)
    return extended.assemble_extended(plant, ext)


@pytest.fixture(scope="session")
def heat_sys():
    return heat_system(30)


@pytest.fixture(scope="session")
def heat_reference():
    return signals.ReferenceSignal.from_terms(1, {0.0: ([[1.0]], None), 2.0: ([[0.0]], [[1.0]])})


@pytest.fixture(scope="session")
def heat_im(heat_reference):
    return internal_model.build_internal_model(1, heat_reference.frequencies())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.report_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
