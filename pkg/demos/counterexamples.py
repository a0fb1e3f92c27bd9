"""How the structural checks fail, and how the failing cases were built.

Heat plant, eta = 1, sensor weight cos(pi x) + b. The extension profile is
g = cosh(x)/sinh(1), which is not orthogonal to cos(pi x), so one offset b
makes the discrete sensor blind to E^N: the extended system then has an
unobservable mode at s = eta. With a reaction term alpha = 1 the same
construction places a transmission zero at s = 0, where the reference has
its constant part.
"""

import numpy as np
from scipy.optimize import brentq

from regsynth import extension, fields
from regsynth.extended import assemble_extended, check_detectability, check_nonresonance
from regsynth.models import HEAT1D, ActuatorSpec, PlantSpec, SensorSpec, discretize


def system(b, alpha=0.0, n=60):
    spec = PlantSpec(HEAT1D, {"nu": 1.0, "alpha": alpha}, [ActuatorSpec()], [SensorSpec(fields.Cosine(1, 1, b))])
    plant = discretize(spec, n)
    return assemble_extended(plant, extension.build_extension(plant, 1.0))


def c0e(b):
    s = system(b)
    return (s.plant.c0 @ s.e_n[:, 0]).item()


# b = 0 would be a poor baseline: cos(pi x) has zero mean and misses the
# constant Neumann mode at s = 0. b = 0.5 is a generic healthy sensor.
b_star = brentq(c0e, -1.0, 1.0, xtol=1e-16)
print(f"sensor offset with C0 E^N = 0: b = {b_star:.17g}  (C0 E^N = {c0e(b_star):.1e})")
for b in (0.5, b_star):
    rep = check_detectability(system(b))
    print(f"  b = {b:.6f}: {rep.summary()}")
    for label, s, sig in rep.witnesses:
        print(f"    witness {label} at s = {s.real:g}: sigma_min = {sig:.1e}")


# With alpha = 1 the plant has no eigenvalue at 0 and C (0 - A)^{-1} B is a
# smooth function of b; its root is the transmission zero at s = 0.
def dc_gain(b):
    s = system(b, alpha=1.0)
    return (s.c @ np.linalg.solve(-s.a, s.b))[0, 0]


b_zero = brentq(dc_gain, -1.0, 1.0, xtol=1e-16)
print(f"\nsensor offset with G(0) = 0 (alpha = 1): b = {b_zero:.17g}")
for b in (0.5, b_zero):
    rep = check_nonresonance(system(b, alpha=1.0), [0.0, 2.0])
    print(f"  b = {b:.6f}: {rep.summary()}")
