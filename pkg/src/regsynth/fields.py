"""Named analytic coefficient families.

Coefficients, sensor weights and actuator profiles are drawn from a small
closed set of parametrized families so that configurations stay
deterministic and easy to diff. Every field is a vectorized callable taking
coordinate arrays (``f(x)`` in 1D, ``f(x, y)`` in 2D).

Text form (used by the config reader)::

    constant 0.5
    linear 0 3 3              # c0 + cx*x + cy*y
    trig -2; cos 1 1 0; sin -1 0 2
    indicator 0.3 0.7         # chi of an interval (1D)
    rect -1 -0.5 -0.75 -0.25  # chi of an axis-aligned rectangle (2D)
    cosine 1 2 0.2            # k amp offset: amp*cos(k*pi*x) + offset (1D)
    sine 1                    # k [amp]: amp*sin(k*pi*s) on a normalized arclength
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, x, y=None):
        return np.full(np.shape(x), float(self.value))


@dataclass(frozen=True)
class Linear:
    c0: float
    cx: float = 0.0
    cy: float = 0.0

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        out = self.c0 + self.cx * x
        if y is not None:
            out = out + self.cy * np.asarray(y, dtype=float)
        return out


@dataclass(frozen=True)
class TrigSum:
    """``c0 + sum(amp * f(kx*x + ky*y))`` with ``f`` in {sin, cos}."""

    c0: float = 0.0
    terms: tuple = field(default_factory=tuple)  # (kind, amp, kx, ky)

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        y = np.zeros_like(x) if y is None else np.asarray(y, dtype=float)
        out = np.full(x.shape, float(self.c0))
        for kind, amp, kx, ky in self.terms:
            fn = np.sin if kind == "sin" else np.cos
            out = out + amp * fn(kx * x + ky * y)
        return out


@dataclass(frozen=True)
class Indicator:
    """Weighted characteristic function of an interval ``(a, b)``."""

    a: float
    b: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidArgument(f"empty interval ({self.a}, {self.b})")

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        return np.where((x > self.a) & (x < self.b), self.weight, 0.0)


@dataclass(frozen=True)
class Rect:
    """Weighted characteristic function of ``(x0, x1) x (y0, y1)``."""

    x0: float
    x1: float
    y0: float
    y1: float
    weight: float = 1.0

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise InvalidArgument("empty rectangle")

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)
        return np.where(inside, self.weight, 0.0)


@dataclass(frozen=True)
class Cosine:
    """``amp * cos(k*pi*x) + offset`` on a 1D domain."""

    k: float = 1.0
    amp: float = 1.0
    offset: float = 0.0

    def __call__(self, x, y=None):
        return self.amp * np.cos(self.k * np.pi * np.asarray(x, dtype=float)) + self.offset


@dataclass(frozen=True)
class Sine:
    """Actuator profile ``amp * sin(k*pi*s)`` of a normalized arclength ``s``."""

    k: float = 1.0
    amp: float = 1.0

    def __call__(self, s, y=None):
        return self.amp * np.sin(self.k * np.pi * np.asarray(s, dtype=float))


def support_interval(f):
    """Interval outside of which a 1D field vanishes, or None if unknown."""
    if isinstance(f, Indicator):
        return f.a, f.b
    return None


def parse_field(text):
    """Build a field from its one-line text form (see module docstring)."""
    text = text.strip()
    if not text:
        raise InvalidArgument("empty field specification")
    if text.startswith("trig"):
        parts = [p.strip() for p in text[len("trig") :].split(";")]
        c0 = float(parts[0]) if parts[0] else 0.0
        terms = []
        for part in parts[1:]:
            tok = part.split()
            if len(tok) != 4 or tok[0] not in ("sin", "cos"):
                raise InvalidArgument(f"bad trig term {part!r}; expected 'sin|cos amp kx ky'")
            terms.append((tok[0], float(tok[1]), float(tok[2]), float(tok[3])))
        return TrigSum(c0, tuple(terms))
    kind, *args = text.split()
    try:
        nums = [float(a) for a in args]
    except ValueError as exc:
        raise InvalidArgument(f"non-numeric parameter in {text!r}") from exc
    families = {
        "constant": (Constant, 1, 1),
        "linear": (Linear, 1, 3),
        "indicator": (Indicator, 2, 3),
        "rect": (Rect, 4, 5),
        "cosine": (Cosine, 0, 3),
        "sine": (Sine, 0, 2),
    }
    if kind not in families:
        raise InvalidArgument(f"unknown field family {kind!r}")
    cls, lo, hi = families[kind]
    if not lo <= len(nums) <= hi:
        raise InvalidArgument(f"{kind} takes {lo}..{hi} parameters, got {len(nums)}")
    return cls(*nums)


def format_field(f):
    """Inverse of :func:`parse_field` (used for hashing and reports)."""
    if isinstance(f, TrigSum):
        return "trig " + "; ".join([repr(f.c0)] + [f"{k} {a!r} {kx!r} {ky!r}" for k, a, kx, ky in f.terms])
    names = {
        Constant: "constant",
        Linear: "linear",
        Indicator: "indicator",
        Rect: "rect",
        Cosine: "cosine",
        Sine: "sine",
    }
    vals = [getattr(f, name) for name in f.__dataclass_fields__]
    return " ".join([names[type(f)]] + [repr(float(v)) for v in vals])


def shifted(f, delta):
    """Return the field ``f + delta`` (closed under the named families)."""
    if delta == 0:
        return f
    if isinstance(f, Constant):
        return Constant(f.value + delta)
    if isinstance(f, Linear):
        return Linear(f.c0 + delta, f.cx, f.cy)
    if isinstance(f, TrigSum):
        return TrigSum(f.c0 + delta, f.terms)
    if isinstance(f, Cosine):
        return Cosine(f.k, f.amp, f.offset + delta)
    raise InvalidArgument(f"cannot shift a {type(f).__name__} field")
