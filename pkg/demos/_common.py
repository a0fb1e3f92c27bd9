"""Helpers shared by the demo scripts."""

import pathlib

from regsynth.config import load_scenario

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"


def scenario(name):
    return load_scenario(str(CONFIGS / name))


def sparkline(values, width=60):
    """Coarse text plot of a positive series on a log scale."""
    import numpy as np

    v = np.maximum(np.asarray(values, dtype=float), 1e-16)
    idx = np.linspace(0, v.size - 1, width).astype(int)
    logs = np.log10(v[idx])
    lo, hi = logs.min(), logs.max()
    ticks = " .:-=+*#%@"
    scaled = (logs - lo) / max(hi - lo, 1e-12) * (len(ticks) - 1)
    return "".join(ticks[int(round(s))] for s in scaled) + f"   [{10**lo:.1e} .. {10**hi:.1e}]"
