"""Command-line front end: ``regsynth check|synth|hsv|simulate``.

Every command reads one scenario file (see :mod:`regsynth.config`) and
writes its artifacts into ``--out``:

* ``check``: ``check_report.txt``
* ``hsv``: ``hsv.csv``
* ``synth``: ``controller.txt``, ``hsv.csv``, ``synth_report.txt``
* ``simulate``: ``trajectory.csv``, ``simulate_report.txt``

Exit codes are 0 on success, 1 for usage or configuration errors, 2 when a
mathematical check fails and 3 for numerical failures.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import load_scenario
from .errors import (
    ConfigError,
    InsufficientData,
    InvalidArgument,
    NoConvergence,
    NonFinite,
    NotDetectable,
    NotHurwitz,
    NotObservable,
    NotStabilizable,
    ParseError,
    SingularMatrix,
    SpecMismatch,
)
from .extended import assemble_extended, coercivity_diagnostic, run_checks
from .extension import DISCRETE_2D, build_extension, extension_residual
from .internal_model import build_internal_model
from .models import discretize, initial_profile, perturb
from .sim import fit_decay, simulate
from .synthesis import (
    assemble_closed_loop,
    bt_bound_holds,
    hankel_singular_values,
    hsv_report,
    read_controller,
    synthesize,
    write_controller,
    write_hsv_csv,
)

log = logging.getLogger("regsynth")

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_NUMERIC = 0, 1, 2, 3
EXT_CERT_TOL = 1e-10


class CheckFailed(Exception):
    """A mathematical precondition did not hold (exit code 2)."""


@dataclass
class Design:
    plant: object
    ext: object
    sys: object
    im: object


def build_design(scn, resolution=None, spec=None):
    """Discretize the plant, build its extension and attach the internal model."""
    plant = discretize(spec or scn.plant, resolution or scn.N)
    try:
        ext = build_extension(plant, scn.eta, scn.variant)
    except SingularMatrix as exc:
        raise CheckFailed(f"extension: {exc}") from exc
    sys_ = assemble_extended(plant, ext)
    im = build_internal_model(plant.spec.p, scn.reference.frequencies())
    return Design(plant, ext, sys_, im)


def run_check_suite(scn, design=None):
    """All precondition checks; returns ``(passed, report_lines)``."""
    d = design or build_design(scn)
    lines, ok = [], True
    cert = d.ext.residual_certificate
    cert_ok = cert <= EXT_CERT_TOL
    ok &= cert_ok
    lines.append(f"extension certificate: {'pass' if cert_ok else 'FAIL'} ({cert:.3e}, tol {EXT_CERT_TOL:.0e})")
    for k, v in sorted(d.ext.bc_residuals.items()):
        lines.append(f"  boundary residual {k}: {v:.3e}")
    if d.ext.kind != DISCRETE_2D:
        lines.append(f"  discrete extension residual: {extension_residual(d.ext, d.plant):.3e}")
    for rep in run_checks(d.sys, [w for w, _ in scn.reference.frequencies()]):
        ok &= rep.passed
        lines.append(rep.summary())
        for label, s, sigma in rep.margins:
            mark = "" if sigma > rep.tol else "  <-- witness"
            lines.append(f"  {label} at s={s.real:+.6g}{s.imag:+.6g}i: sigma_min={sigma:.3e}{mark}")
        lines += [f"  note: {n}" for n in rep.notes]
    lam1, c2 = coercivity_diagnostic(d.plant, sys=d.sys)
    lines.append(f"coercivity diagnostic (informational): lambda_1={lam1:.6g}, c_2={c2:.6g}")
    return bool(ok), lines


def _write(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _header(scn, command):
    return [f"regsynth {__version__} {command}", f"plant_hash: {scn.plant_hash()}", scn.plant.describe(), ""]


def cmd_check(scn, out):
    ok, lines = run_check_suite(scn)
    _write(
        os.path.join(out, "check_report.txt"), _header(scn, "check") + lines + [f"result: {'pass' if ok else 'FAIL'}"]
    )
    for line in lines:
        log.info(line)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_hsv(scn, out):
    d = build_design(scn)
    hsv = hankel_singular_values(d.sys, d.im, scn.params)
    write_hsv_csv(os.path.join(out, "hsv.csv"), hsv)
    log.info("suggested r = %d of %d", hsv_report(hsv)["suggested_r"], hsv.size)
    return EXIT_OK


def cmd_synth(scn, out, force=False):
    d = build_design(scn)
    if scn.params.r is not None and scn.params.r > d.sys.n:
        raise InvalidArgument(f"r={scn.params.r} exceeds the design state size {d.sys.n}")
    ok, lines = run_check_suite(scn, d)
    if not ok and not force:
        _write(os.path.join(out, "synth_report.txt"), _header(scn, "synth") + lines + ["result: checks failed"])
        raise CheckFailed("precondition checks failed; rerun with --force to synthesize anyway")
    ctrl = synthesize(d.sys, d.im, scn.params)
    meta = {
        "plant_hash": scn.plant_hash(),
        "eta": repr(scn.eta),
        "variant": scn.variant or "none",
        "design_N": d.plant.resolution,
        "design_size": d.sys.n,
    }
    write_controller(os.path.join(out, "controller.txt"), ctrl, meta)
    write_hsv_csv(os.path.join(out, "hsv.csv"), ctrl.hsv)
    m = ctrl.meta
    report = _header(scn, "synth") + lines + [""]
    report += [
        f"design size: {d.sys.n}",
        f"internal model dim: {d.im.dim_z0}",
        f"reduced order r: {ctrl.r} (suggested {hsv_report(ctrl)['suggested_r']})",
        f"controller dim: {ctrl.dim}",
        f"CARE residual observer: {m['care_residual_observer']:.3e}",
        f"CARE residual regulator: {m['care_residual_regulator']:.3e}",
        f"Lyapunov residual: {m['lyapunov_residual']:.3e}",
        f"observer abscissa: {m['observer_abscissa']:.6g} (target < {-scn.params.alpha1})",
        f"regulator abscissa: {m['regulator_abscissa']:.6g} (target < {-scn.params.alpha2})",
        f"BT sampled error: {m['bt_error']:.3e}, bound {m['bt_bound']:.3e}, "
        f"holds: {bt_bound_holds(m['bt_error'], m['bt_bound'], m['bt_scale'])}",
    ]
    cl = assemble_closed_loop(d.sys, ctrl)
    report.append(f"design closed-loop abscissa: {cl.abscissa():.6g}")
    _write(os.path.join(out, "synth_report.txt"), report)
    log.info("controller of dimension %d written", ctrl.dim)
    return EXIT_OK


def simulate_scenario(scn, ctrl, perturbation=None):
    """Run `ctrl` against the (optionally perturbed) plant on the simulation mesh.

    `perturbation` overrides the scenario's own ``[perturbation]`` section.
    Returns ``(design, closed_loop, SimResult)``.
    """
    sim = scn.simulation
    pert = scn.perturbation if perturbation is None else perturbation
    spec = perturb(scn.plant, **pert) if pert else scn.plant
    d = build_design(scn, sim.M, spec)
    cl = assemble_closed_loop(d.sys, ctrl)
    w0 = initial_profile(d.plant, sim.initial, sim.amplitude, sim.velocity)
    x0 = np.concatenate(
        [d.sys.initial_state(w0, np.zeros(d.sys.m), np.zeros(d.sys.m)), np.full(ctrl.dim, sim.controller_init)]
    )
    return d, cl, simulate(cl, scn.reference, x0, sim.T, sim.dt)


def cmd_simulate(scn, out):
    path = scn.simulation.controller_path or os.path.join(out, "controller.txt")
    if not os.path.exists(path):
        raise ConfigError(f"no controller file at {path}; run 'regsynth synth' first")
    ctrl, meta = read_controller(path)
    if meta.get("plant_hash") != scn.plant_hash():
        raise SpecMismatch("controller was synthesized for a different plant section")
    if float(meta.get("eta", "nan")) != scn.eta or meta.get("variant") != (scn.variant or "none"):
        raise SpecMismatch("controller was synthesized for a different extension")
    sim = scn.simulation
    d, cl, res = simulate_scenario(scn, ctrl)
    res.write_csv(os.path.join(out, "trajectory.csv"))
    t_settle = sim.t_settle if sim.t_settle is not None else 0.5 * sim.T
    report = _header(scn, "simulate") + [
        f"perturbation: {scn.perturbation or 'none'}",
        f"simulation size: {d.sys.n} plant + {ctrl.dim} controller",
        f"closed-loop abscissa: {cl.abscissa():.6g}",
        f"max error for t >= {t_settle:g}: {res.max_error_after(t_settle):.6e}",
    ]
    try:
        fit = fit_decay(res, sim.fit_window or (0.0, t_settle))
        report.append(
            f"decay fit on {fit.fit_window}: M_e={fit.m_e:.6g}, w_e={fit.w_e:.6g}, residual={fit.residual:.3g}"
        )
        report.append(f"decaying: {fit.decaying}")
    except InsufficientData as exc:
        report.append(f"decay fit skipped: {exc}")
    _write(os.path.join(out, "simulate_report.txt"), report)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "hsv": cmd_hsv, "synth": cmd_synth, "simulate": cmd_simulate}


def build_parser():
    ap = argparse.ArgumentParser(prog="regsynth", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="scenario file")
    ap.add_argument("--out", required=True, help="output directory (created if missing)")
    ap.add_argument("--force", action="store_true", help="synthesize even if checks fail")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"regsynth {__version__}")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        scn = load_scenario(args.config)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "synth":
            return cmd_synth(scn, args.out, args.force)
        return COMMANDS[args.command](scn, args.out)
    except (ConfigError, ParseError, InvalidArgument, SpecMismatch, OSError) as exc:
        print(f"regsynth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckFailed, NotDetectable, NotStabilizable, NotObservable) as exc:
        print(f"regsynth: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (NoConvergence, NonFinite, NotHurwitz, SingularMatrix) as exc:
        print(f"regsynth: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
