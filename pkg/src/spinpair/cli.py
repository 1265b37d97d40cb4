"""Command-line runner: ``spinpair <subcommand> [options]``.

Every run writes its result files plus ``manifest.json`` into ``--out``.
Exit codes: 0 success, 2 usage or input error, 3 numeric failure.
"""

import argparse
import math
import os
import platform
import sys
import time
import warnings

import numpy as np

from . import __version__
from .basis import frozen_fraction, partition_functions
from .config import RunConfig, load_config
from .dynamics import CaptureWarning, postselect_entangled
from .exceptions import InputError, NumericError
from .io import (
    file_digest,
    read_outcomes_csv,
    read_populations_csv,
    write_csv,
    write_json,
    write_populations_csv,
)
from .measurement import (
    DetectionModel,
    apparent_outcome,
    detection_variance_monte_carlo,
    squeezing_from_outcomes,
    squeezing_from_variance,
)
from .pseudopotential import gaussian_width
from .rate_model import fit_rate, sample_rate_ratios
from .simulator import SpinCollisionSimulator
from .spin_channels import ScatteringLengths, coupling_table, spin_block_matrix
from .units import TrapFrequencies, oscillator_units

MANIFEST = "manifest.json"


class RunContext:
    """Collects manifest facts while a subcommand runs."""

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.out = args.out
        self.inputs = {}
        self.outputs = []
        self.facts = {}
        self.notes = []

    def path(self, name):
        os.makedirs(self.out, exist_ok=True)
        self.outputs.append(name)
        return os.path.join(self.out, name)

    def add_input(self, path):
        self.inputs[str(path)] = file_digest(path)


def _simulator(ctx, b_field=None):
    cfg = ctx.config
    zero_t = cfg.zero_temperature
    sim = SpinCollisionSimulator(
        trap_khz=cfg.trap_khz,
        temperature_uk=cfg.basis_temperature_uk if zero_t else cfg.temperature_uk,
        b_field=cfg.b_field if b_field is None else b_field,
        scattering_lengths=cfg.scattering_lengths,
        backend=cfg.backend,
        capture=cfg.capture,
        e_cut=cfg.e_cut,
        initial="groundstate" if zero_t else "thermal",
        memory_budget_mb=cfg.memory_budget_mb,
        allow_large=ctx.args.allow_large,
        workers=ctx.args.workers,
    )
    sim.fit()
    ctx.facts["basis_size"] = sim.n_modes_
    ctx.facts["captured_weight"] = sim.captured_weight_
    ctx.facts["initial_state"] = sim.initial
    return sim


def _time_grid(cfg):
    return np.linspace(0.0, cfg.time_stop_ms * 1e-3, cfg.time_points)


def cmd_coefficients(ctx):
    cfg = ctx.config
    lengths = ScatteringLengths(*cfg.scattering_lengths, uncertainties=cfg.scattering_uncertainties)
    table = coupling_table(lengths)
    spread = sample_rate_ratios(lengths, cfg.ratio_samples, seed=cfg.seed)
    names = ("gamma01/gamma12", "gamma02/gamma01", "gamma02/gamma12")
    report = {
        "scattering_lengths_bohr": list(cfg.scattering_lengths),
        "couplings_bohr": table.as_dict(),
        "spin_block_bohr": spin_block_matrix(table).tolist(),
        "gaussian_width_bohr": gaussian_width(lengths),
        "rate_ratios": {
            name: {
                "central": spread.central.as_tuple()[k],
                "degenerate": spread.central.degenerate[k],
                "median": spread.median[k],
                "lower_16": spread.lower[k],
                "upper_84": spread.upper[k],
            }
            for k, name in enumerate(names)
        },
        "ratio_samples": spread.n_samples,
    }
    trap = TrapFrequencies.from_khz(*cfg.trap_khz)
    report["couplings_oscillator_units"] = coupling_table(lengths, oscillator_units(trap)).as_dict()
    write_json(ctx.path("coefficients.json"), report)
    print(f"gamma01/gamma12 = {spread.central.r01_12:.4f}")


def cmd_field_scan(ctx):
    cfg = ctx.config
    fields = cfg.field_scan
    t = cfg.evolution_time_ms * 1e-3
    rows = []
    for b in fields:
        sim = _simulator(ctx, b_field=b)
        traj = sim.trajectory([0.0, t])
        ctx.notes.extend(n for n in traj.notes if n not in ctx.notes)
        rows.append((b, traj.p00[-1]))
    write_csv(ctx.path("field_scan.csv"), ["b_field_g", "p00"], rows)


def cmd_time_series(ctx):
    sim = _simulator(ctx)
    traj = sim.trajectory(_time_grid(ctx.config))
    ctx.notes.extend(traj.notes)
    write_populations_csv(ctx.path("time_series.csv"), traj)


def cmd_rate_fit(ctx):
    args = ctx.args
    data = read_populations_csv(args.data, normalize=args.normalize)
    ctx.add_input(args.data)
    ratio = ctx.config.ratio if args.ratio is None else args.ratio
    fit = fit_rate(data, ratio, weighted=args.weighted, gamma02_ratio=ctx.config.gamma02_ratio)
    report = {
        "gamma12_per_s": fit.gamma12,
        "gamma01_per_s": ratio * fit.gamma12,
        "gamma02_per_s": ctx.config.gamma02_ratio * fit.gamma12,
        "ratio": ratio,
        "residual": fit.residual,
        "weighted": bool(args.weighted),
        "normalized": bool(args.normalize),
        "degenerate": fit.degenerate,
        "notes": fit.notes,
    }
    write_json(ctx.path("rate_fit.json"), report)
    write_populations_csv(ctx.path("rate_fit_curves.csv"), fit.model)
    print(f"gamma12 = {fit.gamma12:.6g} 1/s")


def _squeezing_dict(result):
    return {
        "mean_jz": result.mean_jz,
        "variance": _json_float(result.variance),
        "zeta2": _json_float(result.zeta2),
        "db": _json_float(result.db),
        "defined": result.defined,
        "perfect": result.perfect,
    }


def _json_float(x):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


def cmd_squeezing(ctx):
    cfg = ctx.config
    model = DetectionModel(cfg.eta_f2, cfg.eta_f3)
    apparent = apparent_outcome(model, cfg.ejected_fraction)
    expected = squeezing_from_outcomes(apparent, cfg.n_atoms)
    rng = np.random.default_rng(cfg.seed)
    mc, mc_se = detection_variance_monte_carlo(model, cfg.mc_trials, rng, cfg.ejected_fraction)
    report = {
        "measured": _squeezing_dict(squeezing_from_variance(cfg.variance, cfg.n_atoms)),
        "detection_model": {
            "eta_f2": cfg.eta_f2,
            "eta_f3": cfg.eta_f3,
            "ejected_fraction": cfg.ejected_fraction,
            "apparent_outcome": [apparent.p0, apparent.p1, apparent.p2],
            "expected_variance": expected.variance,
            "monte_carlo_variance": mc,
            "monte_carlo_stderr": mc_se,
            "monte_carlo_trials": cfg.mc_trials,
        },
    }
    gap = expected.variance - cfg.detection_reference
    agrees = abs(gap) <= cfg.detection_tolerance
    report["detection_model"].update(
        reference_variance=cfg.detection_reference,
        reference_tolerance=cfg.detection_tolerance,
        agrees_with_reference=agrees,
    )
    if not agrees:
        message = (
            f"detection model gives variance {expected.variance:.6f}, "
            f"{gap:+.6f} from the reference {cfg.detection_reference} +/- {cfg.detection_tolerance}"
        )
        report["detection_model"]["discrepancy"] = message
        ctx.notes.append(message)
        print(f"note: {message}", file=sys.stderr)
    if ctx.args.outcomes:
        times, outcomes = read_outcomes_csv(ctx.args.outcomes)
        ctx.add_input(ctx.args.outcomes)
        report["outcomes"] = [
            dict(time_s=float(t), **_squeezing_dict(squeezing_from_outcomes(o, cfg.n_atoms)))
            for t, o in zip(times, outcomes)
        ]
    write_json(ctx.path("squeezing.json"), report)
    print(f"zeta^2 = {report['measured']['zeta2']} ({report['measured']['db']} dB)")


def cmd_frozen_fraction(ctx):
    cfg = ctx.config
    if cfg.zero_temperature:
        raise InputError("the frozen fraction needs a temperature > 0")
    trap = TrapFrequencies.from_khz(*cfg.trap_khz)
    temperature = cfg.temperature_uk * 1e-6
    pf = partition_functions(trap, temperature)
    report = {
        "trap_khz": list(cfg.trap_khz),
        "temperature_uk": cfg.temperature_uk,
        "beta_hbar_omega": pf.beta_hbar_omega.tolist(),
        "frozen_fraction": frozen_fraction(trap, temperature),
    }
    write_json(ctx.path("frozen_fraction.json"), report)
    print(f"frozen fraction = {report['frozen_fraction']:.6f}")


def cmd_density_matrix(ctx):
    cfg = ctx.config
    t = cfg.density_time_ms * 1e-3
    sim = _simulator(ctx)
    rho = sim.density_matrix(t)
    sectors = {}
    for sector in (1, 2):
        res = postselect_entangled(rho, sector)
        sectors[f"pm{sector}"] = {
            "probability": res.probability,
            "fidelity": _json_float(res.fidelity),
            "defined": res.defined,
        }
    report = {
        "time_s": t,
        "basis": ["|0,0>", "|-1,1>", "|1,-1>", "|-2,2>", "|2,-2>"],
        "real": rho.matrix.real.tolist(),
        "imag": rho.matrix.imag.tolist(),
        "trace": rho.trace(),
        "hermiticity_error": rho.hermiticity_error(),
        "min_eigenvalue": rho.min_eigenvalue(),
        "postselection": sectors,
    }
    write_json(ctx.path("density_matrix.json"), report)


COMMANDS = {
    "coefficients": cmd_coefficients,
    "field-scan": cmd_field_scan,
    "time-series": cmd_time_series,
    "rate-fit": cmd_rate_fit,
    "squeezing": cmd_squeezing,
    "frozen-fraction": cmd_frozen_fraction,
    "density-matrix": cmd_density_matrix,
}


def _field_list(text):
    values = [v.strip() for v in text.split(",") if v.strip()]
    if not values:
        raise argparse.ArgumentTypeError("field list is empty")
    try:
        return tuple(float(v) for v in values)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file or manifest.json of an earlier run")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--backend", choices=("gaussian", "delta"))
    common.add_argument("--b-field", type=float, help="bias field in gauss")
    common.add_argument("--temp", type=float, help="temperature in microkelvin (0: interacting ground state)")
    common.add_argument("--capture", type=float, help="thermal weight the basis must hold")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, default=1, help="threads for time-grid evaluation")
    common.add_argument("--allow-large", action="store_true", help="ignore the eigenproblem memory budget")

    parser = argparse.ArgumentParser(prog="spinpair", description="Spin-changing collisions of an atom pair in a tweezer.")
    parser.add_argument("--version", action="version", version=f"spinpair {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "field-scan":
            p.add_argument("--fields", type=_field_list, help="comma-separated fields in gauss")
        elif name == "rate-fit":
            p.add_argument("data", help="population CSV (time_s, p00, p1m1, p2m2[, se00, se1m1, se2m2])")
            p.add_argument("--ratio", type=float, help="gamma01/gamma12")
            p.add_argument("--weighted", action="store_true", help="inverse-variance weights from se columns")
            p.add_argument("--normalize", action="store_true", help="divide by the first |0,0> population")
        elif name == "squeezing":
            p.add_argument("--outcomes", help="outcome CSV (time_s, p0, p1, p2)")
    return parser


def resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {
        "backend": args.backend,
        "b_field": args.b_field,
        "temperature_uk": args.temp,
        "capture": args.capture,
        "seed": args.seed,
        "field_scan": getattr(args, "fields", None),
    }
    return config.replace(**overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    start = time.perf_counter()
    try:
        config = resolve_config(args)
        ctx = RunContext(args, config)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", CaptureWarning)
            COMMANDS[args.command](ctx)
        for w in caught:
            msg = str(w.message)
            if msg not in ctx.notes:
                ctx.notes.append(msg)
    except InputError as exc:
        print(f"spinpair: error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"spinpair: numeric failure: {exc}", file=sys.stderr)
        return 3

    outputs = {name: file_digest(os.path.join(ctx.out, name)) for name in ctx.outputs}
    manifest = {
        "command": args.command,
        "config": config.to_dict(),
        "inputs": ctx.inputs,
        "outputs": outputs,
        "notes": ctx.notes,
        "wall_clock_s": time.perf_counter() - start,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        **ctx.facts,
    }
    write_json(os.path.join(ctx.out, MANIFEST), manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
