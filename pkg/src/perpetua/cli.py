"""Command-line front end.

Subcommands: ``approximate`` (iterate, certify, emit artifacts),
``certify`` (bound report only, no iteration), ``bench`` (timing/op-count
ladder).  Exit codes: 0 success, 1 configuration error, 2 numeric or
certificate failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, ax1, bounds, oracle, quickselect
from .iterator import IterationPlan, op_count_model, run
from .lattice import extract_density, kolmogorov_vs, write_density_csv, write_pmf_csv
from .model import ContractionError, DiscretisationSchedule, ScheduleOverflowError, UMode, schedule_s
from .output import certificate_document, write_certificate
from .presets import get_preset, spec_from_config

__all__ = ["main", "cmd_approximate", "cmd_certify", "cmd_bench"]

DEFAULT_MC_SAMPLES = 1_000_000
DEFAULT_SEED = 20_260_810


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # map argparse's exit(2) onto exit code 1
        raise ConfigError(message)


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help="built-in problem name")
    p.add_argument("--config", type=Path, help="JSON problem description")
    p.add_argument("--poly", type=int, metavar="R", help="polynomial schedule n^R")
    p.add_argument("--exp", type=float, metavar="GAMMA", help="exponential schedule ceil(GAMMA^n)")
    p.add_argument("--symmetric", action="store_true", help="midpoint grid for the coefficient uniform")
    p.add_argument("--steps", type=int, required=True, metavar="N")
    p.add_argument("--error-model", choices=[m.value for m in bounds.ErrorTermModel],
                   default=bounds.ErrorTermModel.FULL.value,
                   help="per-step error budget; 'value-only' reproduces the historical "
                        "reference certificates and is optimistic (default: full)")
    p.add_argument("--density-sup", type=float, default=None,
                   help="override the limit-density sup-norm used in certificates")
    p.add_argument("--threads", type=int, default=None, metavar="K")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="perpetua", description=__doc__)
    ap.add_argument("--version", action="version", version=f"perpetua {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p_apx = sub.add_parser("approximate", help="iterate and emit pmf/density/certificate artifacts")
    _add_problem_args(p_apx)
    p_apx.add_argument("--density-d", default="auto",
                       help="density window half-width in atoms, or 'auto'")
    p_apx.add_argument("--out", type=Path, default=Path("."), metavar="DIR")
    p_apx.add_argument("--mc-check", nargs="?", type=int, const=DEFAULT_MC_SAMPLES,
                       default=None, metavar="S",
                       help="cross-check against S Monte-Carlo samples")
    p_apx.add_argument("--snapshot-every", type=int, default=None, metavar="M")

    p_cert = sub.add_parser("certify", help="emit the bound report without iterating")
    _add_problem_args(p_cert)
    p_cert.add_argument("--out", type=Path, default=Path("."), metavar="DIR")

    p_bench = sub.add_parser("bench", help="op-count/wall-time ladder")
    _add_problem_args(p_bench)
    p_bench.add_argument("--ladder", default=None,
                         help="comma-separated N values (default: N/4, N/2, N)")
    return ap


def _schedule_from(args) -> DiscretisationSchedule:
    if (args.poly is None) == (args.exp is None):
        raise ConfigError("exactly one of --poly R or --exp GAMMA is required")
    mode = UMode.SYMMETRIC if args.symmetric else UMode.FLOOR
    if args.poly is not None:
        if args.poly < 1:
            raise ConfigError("--poly needs R >= 1")
        return DiscretisationSchedule.polynomial(args.poly, u_mode=mode)
    if not args.exp > 1.0:
        raise ConfigError("--exp needs GAMMA > 1")
    return DiscretisationSchedule.exponential(args.exp, u_mode=mode)


def _load_problem(args) -> tuple:
    """Returns (spec, density_sup, modulus_or_None) for the request."""
    if (args.preset is None) == (args.config is None):
        raise ConfigError("exactly one of --preset or --config is required")
    model = bounds.ErrorTermModel(args.error_model)
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        spec = spec_from_config(doc)
        sup = args.density_sup if args.density_sup is not None else doc.get("density_sup")
        modulus = None
        if "modulus" in doc:
            m = doc["modulus"]
            modulus = bounds.holder(float(m["c"]), float(m.get("alpha", 1.0)))
        return spec, sup, modulus
    try:
        spec = get_preset(args.preset)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    if spec.name == "quickselect":
        sup = args.density_sup if args.density_sup is not None else _quickselect_density_sup(model)
        return spec, sup, quickselect.holder_modulus(sup)
    if spec.name == "interval-splitting":
        sup = args.density_sup if args.density_sup is not None else 1.5
        return spec, sup, bounds.linear(6.0)  # |d/dx 6x(1-x)| <= 6
    # ax1-uniform(q)
    q = float(args.preset.split("(")[1].rstrip(")"))
    desc = ax1.uniform_a_descriptor(q)
    sup = args.density_sup if args.density_sup is not None else ax1.transfer_sup(desc)
    return spec, sup, ax1.transfer_modulus(desc, sup)


@lru_cache(maxsize=None)
def _quickselect_density_sup(model: bounds.ErrorTermModel) -> float:
    """Refined sup-norm bound from the bootstrap at the reference resolution."""
    boot = bounds.bootstrap_density_bound(
        get_preset("quickselect"), DiscretisationSchedule.polynomial(3), 80,
        quickselect.holder_modulus,
        initial_sup=quickselect.A_PRIORI_DENSITY_SUP,
        observed_max=quickselect.OBSERVED_DENSITY_MAX_80,
        error_model=model)
    return boot.final_sup


def _mc_seed() -> int:
    env = os.environ.get("PERPETUA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"PERPETUA_SEED must be an integer, got {env!r}") from exc
    return DEFAULT_SEED


def cmd_approximate(args) -> int:
    sched = _schedule_from(args)
    spec, sup, modulus = _load_problem(args)
    model = bounds.ErrorTermModel(args.error_model)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    plan = IterationPlan(spec=spec, sched=sched, n_steps=args.steps,
                         snapshot_every=args.snapshot_every, threads=args.threads)
    model_ops = op_count_model(spec, sched, args.steps)

    def progress(n: int, wall: float, ops: int) -> None:
        if n % 10 == 0 or n == args.steps:
            print(f"  step {n}/{args.steps}  wall={wall:.1f}s  ops={ops}", file=sys.stderr)

    result = run(plan, progress=progress if sys.stderr.isatty() else None)
    if result.op_count != model_ops:
        raise ArithmeticError(
            f"op_count {result.op_count} does not match model {model_ops}")
    pmf = result.final

    report = [
        f"problem: {spec.name}   schedule: {sched.label()}   steps: {args.steps}",
        f"s(N) = {pmf.s}   atoms = {pmf.n_atoms}   op_count = {result.op_count}",
        f"wall time: {result.wall_time:.2f}s   max renorm defect = {max(result.renorm_defects):.3e}",
    ]

    kol = dens_cert = None
    if sup is not None:
        kol = bounds.optimize_p(spec, sched, args.steps, sup, error_model=model)
        report.append(f"certified kolmogorov <= {kol.bound:.6g} (p = {int(kol.p_used)}, "
                      f"density sup {sup:g}, model {model.value})")
        if modulus is not None:
            try:
                if args.density_d == "auto":
                    dens_cert = bounds.density_certificate(kol, modulus, pmf.s)
                else:
                    dens_cert = bounds.density_certificate(kol, modulus, pmf.s,
                                                           d=int(args.density_d))
                report.append(f"certified density error <= {dens_cert.bound:.6g} "
                              f"(d = {dens_cert.d}, delta = {dens_cert.delta:.6g})")
            except bounds.DensityWindowError as exc:
                report.append(f"density certificate unavailable: {exc}")

    d = dens_cert.d if dens_cert is not None else (
        None if args.density_d == "auto" else int(args.density_d))
    if d is not None and d > max(1, pmf.k_max - pmf.k_min):
        report.append(f"density skipped: window d={d} exceeds the occupied lattice")
        d = None
    density = extract_density(pmf, d) if d is not None else None

    if spec.analytic_cdf is not None:
        measured = kolmogorov_vs(pmf, spec.analytic_cdf)
        report.append(f"measured kolmogorov vs analytic cdf = {measured:.6g}")
        if kol is not None and measured > kol.bound:
            raise ArithmeticError(
                f"measured distance {measured} exceeds certificate {kol.bound}")
    if density is not None and spec.analytic_density is not None:
        xs = density.positions()
        core = (xs >= 0.05) & (xs <= 0.95)
        if core.any():
            dev = float(np.max(np.abs(density.values[core]
                                      - spec.analytic_density(xs[core]))))
            report.append(f"measured density deviation on [0.05, 0.95] = {dev:.6g}")
    if density is not None:
        report.append(f"observed density max = {float(density.values.max()):.6g}")

    meta = {"problem": spec.name, "schedule": sched.label(), "error_model": model.value,
            "tool": f"perpetua {__version__}"}
    if args.mc_check is not None:
        cfg = oracle.McConfig(samples=args.mc_check,
                              truncation=oracle.default_truncation(spec),
                              rng_seed=_mc_seed())
        mc = oracle.sample(spec, cfg)
        grid = np.linspace(pmf.k_min / pmf.s, pmf.k_max / pmf.s, 1001)
        emp = oracle.ecdf_at(mc.values, grid)
        lat = np.interp(grid, pmf.positions(), pmf.cdf_right())
        mc_gap = float(np.max(np.abs(emp - lat)))
        band = oracle.dkw_band(cfg.samples, 0.999)
        report.append(
            f"mc check: {cfg.samples} samples ({mc.generator}, seed {cfg.rng_seed}), "
            f"sup gap = {mc_gap:.6g}, dkw(0.999) = {band:.6g}, "
            f"truncation <= {mc.truncation_error:.2e}")
        meta["mc"] = {"samples": cfg.samples, "generator": mc.generator,
                      "seed": cfg.rng_seed, "sup_gap": mc_gap, "dkw_band": band}
        with (out / "samples.csv").open("w") as fh:
            oracle.write_samples_csv(mc, fh)
        if kol is not None and mc_gap > kol.bound + band + 1e-6:
            raise ArithmeticError("Monte-Carlo gap exceeds certificate plus confidence band")

    with (out / "pmf.csv").open("w") as fh:
        write_pmf_csv(pmf, fh)
    for n_snap, snap in result.snapshots:
        with (out / f"pmf_{n_snap:04d}.csv").open("w") as fh:
            write_pmf_csv(snap, fh)
    if density is not None:
        with (out / "density.csv").open("w") as fh:
            write_density_csv(density, fh)
    if kol is not None:
        doc = certificate_document(n=args.steps, s=pmf.s, kol=kol, dens=dens_cert,
                                   sup_chain=(sup,), meta=meta)
        write_certificate(doc, out / "certificate.json")
    (out / "report.txt").write_text("\n".join(report) + "\n")
    print("\n".join(report))
    return 0


def cmd_certify(args) -> int:
    sched = _schedule_from(args)
    spec, sup, modulus = _load_problem(args)
    model = bounds.ErrorTermModel(args.error_model)
    if sup is None:
        raise ConfigError("certify needs a density sup-norm (preset or --density-sup)")
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    s_n = schedule_s(sched, args.steps)
    kol = bounds.optimize_p(spec, sched, args.steps, sup, error_model=model)
    dens = None
    if modulus is not None:
        try:
            dens = bounds.density_certificate(kol, modulus, s_n)
        except bounds.DensityWindowError as exc:
            print(f"density certificate unavailable: {exc}", file=sys.stderr)
    doc = certificate_document(
        n=args.steps, s=s_n, kol=kol, dens=dens, sup_chain=(sup,),
        meta={"problem": spec.name, "schedule": sched.label(), "error_model": model.value,
              "tool": f"perpetua {__version__}"})
    write_certificate(doc, out / "certificate.json")
    line = (f"{spec.name} {sched.label()} N={args.steps}: "
            f"kolmogorov <= {kol.bound:.6g} at p={int(kol.p_used)}, s(N)={s_n}")
    if dens is not None:
        line += f", density error <= {dens.bound:.6g} at delta={dens.delta:.6g}"
    print(line)
    return 0


def cmd_bench(args) -> int:
    sched = _schedule_from(args)
    spec, _, _ = _load_problem(args)
    if args.ladder is not None:
        try:
            ladder = sorted({int(x) for x in args.ladder.split(",")})
        except ValueError as exc:
            raise ConfigError(f"bad --ladder: {exc}") from exc
        if any(n < 1 for n in ladder):
            raise ConfigError("ladder entries must be >= 1")
    else:
        ladder = sorted({max(1, args.steps // 4), max(1, args.steps // 2), args.steps})
    rows = []
    for n in ladder:
        plan = IterationPlan(spec=spec, sched=sched, n_steps=n, threads=args.threads)
        t0 = time.perf_counter()
        result = run(plan)
        wall = time.perf_counter() - t0
        expected = op_count_model(spec, sched, n)
        if result.op_count != expected:
            raise ArithmeticError(
                f"op_count mismatch at N={n}: measured {result.op_count}, model {expected}")
        rows.append((n, result.op_count, wall))
    print(f"{'N':>8} {'op_count':>16} {'wall_s':>10} {'ops/s':>12}")
    for n, ops, wall in rows:
        rate = ops / wall if wall > 0 else float("inf")
        print(f"{n:>8} {ops:>16} {wall:>10.3f} {rate:>12.3g}")
    if len(rows) >= 2:
        (n0, o0, _), (n1, o1, _) = rows[0], rows[-1]
        if sched.kind == "poly":
            slope = math.log(o1 / o0) / math.log(n1 / n0)
            print(f"empirical op-count exponent between N={n0} and N={n1}: {slope:.2f} "
                  f"(2r+1 = {2 * sched.r + 1} asymptotically)")
        else:
            slope = math.log(o1 / o0) / (n1 - n0)
            print(f"empirical log op-count slope per step: {slope:.3f} "
                  f"(2 ln gamma = {2 * math.log(sched.gamma):.3f} asymptotically)")
    return 0


_COMMANDS = {"approximate": cmd_approximate, "certify": cmd_certify, "bench": cmd_bench}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.steps < 1:
            raise ConfigError("--steps must be >= 1")
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (ContractionError, ScheduleOverflowError, bounds.DensityWindowError,
            bounds.BootstrapError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
