"""Command-line front end: ``timerelax {transfer,deconv-study,simulate,param,decay-study}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .diagnostics import SpectrumSeries, averaged_spectrum_csv, records_to_csv
from .errors import BlowUpError, InvalidInputError
from .filters import FilterParams, transfer_table
from .io_utils import atomic_write_text, save_checkpoint
from .similarity import SimilarityInputs, classify_case, sweep_csv
from .solver import run
from .spectral import GridSpec
from .studies import (
    decay_series_csv,
    decay_study,
    decay_summary_csv,
    deconvolution_study,
    strictly_decreasing,
)

EXIT_OK, EXIT_USAGE, EXIT_BLOWUP, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("timerelax")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="key=value or JSON parameter file")
    p.add_argument("--seed", type=int, help="random seed override")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="timerelax", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("transfer", help="tabulate filter / deconvolution transfer functions")
    _common(p)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--N", default="5,10,100", help="comma-separated deconvolution orders")
    p.add_argument("--L", type=float, default=2 * math.pi)
    p.add_argument("--kmin", type=float, default=0.0)
    p.add_argument("--kmax", type=float, help="default 100 * 2pi/L")
    p.add_argument("--nk", type=int, default=1001)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("deconv-study", help="observed order of the deconvolution error")
    _common(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--N", default="0,1,2")
    p.add_argument("--deltas", default="1/8,1/16,1/32,1/64")
    p.add_argument("--alphas", default="1/2,1/4,1/8,1/16", help="empty to skip the alpha fit")
    p.add_argument("--delta-fixed", type=float, default=1 / 16)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--L", type=float, default=2 * math.pi)
    p.add_argument("--tolerance", type=float, default=0.1)
    p.set_defaults(func=cmd_deconv_study)

    p = sub.add_parser("simulate", help="integrate the model and write diagnostics")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("param", help="similarity-theory parameter report")
    _common(p)
    for name in ("U", "L", "nu", "Re", "delta", "alpha", "chi"):
        p.add_argument(f"--{name}")
    p.add_argument("--N")
    p.add_argument("--alphas", help="sweep values (comma-separated)")
    p.add_argument("--deltas", help="sweep values (comma-separated)")
    p.add_argument("--Ns", help="sweep orders (comma-separated)")
    p.set_defaults(func=cmd_param)

    p = sub.add_parser("decay-study", help="fluctuation norm versus chi")
    _common(p)
    p.add_argument("--chis", default="0,10,100,1000")
    p.set_defaults(func=cmd_decay_study)
    return parser


def _sim_config(args) -> dict:
    layers = []
    if args.config:
        layers.append(cfgmod.read_config_file(args.config))
    layers.append(cfgmod.parse_overrides(args.overrides))
    if args.seed is not None:
        layers.append({"seed": args.seed})
    return cfgmod.resolve(cfgmod.SIM_DEFAULTS, *layers)


def cmd_transfer(args) -> int:
    Ns = cfgmod.parse_list(args.N, int)
    if not Ns:
        raise UsageError("empty N list")
    kmax = 100 * 2 * math.pi / args.L if args.kmax is None else args.kmax
    if args.nk < 1 or kmax < args.kmin or args.kmin < 0 or (args.nk > 1 and kmax == args.kmin):
        raise UsageError("bad k range")
    k = np.array([args.kmin]) if args.nk == 1 else np.linspace(args.kmin, kmax, args.nk)
    out = Path(args.out)
    for N in Ns:
        table = transfer_table(FilterParams(args.delta, args.alpha, N), k)
        path = out / f"transfer_N{N}.csv"
        atomic_write_text(path, table.to_csv())
        print(f"wrote {path}")
    return EXIT_OK


def cmd_deconv_study(args) -> int:
    Ns = cfgmod.parse_list(args.N, int)
    deltas = cfgmod.parse_list(args.deltas)
    alphas = cfgmod.parse_list(args.alphas) or None
    if not Ns:
        raise UsageError("empty N list")
    grid = GridSpec(args.dim, args.n, args.L)
    study = deconvolution_study(
        grid, Ns, deltas, args.alpha, alphas=alphas, delta_fixed=args.delta_fixed, tolerance=args.tolerance
    )
    out = Path(args.out)
    atomic_write_text(out / "deconv_errors.csv", study.errors_csv())
    atomic_write_text(out / "deconv_slopes.csv", study.slopes_csv())
    for f in study.fits:
        status = "PASS" if f.passed else "FAIL"
        print(f"N={f.N} {f.variable:<5} slope={f.slope:.4f} expected={f.expected:g} {status}")
    return EXIT_OK


def _simulate_one(cfg, out: Path, chi=None) -> int:
    state, solver = cfgmod.build_simulation(cfg, chi=chi)
    spectra = SpectrumSeries.empty()
    every = max(1, cfg["spectrum_every"])
    count = [0]

    def sink(record, s):
        if count[0] % every == 0 or s.t >= solver.t_end:
            spectra.append(s.t, s.u)
        count[0] += 1

    code = EXIT_OK
    try:
        records, final = run(state, solver, sink)
    except BlowUpError as exc:
        log.error("%s", exc)
        records, final, code = exc.records, exc.state, EXIT_BLOWUP
    atomic_write_text(out / "energy.csv", records_to_csv(records))
    atomic_write_text(out / "spectrum.csv", spectra.to_csv())
    if len(spectra.times) >= 2:
        try:
            avg = spectra.averaged(cfg["average_after"])
            atomic_write_text(out / "spectrum_avg.csv", averaged_spectrum_csv(spectra.k, avg))
        except InvalidInputError as exc:
            log.warning("no averaged spectrum: %s", exc)
    elif spectra.times:
        atomic_write_text(out / "spectrum_avg.csv", averaged_spectrum_csv(spectra.k, spectra.spectra[0]))
    save_checkpoint(out / "checkpoint.npz", final)
    meta = dict(cfg, chi_resolved=final.chi, status="blow-up" if code else "ok", t_final=final.t)
    atomic_write_text(out / "run.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"{out}: t={final.t:g} records={len(records)} status={meta['status']}")
    return code


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    out = Path(args.out)
    sweep = cfgmod.parse_list(cfg["chi_sweep"]) if cfg["chi_sweep"] else []
    if not sweep:
        return _simulate_one(cfg, out)
    code = EXIT_OK
    for chi in sweep:
        code = max(code, _simulate_one(cfg, out / f"chi_{chi!r}", chi=chi))
    return code


def cmd_param(args) -> int:
    layers = [cfgmod.read_config_file(args.config)] if args.config else []
    flags = {k: getattr(args, k) for k in ("U", "L", "nu", "Re", "delta", "alpha", "chi", "N", "alphas", "deltas", "Ns")}
    layers.append({k: v for k, v in flags.items() if v is not None})
    layers.append(cfgmod.parse_overrides(args.overrides))
    cfg = cfgmod.resolve(cfgmod.PARAM_DEFAULTS, *layers)
    for key in ("U", "L", "delta", "alpha"):
        if cfg[key] is None:
            raise UsageError(f"missing required parameter {key}")
    if (cfg["nu"] is None) == (cfg["Re"] is None):
        raise UsageError("give exactly one of nu and Re")
    inputs = SimilarityInputs(
        U=cfg["U"], L=cfg["L"], delta=cfg["delta"], alpha=cfg["alpha"], N=int(cfg["N"]),
        nu=cfg["nu"], Re=cfg["Re"], chi=cfg["chi"],
    )
    report = classify_case(inputs)
    out = Path(args.out)
    atomic_write_text(out / "report.json", report.to_json() + "\n")
    print(report.table())
    if cfg["alphas"] or cfg["deltas"] or cfg["Ns"]:
        alphas = cfgmod.parse_list(cfg["alphas"]) or [inputs.alpha]
        deltas = cfgmod.parse_list(cfg["deltas"]) or [inputs.delta]
        Ns = cfgmod.parse_list(cfg["Ns"], int) or [inputs.N]
        atomic_write_text(out / "sweep.csv", sweep_csv(inputs, alphas, deltas, Ns))
    return EXIT_OK


def cmd_decay_study(args) -> int:
    cfg = _sim_config(args)
    chis = cfgmod.parse_list(args.chis)
    if not chis:
        raise UsageError("empty chi list")
    state, solver = cfgmod.build_simulation(cfg, chi=0.0)
    try:
        runs = decay_study(state, solver, chis)
    except BlowUpError as exc:
        log.error("%s", exc)
        return EXIT_BLOWUP
    out = Path(args.out)
    atomic_write_text(out / "decay_series.csv", decay_series_csv(runs))
    atomic_write_text(out / "decay_summary.csv", decay_summary_csv(runs))
    for r in runs:
        line = f"chi={r.chi:g} integral={r.integral:.6e}"
        if r.oracle is not None:
            dev = float(np.max(np.abs(r.fluctuation - r.oracle)) / max(np.max(r.oracle), 1e-300))
            line += f" oracle_rel_dev={dev:.2e}"
        print(line)
    verdict = strictly_decreasing(runs)
    if verdict is not None:
        print("monotone in chi: " + ("PASS" if verdict else "FAIL"))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, InvalidInputError) as exc:
        print(f"timerelax {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"timerelax {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
