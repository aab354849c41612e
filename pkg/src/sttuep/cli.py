"""Command line entry point: ``simulate``, ``bound`` and ``demo``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import fec, protocol
from .harness import emit, load_config, run_experiment, sample_observables
from .qsim import expectation, haar_random_state
from .shadows import acquire, basis_group_bits

OUTPUT_ENV = "STTUEP_OUTPUT_DIR"

log = logging.getLogger("sttuep")


def _simulate(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out or os.environ.get(OUTPUT_ENV, "."))
    stem = args.name or Path(args.config).stem
    log.info("running %d trials x %d schemes x %d points", cfg.trials, len(cfg.schemes), len(cfg.sweep_values))

    start = time.monotonic()

    def progress(done, total):
        if done % max(1, total // 10) == 0 or done == total:
            log.info("trial %d/%d (%.0f s)", done, total, time.monotonic() - start)

    rows = run_experiment(cfg, workers=args.workers, progress=progress)
    csv_path = emit(rows, out_dir / f"{stem}.csv", "csv")
    print(csv_path)
    if args.plot:
        print(emit(rows, out_dir / f"{stem}.svg", "svg_plot", sweep=cfg.sweep))
    return 0


def _bound(args) -> int:
    N = protocol.min_copies(args.w, args.M, args.eps, args.delta, args.perr)
    print(N)
    return 0


def _demo(args) -> int:
    rng = np.random.default_rng(args.seed)
    n, N = args.n, args.copies
    chan = fec.ChannelSpec(args.crossover)
    cfg = protocol.UepConfig(fec.CodeSpec.parse(args.R_b), fec.CodeSpec.parse(args.R_u), chan)
    state = haar_random_state(n, rng)
    observables = sample_observables(n, args.M, args.w, rng)
    truth = [expectation(state, o) for o in observables]

    print(f"state: Haar random, n={n}; copies N={N}; channel crossover={chan.crossover}")
    batch = acquire(state, N, rng)
    for i, rec in enumerate(batch.records[:3]):
        print(f"  record {i}: basis {rec.basis} outcome {''.join(map(str, rec.bits))}")
    print(f"basis stream: {basis_group_bits(n)} bits/record, code {cfg.basis_code} (R_u={cfg.R_u:.3g})")
    print(f"outcome stream: {n} bits/record, code {cfg.outcome_code} (R_b={cfg.R_b:.3g})")

    outcome = protocol.transmit(batch, cfg, rng)
    print(f"B = {outcome.B} bits (+{outcome.crc_bits} encoded CRC bits)")
    print(f"p_err = {outcome.p_err:.4g}; predicted outage = "
          f"{fec.analytic_bler(cfg.basis_code, chan, basis_group_bits(n) * N + fec.CRC_BITS):.4g}")
    print(f"status: {outcome.status}")
    if not outcome.ok:
        return 0
    report = protocol.estimate_all(outcome, observables).scored(truth, args.eps)
    print(f"{'observable':<{n + 2}} {'|C_m|':>6} {'estimate':>9} {'exact':>9} ok")
    for obs, est, t, c, ok in zip(observables, report.estimates, truth, report.compat_counts, report.success):
        print(f"{obs.label():<{n + 2}} {c:>6} {est:>9.4f} {t:>9.4f} {'y' if ok else 'n'}")
    print(f"all within eps={args.eps}: {report.all_success}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sttuep", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo sweep from a config file")
    sim.add_argument("config")
    sim.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
    sim.add_argument("--name", help="output file stem (default: config file stem)")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--plot", action="store_true", help="also write an SVG plot")
    sim.set_defaults(func=_simulate)

    bound = sub.add_parser("bound", help="copies sufficient for the accuracy requirement")
    bound.add_argument("--w", type=int, required=True)
    bound.add_argument("--M", type=int, required=True)
    bound.add_argument("--eps", type=float, required=True)
    bound.add_argument("--delta", type=float, required=True)
    bound.add_argument("--perr", type=float, default=0.0)
    bound.set_defaults(func=_bound)

    demo = sub.add_parser("demo", help="trace a single trial")
    demo.add_argument("--n", type=int, default=4)
    demo.add_argument("--copies", type=int, default=2000)
    demo.add_argument("--M", type=int, default=5)
    demo.add_argument("--w", type=int, default=2)
    demo.add_argument("--eps", type=float, default=0.2)
    demo.add_argument("--crossover", type=float, default=0.01)
    demo.add_argument("--R-b", dest="R_b", default="uncoded")
    demo.add_argument("--R-u", dest="R_u", default="rep5")
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(func=_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
