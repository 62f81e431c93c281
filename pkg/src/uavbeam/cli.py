"""Command-line entry point: ``simulate``, ``ia-delay``, ``validate`` and ``config``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from .association import METRICS
from .config import SOLVER_ALIASES, WEIGHT_MODES, SimConfig, Variant, canonical_solver, sweep_variants
from .initial_access import SCHEMES

log = logging.getLogger("uavbeam")

SOLVER_CHOICES = ("hungarian", "lapjv", "greedy", "auction", "bruteforce", "scipy") + tuple(SOLVER_ALIASES)


def _build_config(args) -> SimConfig:
    cfg = SimConfig.load(args.config) if args.config else SimConfig()
    changes = {}
    if args.full_scale:
        changes["trials"] = 2000
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    assoc = cfg.association
    p = assoc.primary
    primary = Variant(args.metric or p.metric, args.weights or p.weights,
                      canonical_solver(args.solver) if args.solver else p.solver)
    extra = list(assoc.variants)
    if args.sweep:
        extra.extend(sweep_variants())
    extra.extend(Variant.parse(v) for v in args.variant or ())
    changes["association"] = dataclasses.replace(assoc, primary=primary, variants=tuple(extra))
    if args.scheme:
        changes["ia"] = dataclasses.replace(cfg.ia, scheme=args.scheme)
    if args.nt:
        changes["antennas"] = dataclasses.replace(cfg.antennas, tx_sizes=tuple(args.nt))
    if args.out or args.no_figures:
        o = cfg.output
        changes["output"] = dataclasses.replace(o, directory=args.out or o.directory,
                                                figures=o.figures and not args.no_figures)
    return cfg.replace(**changes).validate()


def _summarise(result) -> List[str]:
    lines = []
    cfg = result.config
    for n_t in sorted(result.by_nt):
        a = result.by_nt[n_t]
        lines.append(f"N_t={n_t} ({a.trials} trials)")
        for label in a.variants:
            lines.append(f"  accuracy {label:<28s} {a.mean_accuracy(label):.4f}")
        oracle = a.mean_rate("oracle")
        for name in a.schemes:
            r = a.mean_rate(name)
            loss = (oracle - r) / oracle if oracle > 0 else float("nan")
            lines.append(f"  rate     {name:<28s} {r:.3f} bits/s/Hz  (loss vs oracle {100 * loss:+.2f}%)")
        w = a.window_rmse
        lines.append(f"  window RMSE ISAC phi/theta {w[0, 0]:.4f}/{w[0, 1]:.4f} rad, "
                     f"feedback {w[1, 0]:.4f}/{w[1, 1]:.4f} rad")
        s = cfg.ia.scheme
        if s in a.ia_delay:
            lines.append(f"  IA {s}: {a.ia_delay[s]:.1f} ms, success {a.ia_success[s]:.3f}")
    return lines


def cmd_simulate(args) -> int:
    from .harness import run_monte_carlo
    from .report import emit_report

    cfg = _build_config(args)
    out = Path(cfg.output.directory)
    t0 = time.perf_counter()

    def progress(n_t, done, total):
        if done == total or done % max(total // 10, 1) == 0:
            log.info("N_t=%d: %d/%d trials (%.0f s)", n_t, done, total, time.perf_counter() - t0)

    result = run_monte_carlo(cfg, progress=progress)
    paths = emit_report(result, out)
    cfg.dump(out / "config.yaml")
    for line in _summarise(result):
        print(line)
    print(f"wrote {len(paths)} files to {out} in {time.perf_counter() - t0:.1f} s")
    return 0


def cmd_ia_delay(args) -> int:
    from .report import IA_COLUMNS, ia_delay_rows, write_csv

    rows = ia_delay_rows(args.q, args.s1, args.s2, args.tp, args.variant)
    print(",".join(IA_COLUMNS))
    for r in rows:
        print(",".join(f"{r[c]:g}" for c in IA_COLUMNS))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "ia_delay.csv", IA_COLUMNS, rows)
    return 0


def cmd_validate(args) -> int:
    from .validate import run_validation

    t0 = time.perf_counter()
    results = run_validation(lambda r: print(r.line(), flush=True))
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} invariants hold "
          f"({time.perf_counter() - t0:.1f} s)")
    return 0 if ok else 1


def cmd_config(args) -> int:
    cfg = SimConfig.load(args.config) if args.config else SimConfig()
    if args.out:
        cfg.dump(args.out)
    else:
        import yaml
        sys.stdout.write(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavbeam", description="Vision-aided ISAC beam management simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte Carlo experiment and write CSV/PNG reports")
    sim.add_argument("--config", help="YAML config file (defaults are used for missing keys)")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--metric", choices=METRICS)
    sim.add_argument("--weights", choices=WEIGHT_MODES)
    sim.add_argument("--solver", choices=SOLVER_CHOICES)
    sim.add_argument("--scheme", choices=SCHEMES, help="IA scheme headlined in the summary")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--nt", type=int, action="append", help="transmit array size (repeatable)")
    sim.add_argument("--variant", action="append", help="extra metric/weights/solver pipeline (repeatable)")
    sim.add_argument("--sweep", action="store_true", help="score every metric x weight x solver combination")
    sim.add_argument("--workers", type=int)
    sim.add_argument("--full-scale", action="store_true", help="2000 trials")
    sim.add_argument("--no-figures", action="store_true", help="CSV only")
    sim.set_defaults(func=cmd_simulate)

    ia = sub.add_parser("ia-delay", help="closed-form IA delay table")
    ia.add_argument("--q", type=int, nargs="+", default=[4, 6, 8], help="Q_B = Q_U grid values")
    ia.add_argument("--s1", type=int, default=2)
    ia.add_argument("--s2", type=int, default=2)
    ia.add_argument("--tp", type=float, default=5.0, help="probe slot in ms")
    ia.add_argument("--variant", choices=("with-ra", "scan-only"), default="with-ra")
    ia.add_argument("--out", help="also write ia_delay.csv into this directory")
    ia.set_defaults(func=cmd_ia_delay)

    val = sub.add_parser("validate", help="run the invariant suite")
    val.set_defaults(func=cmd_validate)

    conf = sub.add_parser("config", help="print or write the effective config")
    conf.add_argument("--config")
    conf.add_argument("--out")
    conf.set_defaults(func=cmd_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
