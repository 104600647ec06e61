"""Command-line front door.

Subcommands:

* ``run --scenario <path> [--seed <u64>] --out <dir>`` — execute a
  scenario and write the report tree (data files, figures, timings).
* ``bench-zksm --k <list> --reps <n> [--profile default|small]`` —
  time the membership-proof phases per set size.
* ``verify-trace <dir>`` — independently re-check a written run.

Exit codes: 0 success, 1 usage, 2 bad scenario/trace input, 3 engine
or verification failure.  ``CLOAKRIDE_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import statistics
import sys
import time
from pathlib import Path

from . import zksm
from .agents import run_scenario
from .crypto.pairing import PairingContext
from .errors import CloakRideError, ScenarioError
from .report import verify_trace, write_outputs
from .scenario import load_scenario

log = logging.getLogger("cloakride")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCHEMA = 2
EXIT_ENGINE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cloakride", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run_p = sub.add_parser("run", help="execute a scenario and write reports")
    run_p.add_argument("--scenario", required=True, help="scenario JSON file")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--out", required=True, help="output directory for the report tree")
    run_p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    bench_p = sub.add_parser("bench-zksm", help="time membership-proof phases")
    bench_p.add_argument("--k", default="4,8,16,32", help="comma-separated set sizes")
    bench_p.add_argument("--reps", type=int, default=5, help="repetitions per set size")
    bench_p.add_argument("--profile", default="default", choices=["default", "small"])
    bench_p.add_argument("--out", default=None, help="directory for bench CSV and figure")

    verify_p = sub.add_parser("verify-trace", help="re-check a written run")
    verify_p.add_argument("path", help="report directory produced by `run`")
    return parser


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        log.error("bad scenario: %s", exc)
        return EXIT_SCHEMA
    try:
        trace = run_scenario(scenario, seed=args.seed)
        report = write_outputs(trace, args.out, figures=not args.no_figures)
    except CloakRideError as exc:
        log.error("engine error: %s", exc)
        return EXIT_ENGINE
    statuses = {}
    for row in report["outcomes"]:
        statuses[row["status"]] = statuses.get(row["status"], 0) + 1
    print(f"scenario {report['scenario_digest'][:12]} seed={report['seed']}")
    print(f"events: {trace.stats['events']}  proofs: {trace.stats['proofs_generated']}")
    for status, count in sorted(statuses.items()):
        print(f"  {count} x {status}")
    print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        sizes = sorted({int(k) for k in args.k.split(",") if k.strip()})
    except ValueError:
        log.error("--k must be a comma-separated list of integers")
        return EXIT_USAGE
    if not sizes or min(sizes) < 2:
        log.error("set sizes must be >= 2")
        return EXIT_USAGE
    ctx = PairingContext.from_profile(args.profile)
    import random

    rng = random.Random(0xBE7C)
    rows = []
    proof_size = None
    for k in sizes:
        samples = {"setup": [], "audit": [], "prove": [], "verify": []}
        for _ in range(args.reps):
            elements = [ctx.random_scalar(rng) for _ in range(k)]
            t0 = time.perf_counter()
            setup = zksm.setup(ctx, elements, rng)
            samples["setup"].append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            ok = zksm.audit(ctx, setup)
            samples["audit"].append(time.perf_counter() - t0)
            assert ok
            element = elements[k // 2]
            commitment, randomness, _ = zksm.commit_location(ctx, element, rng)
            t0 = time.perf_counter()
            proof = zksm.prove(ctx, setup, element, randomness, commitment, rng)
            samples["prove"].append(time.perf_counter() - t0)
            blob = proof.to_bytes(ctx)
            proof_size = len(blob)
            t0 = time.perf_counter()
            accepted = zksm.verify_bytes(ctx, setup.public_key.encode(), blob)
            samples["verify"].append(time.perf_counter() - t0)
            assert accepted
            zksm._verify_bytes.cache_clear()
        row = {"k": k}
        for phase, values in samples.items():
            row[f"{phase}_mean_ms"] = statistics.mean(values) * 1000
            row[f"{phase}_stdev_ms"] = (statistics.stdev(values) if len(values) > 1 else 0.0) * 1000
        rows.append(row)

    header = f"{'k':>4} " + "".join(f"{p + ' ms':>14}" for p in ("setup", "audit", "prove", "verify"))
    print(header)
    for row in rows:
        print(
            f"{row['k']:>4} "
            + "".join(
                f"{row[f'{p}_mean_ms']:>9.1f}±{row[f'{p}_stdev_ms']:<4.1f}"
                for p in ("setup", "audit", "prove", "verify")
            )
        )
    print(f"proof size: {proof_size} bytes (profile {args.profile})")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        (out / "bench_zksm.csv").write_text(buf.getvalue())
        _bench_figure(rows, out / "bench_zksm.png")
        print(f"bench results written to {out}")
    return EXIT_OK


def _bench_figure(rows, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ks = [row["k"] for row in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for phase in ("setup", "audit", "prove", "verify"):
        ax.plot(ks, [row[f"{phase}_mean_ms"] for row in rows], marker="o", label=phase)
    ax.set_xlabel("set size k")
    ax.set_ylabel("mean time (ms)")
    ax.set_title("Membership proof phases")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _cmd_verify(args) -> int:
    path = Path(args.path)
    if not path.exists():
        log.error("no such trace: %s", path)
        return EXIT_SCHEMA
    events_file = path / "events.jsonl"
    report_file = path / "report.json"
    if not events_file.exists() or not report_file.exists():
        log.error("not a report directory (need report.json and events.jsonl): %s", path)
        return EXIT_SCHEMA
    failures = verify_trace(path)
    if failures:
        for failure in failures:
            print(f"FAIL {failure}")
        return EXIT_ENGINE
    print("trace OK: conservation, exclusivity, and all recorded proofs verified")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CLOAKRIDE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "bench-zksm":
        return _cmd_bench(args)
    if args.command == "verify-trace":
        return _cmd_verify(args)
    return EXIT_USAGE  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
