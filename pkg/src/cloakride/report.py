"""Run reports: deterministic data files, figures, and trace verification.

A run writes into one output directory:

* ``report.json`` — outcomes, balances, reputation, aggregate stats
* ``events.jsonl`` — the full event log, one record per line
* ``balances.csv``, ``reputation.csv``, ``outcomes.csv``
* ``figures/*.png`` — balance timeline and outcome summary
* ``timings.json`` — wall-clock statistics, kept separate because the
  data files above are byte-identical across reruns of one (scenario,
  seed) pair and wall times are not

``verify_trace`` re-checks a written trace from scratch: currency
conservation replayed event by event, claim-or-fine exclusivity per
escrow contract, and a full re-verification of every arrival proof in
the log.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .agents import SimulationTrace
from .crypto.pairing import PairingContext
from . import zksm

REPORT_FORMAT = "cloakride-report/1"


def build_report(trace: SimulationTrace) -> dict:
    """The deterministic portion of a run's results."""
    contracts_view = {
        cid: {"kind": c.kind, "balance": c.balance}
        for cid, c in sorted(trace.ledger.contracts.items())
    }
    final_supply = sum(trace.final_balances.values()) + sum(
        c["balance"] for c in contracts_view.values()
    )
    return {
        "format": REPORT_FORMAT,
        "scenario_digest": trace.scenario_digest,
        "seed": trace.seed,
        "curve_profile": trace.curve_profile,
        "genesis": trace.genesis,
        "genesis_supply": sum(trace.genesis.values()),
        "final_balances": trace.final_balances,
        "final_supply": final_supply,
        "contracts": contracts_view,
        "address_labels": trace.address_labels,
        "outcomes": trace.outcomes,
        "reputation": trace.reputation,
        "stats": trace.stats,
    }


def _dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def _events_jsonl(trace: SimulationTrace) -> str:
    lines = [json.dumps(e.to_record(), sort_keys=True, separators=(",", ":")) for e in trace.events]
    return "\n".join(lines) + ("\n" if lines else "")


def _balances_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["address", "label", "genesis", "final"])
    addresses = sorted(set(report["genesis"]) | set(report["final_balances"]))
    labels = report["address_labels"]
    for addr in addresses:
        writer.writerow(
            [
                addr,
                labels.get(addr, ""),
                report["genesis"].get(addr, 0),
                report["final_balances"].get(addr, 0),
            ]
        )
    return buf.getvalue()


def _reputation_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["driver", "address", "arrivals", "completions", "ratio", "classification", "bond"]
    )
    for driver_id, row in sorted(report["reputation"].items()):
        writer.writerow(
            [
                driver_id,
                row["address"],
                row["arrivals"],
                row["completions"],
                row["ratio"],
                row["classification"],
                row["bond"],
            ]
        )
    return buf.getvalue()


def _outcomes_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "rider",
            "driver",
            "request",
            "stage",
            "status",
            "down_payment_to_driver",
            "fare_paid",
            "refunded_to_rider",
        ]
    )
    for row in report["outcomes"]:
        writer.writerow(
            [
                row["rider"],
                row["driver"] or "",
                row["request"] or "",
                row["stage"],
                row["status"],
                row["down_payment_to_driver"],
                row["fare_paid"],
                row["refunded_to_rider"],
            ]
        )
    return buf.getvalue()


# -- money flow replay -------------------------------------------------------


def _event_flows(record: dict):
    """Yield (source, destination, amount) for one event record.

    Sources/destinations are either account addresses or contract ids;
    the special source "genesis" never appears here.
    """
    name = record["event"]
    payload = record["payload"]
    contract = record["contract"]
    if name == "Transfer":
        yield payload["from"], payload["to"], payload["amount"]
    elif name == "Deployed":
        if payload["value"]:
            yield payload["sender"], contract, payload["value"]
    elif name == "DepositArmed":
        yield payload["driver"], contract, payload["amount"]
    elif name == "ArrivalClaimed":
        yield contract, payload["driver"], payload["amount"]
    elif name == "DriverFined":
        yield contract, payload["rider"], payload["amount"]
    elif name == "Refunded":
        yield contract, payload["to"], payload["amount"]
    elif name == "SegmentPaid":
        yield contract, payload["driver"], payload["amount"]
    elif name == "ReputationUpdated":
        if payload.get("action") == "registered" and payload.get("bond"):
            yield payload["driver"], contract, payload["bond"]
        elif payload.get("action") == "slashed":
            for rider, share in payload.get("payments", []):
                yield contract, rider, share


def verify_trace(out_dir) -> list[str]:
    """Re-check a written run; returns violations (empty means valid)."""
    out = Path(out_dir)
    try:
        report = json.loads((out / "report.json").read_text())
        events = [
            json.loads(line)
            for line in (out / "events.jsonl").read_text().splitlines()
            if line.strip()
        ]
    except (OSError, json.JSONDecodeError) as exc:
        return [f"unreadable trace: {exc}"]

    failures: list[str] = []

    # conservation: replay every value-moving event from genesis
    balances: dict[str, int] = dict(report["genesis"])
    supply = sum(balances.values())
    for record in events:
        for src, dst, amount in _event_flows(record):
            if not isinstance(amount, int) or amount < 0:
                failures.append(f"conservation: bad amount in {record['event']}")
                continue
            balances[src] = balances.get(src, 0) - amount
            balances[dst] = balances.get(dst, 0) + amount
    if sum(balances.values()) != supply:
        failures.append("conservation: replayed flows do not preserve total supply")
    replayed_accounts = {k: v for k, v in balances.items() if k not in report["contracts"]}
    reported = {k: v for k, v in report["final_balances"].items() if v != 0}
    replayed_nonzero = {k: v for k, v in replayed_accounts.items() if v != 0}
    if replayed_nonzero != reported:
        failures.append("conservation: replayed balances disagree with the reported finals")
    for cid, view in report["contracts"].items():
        if balances.get(cid, 0) != view["balance"]:
            failures.append(f"conservation: contract {cid} balance mismatch")
            break
    if any(v < 0 for v in balances.values()):
        failures.append("conservation: an account went negative during replay")
    if report.get("final_supply") != supply:
        failures.append("conservation: reported final supply differs from genesis supply")

    # claim-or-fine exclusivity per escrow contract
    claimed, fined = set(), set()
    for record in events:
        if record["event"] == "ArrivalClaimed":
            claimed.add(record["contract"])
        elif record["event"] == "DriverFined":
            fined.add(record["contract"])
    both = claimed & fined
    if both:
        failures.append(f"exclusivity: contracts {sorted(both)} were both claimed and fined")

    # every recorded membership proof must verify
    try:
        ctx = PairingContext.from_profile(report.get("curve_profile", "default"))
    except ValueError as exc:
        return failures + [f"proofs: {exc}"]
    for record in events:
        if record["event"] != "ArrivalClaimed":
            continue
        payload = record["payload"]
        try:
            ok = zksm.verify_bytes(
                ctx, bytes.fromhex(payload["y"]), bytes.fromhex(payload["proof"])
            )
        except (KeyError, ValueError):
            ok = False
        if not ok:
            failures.append(f"proofs: arrival proof on {record['contract']} does not verify")
    return failures


# -- figures -----------------------------------------------------------------


def _render_figures(trace: SimulationTrace, report: dict, fig_dir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    labels = report["address_labels"]

    # balance timeline for labeled accounts, reconstructed from the flows
    balances = dict(report["genesis"])
    series: dict[str, tuple[list, list]] = {
        addr: ([trace.events[0].time if trace.events else 0], [balances.get(addr, 0)])
        for addr in labels
    }
    for event in trace.events:
        for src, dst, amount in _event_flows(event.to_record()):
            balances[src] = balances.get(src, 0) - amount
            balances[dst] = balances.get(dst, 0) + amount
            for addr in (src, dst):
                if addr in series:
                    times, values = series[addr]
                    times.append(event.time)
                    values.append(balances[addr])
    fig, ax = plt.subplots(figsize=(9, 5))
    for addr, (times, values) in sorted(series.items(), key=lambda kv: labels[kv[0]]):
        ax.step(times, values, where="post", label=labels[addr])
    ax.set_xlabel("ledger time (s)")
    ax.set_ylabel("balance")
    ax.set_title("Account balances over the run")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = fig_dir / "balances.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    # outcome summary
    counts: dict[str, int] = {}
    for row in report["outcomes"]:
        counts[row["status"]] = counts.get(row["status"], 0) + 1
    fig, ax = plt.subplots(figsize=(7, 4))
    names = sorted(counts)
    ax.bar(names, [counts[n] for n in names], color="#4878a8")
    ax.set_ylabel("trips")
    ax.set_title("Trip outcomes")
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right", fontsize=8)
    fig.tight_layout()
    path = fig_dir / "outcomes.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def write_outputs(trace: SimulationTrace, out_dir, figures: bool = True) -> dict:
    """Write the full report tree; returns the report dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(trace)
    (out / "report.json").write_text(_dump_json(report))
    (out / "events.jsonl").write_text(_events_jsonl(trace))
    (out / "balances.csv").write_text(_balances_csv(report))
    (out / "reputation.csv").write_text(_reputation_csv(report))
    (out / "outcomes.csv").write_text(_outcomes_csv(report))
    (out / "timings.json").write_text(_dump_json(trace.timings))
    if figures:
        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        _render_figures(trace, report, fig_dir)
    return report
