"""End-to-end agent scenarios: liveness, misbehavior, determinism, privacy."""

import json
import random

import pytest

from cloakride.agents import Simulation, mutual_authenticate, run_scenario
from cloakride.crypto import KeyPair, PairingContext, sign_message
from cloakride.errors import ImpersonationDetected, ScenarioError
from cloakride.scenario import parse_scenario

from conftest import corridor_scenario, random_scenario


def run(doc, seed=None):
    return run_scenario(parse_scenario(doc), seed=seed)


def outcome_of(trace, rider_id):
    return next(o for o in trace.outcomes if o["rider"] == rider_id)


def holdings(trace):
    return sum(trace.final_balances.values()) + sum(
        c.balance for c in trace.ledger.contracts.values()
    )


# -- happy path -----------------------------------------------------------------


def test_honest_pair_completes(ctx):
    trace = run(corridor_scenario([("honest", "honest")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "completed"
    names = [e.name for e in trace.events]
    assert names.count("ArrivalClaimed") == 1
    assert names.count("TripCompleted") == 1
    payment = next(c for c in trace.ledger.contracts.values() if c.kind == "ride_payment")
    assert payment.balance == 0  # zero residual escrow


def test_one_rider_three_drivers_single_claim(ctx):
    doc = corridor_scenario([("honest", "honest")])
    base = doc["drivers"][0]
    for i, bid in ((1, 3), (2, 4)):
        clone = json.loads(json.dumps(base))
        clone["id"] = f"driver-x{i}"
        clone["bid"] = bid
        clone["response_delay_s"] = 20 + i
        doc["drivers"].append(clone)
    trace = run(doc)
    names = [e.name for e in trace.events]
    assert names.count("OfferSubmitted") == 3
    assert names.count("ArrivalClaimed") == 1
    assert names.count("TripCompleted") == 1
    # lowest bid wins
    assert outcome_of(trace, "rider-0")["driver"] == "driver-0"


def test_honest_liveness_multiple_corridors(ctx):
    trace = run(corridor_scenario([("honest", "honest")] * 4))
    assert all(o["status"] == "completed" for o in trace.outcomes)
    assert holdings(trace) == sum(trace.genesis.values())


# -- misbehavior repertoire ------------------------------------------------------------


def test_no_show_driver_loses_deposit(ctx):
    trace = run(corridor_scenario([("honest", "no_show")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "fined_recovered"
    assert outcome["refunded_to_rider"] == 25 + 40  # both deposits
    rep = trace.reputation["driver-0"]
    assert rep["arrivals"] == 0 and rep["completions"] == 0  # unchanged
    assert "DriverFined" in [e.name for e in trace.events]


def test_ghost_offer_driver_never_deposits(ctx):
    trace = run(corridor_scenario([("honest", "ghost_offer")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "expired_refund"
    assert outcome["refunded_to_rider"] == 25  # rider deposit only
    # the rider lost nothing overall
    rider_home = next(a for a, l in trace.address_labels.items() if l == "rider-0")
    assert trace.final_balances[rider_home] == 2000


def test_claim_and_abandon_slashed(ctx):
    trace = run(corridor_scenario([("honest", "claim_and_abandon")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "abandoned_after_claim"
    rep = trace.reputation["driver-0"]
    assert rep["arrivals"] == 1 and rep["completions"] == 0
    assert rep["classification"] == "dishonest"
    assert rep["bond"] == 30 - 25  # compensation capped at the lost deposit
    slash_events = [
        e for e in trace.events
        if e.name == "ReputationUpdated" and e.payload.get("action") == "slashed"
    ]
    assert len(slash_events) == 1
    # the rider recovered the down payment from the bond
    rider_home = next(a for a, l in trace.address_labels.items() if l == "rider-0")
    assert trace.final_balances[rider_home] == 2000


def test_distance_cheat_detected_and_unpaid(ctx):
    trace = run(corridor_scenario([("honest", "distance_cheat")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "distance_cheat_detected"
    assert outcome["fare_paid"] == 0
    assert "SegmentPaid" not in [e.name for e in trace.events]


def test_rigged_setup_detected_by_audit(ctx):
    trace = run(corridor_scenario([("rigged_setup", "honest")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "rigged_setup_refunded"
    # the driver never deposited, never claimed, lost nothing
    rep = trace.reputation["driver-0"]
    assert rep["arrivals"] == 0
    driver_home = next(a for a, l in trace.address_labels.items() if l == "driver-0")
    assert trace.final_balances[driver_home] == 500 - 30  # only the bond is held


def test_ghost_request_costs_drivers_nothing(ctx):
    trace = run(corridor_scenario([("ghost_request", "honest")]))
    assert outcome_of(trace, "rider-0")["status"] == "ghosted"
    driver_home = next(a for a, l in trace.address_labels.items() if l == "driver-0")
    assert trace.final_balances[driver_home] == 500 - 30


def test_stop_signing_rider_driver_keeps_signed_fare(ctx):
    trace = run(corridor_scenario([("stop_signing", "honest")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "stopped_mid_trip"
    segments = [e for e in trace.events if e.name == "SegmentPaid"]
    assert len(segments) == 1
    paid = sum(e.payload["amount"] for e in segments)
    assert outcome["fare_paid"] == paid > 0
    # honest driver is not slashed for the rider's behavior
    assert trace.reputation["driver-0"]["bond"] == 30


def test_impersonated_rider_detected(ctx):
    trace = run(corridor_scenario([("impersonated", "honest")]))
    outcome = outcome_of(trace, "rider-0")
    assert outcome["status"] == "impersonation_detected"
    assert "TripCompleted" not in [e.name for e in trace.events]
    # driver arrived legitimately: his claim stands, and at settle the
    # bond compensates the rider's lost down payment
    rep = trace.reputation["driver-0"]
    assert rep["arrivals"] == 1


def test_misbehavior_containment_funds(ctx):
    """Across the whole repertoire, honest parties lose at most a deposit."""
    pairs = [
        ("honest", "honest"),
        ("honest", "no_show"),
        ("honest", "claim_and_abandon"),
        ("honest", "distance_cheat"),
        ("rigged_setup", "honest"),
        ("ghost_request", "honest"),
        ("stop_signing", "honest"),
        ("impersonated", "honest"),
        ("honest", "ghost_offer"),
    ]
    doc = corridor_scenario(pairs)
    trace = run(doc)
    assert holdings(trace) == sum(trace.genesis.values())
    labels = {l: a for a, l in trace.address_labels.items()}
    for i, (rider_profile, driver_profile) in enumerate(pairs):
        rider_net = trace.final_balances.get(labels[f"rider-{i}"], 0) - 2000
        driver_net = (
            trace.final_balances.get(labels[f"driver-{i}"], 0)
            + trace.reputation[f"driver-{i}"]["bond"]  # still held for them
            - 500
        )
        outcome = outcome_of(trace, f"rider-{i}")
        if rider_profile == "honest":
            fare = outcome["fare_paid"] + outcome["down_payment_to_driver"]
            assert rider_net >= -fare - 25, (i, rider_net)
        if driver_profile == "honest":
            assert driver_net >= -40, (i, driver_net)  # at most his escrow deposit


# -- determinism and privacy -----------------------------------------------------------


def test_identical_seeds_identical_traces(ctx):
    doc = corridor_scenario([("honest", "honest"), ("honest", "no_show")], seed=99)
    first, second = run(doc), run(doc)
    assert [e.to_record() for e in first.events] == [e.to_record() for e in second.events]
    assert first.final_balances == second.final_balances
    assert first.outcomes == second.outcomes
    assert first.ledger.serialize() == second.ledger.serialize()


def test_different_seeds_differ(ctx):
    doc = corridor_scenario([("honest", "honest")])
    first, second = run(doc, seed=1), run(doc, seed=2)
    assert first.ledger.serialize() != second.ledger.serialize()


def test_request_addresses_fresh_and_unlinkable(ctx):
    doc = corridor_scenario([("honest", "honest")] * 3)
    trace = run(doc)
    request_addresses = [
        a for a, l in trace.address_labels.items() if l.endswith("#request")
    ]
    home_addresses = [a for a, l in trace.address_labels.items() if l.startswith("rider-") and "#" not in l]
    assert len(set(request_addresses)) == 3
    assert not set(request_addresses) & set(home_addresses)


def test_ledger_never_stores_plain_coordinates(ctx):
    doc = corridor_scenario([("honest", "honest")] * 2)
    scenario = parse_scenario(doc)
    trace = run_scenario(scenario)
    serialized = trace.ledger.serialize()
    for rider in scenario.riders:
        for lat, lon in (rider.pickup, rider.dropoff):
            for text in (repr(lat), repr(lon), f"{lat:.5f}", f"{lon:.5f}"):
                assert text not in serialized


def test_membership_set_contains_agreed_pickup_among_decoys(ctx):
    doc = corridor_scenario([("honest", "honest")], set_size=6)
    scenario = parse_scenario(doc)
    sim = Simulation(scenario)
    trace = sim.run()
    from cloakride.trips import GeoPoint, encode_location

    tld = next(c for c in trace.ledger.contracts.values() if c.kind == "time_locked_deposit")
    elements = {ctx.scalar_from_bytes(bytes.fromhex(e)) for e in tld.set_elements}
    agreed = encode_location(GeoPoint(35.25, -90.0), scenario.location_precision)
    assert agreed in elements
    assert len(elements) == 6


# -- scenario plumbing ------------------------------------------------------------------


def test_unknown_profile_rejected(ctx):
    doc = corridor_scenario([("honest", "honest")])
    doc["riders"][0]["profile"] = "chaotic"
    with pytest.raises(ScenarioError):
        run(doc)


def test_mutual_authenticate_round_trip(ctx, rng):
    key = KeyPair.generate(ctx, rng)

    def respond(nonce):
        return sign_message(ctx, key, b"auth|" + ctx.scalar_to_bytes(nonce), rng)

    assert mutual_authenticate(ctx, rng, respond, key.public)


def test_mutual_authenticate_detects_impostor(ctx, rng):
    key, impostor = KeyPair.generate(ctx, rng), KeyPair.generate(ctx, rng)

    def respond(nonce):
        return sign_message(ctx, impostor, b"auth|" + ctx.scalar_to_bytes(nonce), rng)

    with pytest.raises(ImpersonationDetected):
        mutual_authenticate(ctx, rng, respond, key.public)


def test_mutual_authenticate_rejects_replay(ctx, rng):
    key = KeyPair.generate(ctx, rng)
    recorded = {}

    def respond_and_record(nonce):
        sig = sign_message(ctx, key, b"auth|" + ctx.scalar_to_bytes(nonce), rng)
        recorded["sig"] = sig
        return sig

    assert mutual_authenticate(ctx, rng, respond_and_record, key.public)

    def replay(_nonce):
        return recorded["sig"]  # response for the previous session nonce

    with pytest.raises(ImpersonationDetected):
        mutual_authenticate(ctx, rng, replay, key.public)


def test_random_scenarios_do_not_crash(ctx):
    rng = random.Random(123)
    for i in range(10):
        trace = run(random_scenario(rng, i))
        assert holdings(trace) == sum(trace.genesis.values())
