"""Scripted protocol actors and the deterministic scenario runner.

Riders, drivers, location provers and the registration authority follow
the end-to-end flow: request, sealed bidding, selection, claim-or-fine
escrow with arrival proof, mutual authentication, pay-as-you-drive.
Honesty profiles let individual agents deviate at the documented
decision points, covering the misbehavior repertoire.

Everything is driven by one event queue ordered by (time, enqueue
sequence) and per-agent PRNGs derived from the scenario seed, so a run
is a pure function of (scenario, seed).
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
import time as _time
from dataclasses import dataclass, field
from typing import Optional

from . import contracts, zksm
from .crypto.pairing import PairingContext
from .crypto.schemes import (
    AttestationSignature,
    Certificate,
    KeyPair,
    issue_certificate,
    offer_decrypt,
    offer_encrypt,
    sign_message,
    verify_certificate,
    verify_message,
)
from .errors import (
    ContractRevert,
    DecryptionFailure,
    ImpersonationDetected,
    InsufficientFunds,
    OutOfCoverage,
    ScenarioError,
    SignatureMismatch,
)
from .ledger import Ledger, derive_address, make_transaction
from .matching import MatchPreferences, RideOffer, request_in_catalog, select_offer
from .scenario import DriverSpec, ProverSpec, RiderSpec, Scenario
from .trips import (
    DesiredTrip,
    GeoPoint,
    PlannedTrip,
    RideRequest,
    cloak_point,
    cloak_time,
    cloak_trip,
    encode_location,
    enumerate_trips,
    generalize_request,
    haversine_m,
    quantize,
)

RIDER_PROFILES = {"honest", "rigged_setup", "ghost_request", "stop_signing", "impersonated"}
DRIVER_PROFILES = {"honest", "no_show", "claim_and_abandon", "distance_cheat", "ghost_offer"}


@dataclass
class TripOutcome:
    """Per-request summary row for the run report."""

    rider: str
    driver: Optional[str] = None
    request_id: Optional[str] = None
    stage: str = "created"
    status: str = "pending"
    down_payment_to_driver: int = 0
    fare_paid: int = 0
    refunded_to_rider: int = 0

    def to_record(self) -> dict:
        return {
            "rider": self.rider,
            "driver": self.driver,
            "request": self.request_id,
            "stage": self.stage,
            "status": self.status,
            "down_payment_to_driver": self.down_payment_to_driver,
            "fare_paid": self.fare_paid,
            "refunded_to_rider": self.refunded_to_rider,
        }


class Scheduler:
    """Deterministic event queue: ordered by time, then enqueue order."""

    def __init__(self):
        self._heap: list = []
        self._seq = 0

    def at(self, when: int, fn) -> None:
        heapq.heappush(self._heap, (int(when), self._seq, fn))
        self._seq += 1

    def run(self, ledger: Ledger) -> None:
        while self._heap:
            when, _, fn = heapq.heappop(self._heap)
            if when > ledger.now:
                ledger.advance_time(when - ledger.now)
            fn()


def _agent_rng(seed: int, agent_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{agent_id}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


class LocationProverAgent:
    """Trusted roadside attester: countersigns commitments in coverage."""

    def __init__(self, sim: "Simulation", spec: ProverSpec):
        self.sim = sim
        self.spec = spec
        self.rng = _agent_rng(sim.seed, f"lp|{spec.id}")
        self.key = KeyPair.generate(sim.ctx, self.rng)

    def attest(self, request: zksm.AttestationRequest, position: GeoPoint) -> zksm.LPAttestation:
        return zksm.lp_attest(self.sim.ctx, self.key, request, position, self.spec.coverage, self.rng)


class DriverAgent:
    def __init__(self, sim: "Simulation", spec: DriverSpec):
        self.sim = sim
        self.spec = spec
        self.rng = _agent_rng(sim.seed, f"driver|{spec.id}")
        self.key = KeyPair.generate(sim.ctx, self.rng)
        self.address = derive_address(self.key.public)
        self.certificate: Optional[Certificate] = None
        trip = PlannedTrip(tuple((GeoPoint(lat, lon), t) for lat, lon, t in spec.waypoints))
        self.catalog = enumerate_trips(
            cloak_trip(sim.scenario.grid, trip, sim.scenario.time_interval_s)
        )
        self.trip = trip
        self.offered: dict[str, dict] = {}  # request id -> plaintext offer we sent

    # -- bidding ---------------------------------------------------------

    def consider_request(self, request_id: str) -> None:
        sim = self.sim
        board = sim.board()
        record = board.requests.get(request_id)
        if record is None or sim.ledger.now > record["deadline"]:
            return
        grid = sim.scenario.grid
        request = RideRequest(
            origin_cell=grid.cell_by_id(record["origin_cell"]),
            origin_window=cloak_time(record["window_start"], sim.scenario.time_interval_s),
            dest_cell=grid.cell_by_id(record["dest_cell"]),
            deadline=record["deadline"],
            max_offers=record["max_offers"],
        )
        if not request_in_catalog(self.catalog, request):
            return
        entry = next(
            e
            for e in self.catalog.entries
            if e.origin_cell.id == request.origin_cell.id
            and e.dest_cell.id == request.dest_cell.id
            and e.origin_window.overlaps(request.origin_window)
        )
        pickup, pickup_time = self.trip.waypoints[entry.origin_index]
        dropoff, dropoff_time = self.trip.waypoints[entry.dest_index]
        plaintext = {
            "driver": self.address,
            "driver_key": self.key.public.encode().hex(),
            "certificate": {
                "driver_id": self.certificate.driver_id,
                "public": self.certificate.public.encode().hex(),
                "signature": self.certificate.signature.encode(sim.ctx).hex(),
            },
            "pickup": [pickup.lat, pickup.lon],
            "pickup_time": pickup_time,
            "dropoff": [dropoff.lat, dropoff.lon],
            "dropoff_time": dropoff_time,
            "bid": self.spec.bid,
        }
        ciphertext = offer_encrypt(
            sim.ctx,
            sim.ctx.decode_g1(bytes.fromhex(record["public_key"])),
            json.dumps(plaintext, sort_keys=True).encode(),
            self.rng,
        )
        try:
            sim.submit(
                self.key,
                sim.board_id,
                "make_ride_offer",
                {"request": request_id, "ciphertext": ciphertext.hex(), "bid": self.spec.bid},
            )
        except ContractRevert:
            return  # deadline or cap raced us; nothing to do
        self.offered[request_id] = plaintext

    # -- escrow and arrival ------------------------------------------------

    def on_selected(self, rider: "RiderAgent", tld_id: str) -> None:
        sim = self.sim
        outcome = rider.outcome
        if self.spec.profile == "ghost_offer":
            outcome.stage = "driver_ignored_selection"
            return
        tld = sim.ledger.contracts[tld_id]
        setup = tld.setup_view(sim.ctx)
        if not zksm.audit(sim.ctx, setup):
            outcome.stage = "setup_audit_failed"
            return
        try:
            sim.submit(self.key, tld_id, "driver_deposit", {}, value=tld.driver_deposit_required)
        except (ContractRevert, InsufficientFunds):
            outcome.stage = "driver_deposit_failed"
            return
        outcome.stage = "armed"
        if self.spec.profile == "no_show":
            return
        offer = self.offered[rider.request_id]
        arrive_at = max(offer["pickup_time"], sim.ledger.now + 1)
        sim.sched.at(arrive_at, lambda: self.arrive(rider, tld_id, setup))

    def arrive(self, rider: "RiderAgent", tld_id: str, setup: zksm.ZkSetup) -> None:
        sim = self.sim
        outcome = rider.outcome
        offer = self.offered[rider.request_id]
        position = GeoPoint(*offer["pickup"])
        element = encode_location(position, sim.scenario.location_precision)
        commitment, randomness, att_request = zksm.commit_location(sim.ctx, element, self.rng)
        prover = next(
            (lp for lp in sim.provers if lp.spec.coverage.contains(position)), None
        )
        if prover is None:
            outcome.stage = "no_prover_coverage"
            return
        try:
            attestation = prover.attest(att_request, position)
        except (SignatureMismatch, OutOfCoverage):
            outcome.stage = "attestation_refused"
            return
        try:
            proof = zksm.prove(sim.ctx, setup, element, randomness, commitment, self.rng)
        except Exception:
            outcome.stage = "prove_failed"
            return
        try:
            sim.submit(
                self.key,
                tld_id,
                "proof_of_arrival",
                {
                    "proof": proof.to_bytes(sim.ctx).hex(),
                    "attestation": attestation.encode(sim.ctx).hex(),
                },
            )
        except ContractRevert:
            outcome.stage = "arrival_proof_rejected"
            return
        outcome.stage = "claimed"
        outcome.down_payment_to_driver = rider.spec.deposit
        try:
            self.authenticate_rider(rider)
        except ImpersonationDetected:
            outcome.stage = "impersonation_detected"
            outcome.status = "impersonation_detected"
            return
        if self.spec.profile == "claim_and_abandon":
            outcome.stage = "abandoned_after_claim"
            return
        sim.sched.at(sim.ledger.now + 1, lambda: rider.start_trip(self, tld_id))

    def authenticate_rider(self, rider: "RiderAgent") -> bool:
        """Challenge-response: the rider proves knowledge of the request key."""
        board_key = self.sim.ctx.decode_g1(
            bytes.fromhex(self.sim.board().requests[rider.request_id]["public_key"])
        )
        return mutual_authenticate(self.sim.ctx, self.rng, rider.respond_challenge, board_key)

    def report_segment(self, actual_units: int) -> int:
        """What the driver claims to have driven since the last segment."""
        if self.spec.profile == "distance_cheat" and actual_units > 0:
            return actual_units + 1
        return actual_units

    def cosign_segment(self, message: bytes):
        return sign_message(self.sim.ctx, self.key, message, self.rng)


class RiderAgent:
    def __init__(self, sim: "Simulation", spec: RiderSpec):
        self.sim = sim
        self.spec = spec
        self.rng = _agent_rng(sim.seed, f"rider|{spec.id}")
        self.home_key = KeyPair.generate(sim.ctx, self.rng)
        self.home_address = derive_address(self.home_key.public)
        self.request_key: Optional[KeyPair] = None
        self.request_address: Optional[str] = None
        self.request_id: Optional[str] = None
        self.desired = DesiredTrip(
            pickup=GeoPoint(*spec.pickup),
            pickup_time=spec.pickup_time,
            dropoff=GeoPoint(*spec.dropoff),
            expected_duration_s=spec.expected_duration_s,
        )
        self.outcome = TripOutcome(rider=spec.id)
        self.selected: Optional[RideOffer] = None
        self.selected_driver: Optional[DriverAgent] = None
        self.payment_id: Optional[str] = None
        self.trip_started = False
        self._segments_submitted = 0

    # -- request -----------------------------------------------------------

    def publish_request(self) -> None:
        sim = self.sim
        self.request_key = KeyPair.generate(sim.ctx, self.rng)
        self.request_address = derive_address(self.request_key.public)
        sim.address_labels[self.request_address] = f"{self.spec.id}#request"
        try:
            sim.submit(
                self.home_key,
                "",
                "transfer",
                {"to": self.request_address},
                value=self.spec.budget,
            )
        except InsufficientFunds:
            self.outcome.stage = "funding_failed"
            self.outcome.status = "funding_failed"
            return
        deadline = sim.ledger.now + self.spec.offer_window_s
        request = generalize_request(
            sim.scenario.grid,
            self.desired,
            sim.scenario.time_interval_s,
            deadline,
            self.spec.max_offers,
        )
        self.request_id = sim.submit(
            self.request_key,
            sim.board_id,
            "make_ride_request",
            {
                "origin_cell": request.origin_cell.id,
                "dest_cell": request.dest_cell.id,
                "window_start": request.origin_window.start,
                "window_end": request.origin_window.end,
                "deadline": deadline,
                "max_offers": request.max_offers,
                "public_key": self.request_key.public.encode().hex(),
            },
        )
        self.outcome.request_id = self.request_id
        self.outcome.stage = "requested"
        for driver in sim.drivers:
            sim.sched.at(sim.ledger.now + driver.spec.response_delay_s,
                         lambda d=driver: d.consider_request(self.request_id))
        sim.sched.at(deadline + 1, self.select)

    # -- selection and escrow ----------------------------------------------

    def collect_offers(self) -> list[RideOffer]:
        sim = self.sim
        record = sim.board().requests[self.request_id]
        offers = []
        for index, raw in enumerate(record["offers"]):
            try:
                plaintext = json.loads(
                    offer_decrypt(sim.ctx, self.request_key.secret, bytes.fromhex(raw["ciphertext"]))
                )
            except (DecryptionFailure, ValueError):
                continue
            cert = plaintext.get("certificate", {})
            try:
                certificate = Certificate(
                    cert["driver_id"],
                    sim.ctx.decode_g1(bytes.fromhex(cert["public"])),
                    AttestationSignature.decode(sim.ctx, bytes.fromhex(cert["signature"])),
                )
            except Exception:
                continue
            if not verify_certificate(sim.ctx, sim.ra_key.public, certificate):
                continue
            if derive_address(certificate.public) != raw["driver"]:
                continue  # offer sender is not the certified key holder
            score = contracts.reputation_score(sim.registry(), raw["driver"])
            offers.append(
                RideOffer(
                    driver=raw["driver"],
                    pickup=GeoPoint(*plaintext["pickup"]),
                    pickup_time=plaintext["pickup_time"],
                    dropoff=GeoPoint(*plaintext["dropoff"]),
                    dropoff_time=plaintext["dropoff_time"],
                    bid=raw["bid"],
                    reputation=float(score.ratio),
                    order=index,
                )
            )
        return offers

    def select(self) -> None:
        sim = self.sim
        if self.outcome.status == "funding_failed":
            return
        if self.spec.profile == "ghost_request":
            self.outcome.stage = "ghosted"
            self.outcome.status = "ghosted"
            self._refund_home()
            return
        offers = self.collect_offers()
        prefs = self.spec.preferences
        choice = select_offer(offers, self.desired, prefs)
        if choice is None:
            self.outcome.stage = "no_feasible_offer"
            self.outcome.status = "no_match"
            self._refund_home()
            return
        self.selected = choice
        self.selected_driver = next(d for d in sim.drivers if d.address == choice.driver)
        self.outcome.driver = self.selected_driver.spec.id
        self.outcome.stage = "selected"
        self.deploy_escrow()

    def deploy_escrow(self) -> None:
        sim = self.sim
        choice = self.selected
        pickup_window = cloak_time(choice.pickup_time, sim.scenario.time_interval_s)
        if pickup_window.start <= sim.ledger.now:
            pickup_window = cloak_time(sim.ledger.now + 1, sim.scenario.time_interval_s)
        element = encode_location(choice.pickup, sim.scenario.location_precision)
        set_elements = self.build_membership_set(choice.pickup, element)
        setup = zksm.setup(sim.ctx, set_elements, self.rng)
        signatures = [s.encode().hex() for s in setup.signatures]
        if self.spec.profile == "rigged_setup":
            # corrupt one signature so the driver-side audit must fail
            bad = setup.signatures[0] * sim.ctx.g
            signatures[0] = bad.encode().hex()
        accept_deadline = sim.ledger.now + sim.scenario.accept_window_s
        try:
            tld_id = sim.submit(
                self.request_key,
                "",
                "time_locked_deposit",
                {
                    "driver": choice.driver,
                    "driver_deposit": sim.scenario.driver_deposit,
                    "accept_deadline": accept_deadline,
                    "pickup_start": pickup_window.start,
                    "pickup_end": pickup_window.end,
                    "expiration": max(pickup_window.end, accept_deadline + 1),
                    "registry": sim.registry_id,
                    "y": setup.public_key.encode().hex(),
                    "set_elements": [sim.ctx.scalar_to_bytes(e).hex() for e in set_elements],
                    "signatures": signatures,
                },
                value=self.spec.deposit,
            )
        except (ContractRevert, InsufficientFunds):
            self.outcome.stage = "escrow_failed"
            self.outcome.status = "escrow_failed"
            self._refund_home()
            return
        self.tld_id = tld_id
        self.outcome.stage = "escrow_deployed"
        sim.sched.at(sim.ledger.now + 2, lambda: self.selected_driver.on_selected(self, tld_id))
        tld = sim.ledger.contracts[tld_id]
        sim.sched.at(tld.expiration + 1, lambda: self.watchdog(tld_id))

    def build_membership_set(self, pickup: GeoPoint, true_element: int) -> list[int]:
        """The agreed pick-up encoding plus k-1 decoys from its cell.

        Decoys are resampled fresh for every request and the whole set is
        shuffled, so position never identifies the true element.
        """
        sim = self.sim
        grid = sim.scenario.grid
        cell = cloak_point(grid, pickup)
        south, north, west, east = grid.cell_box(cell)
        precision = sim.scenario.location_precision
        elements = {true_element}
        while len(elements) < sim.scenario.set_size:
            decoy = quantize(
                GeoPoint(
                    self.rng.uniform(south, north),
                    self.rng.uniform(west, east),
                ),
                precision,
            )
            elements.add(encode_location(decoy, precision))
        ordered = list(elements)
        self.rng.shuffle(ordered)
        return ordered

    def respond_challenge(self, nonce: int):
        message = b"auth|" + self.sim.ctx.scalar_to_bytes(nonce)
        if self.spec.profile == "impersonated":
            impostor = KeyPair.generate(self.sim.ctx, self.rng)
            return sign_message(self.sim.ctx, impostor, message, self.rng)
        return sign_message(self.sim.ctx, self.request_key, message, self.rng)

    # -- trip and payment -----------------------------------------------------

    def start_trip(self, driver: DriverAgent, tld_id: str) -> None:
        sim = self.sim
        choice = self.selected
        self.trip_started = True
        unit_m = sim.scenario.distance_unit_m
        units = max(1, round(haversine_m(choice.pickup, choice.dropoff) / unit_m))
        rate = choice.bid
        prepaid = min(units - 1, self.spec.deposit // rate) if rate > 0 else 0
        billable = units - prepaid
        escrow = billable * rate
        shortfall = escrow - sim.ledger.balance(self.request_address)
        if shortfall > 0:
            try:
                sim.submit(self.home_key, "", "transfer", {"to": self.request_address}, value=shortfall)
            except InsufficientFunds:
                self.outcome.stage = "payment_funding_failed"
                self.outcome.status = "payment_funding_failed"
                return
        duration = max(1, choice.dropoff_time - choice.pickup_time)
        expiration = sim.ledger.now + duration + sim.scenario.payment_grace_s
        try:
            self.payment_id = sim.submit(
                self.request_key,
                "",
                "ride_payment",
                {
                    "driver": choice.driver,
                    "distance": billable,
                    "rate": rate,
                    "expiration": expiration,
                    "registry": sim.registry_id,
                    "rider_key": self.request_key.public.encode().hex(),
                    "driver_key": driver.key.public.encode().hex(),
                },
                value=escrow,
            )
        except (ContractRevert, InsufficientFunds):
            self.outcome.stage = "payment_deploy_failed"
            self.outcome.status = "payment_deploy_failed"
            return
        self.outcome.stage = "riding"
        self._trip_plan = {
            "driver": driver,
            "billable": billable,
            "duration": duration,
            "start": sim.ledger.now,
            "submitted": 0,
            "expiration": expiration,
        }
        interval = min(sim.scenario.segment_interval_s, duration)
        sim.sched.at(sim.ledger.now + interval, self.segment_tick)
        sim.sched.at(expiration + 1, self.payment_watchdog)

    def segment_tick(self) -> None:
        sim = self.sim
        plan = self._trip_plan
        driver: DriverAgent = plan["driver"]
        elapsed_t = min(sim.ledger.now - plan["start"], plan["duration"])
        target = round(plan["billable"] * elapsed_t / plan["duration"])
        if sim.ledger.now - plan["start"] >= plan["duration"]:
            target = plan["billable"]  # rounding remainder lands on the final segment
        actual = target - plan["submitted"]
        if actual > 0:
            claimed = driver.report_segment(actual)
            if claimed != actual:
                self.outcome.stage = "distance_cheat_detected"
                self.outcome.status = "distance_cheat_detected"
                return
            message = contracts.segment_message(self.payment_id, self._segments_submitted, actual)
            try:
                sim.submit(
                    self.request_key,
                    self.payment_id,
                    "proof_of_distance",
                    {
                        "elapsed": actual,
                        "rider_sig": sign_message(sim.ctx, self.request_key, message, self.rng)
                        .encode(sim.ctx)
                        .hex(),
                        "driver_sig": driver.cosign_segment(message).encode(sim.ctx).hex(),
                    },
                )
            except ContractRevert:
                self.outcome.stage = "segment_rejected"
                self.outcome.status = "segment_rejected"
                return
            plan["submitted"] += actual
            self._segments_submitted += 1
            self.outcome.fare_paid += actual * self.selected.bid
            if self.spec.profile == "stop_signing" and plan["submitted"] < plan["billable"]:
                self.outcome.stage = "stopped_signing"
                self.outcome.status = "stopped_mid_trip"
                return
        if plan["submitted"] >= plan["billable"]:
            self.outcome.stage = "completed"
            self.outcome.status = "completed"
            self._refund_home()
            return
        interval = sim.scenario.segment_interval_s
        sim.sched.at(sim.ledger.now + interval, self.segment_tick)

    # -- recovery ------------------------------------------------------------

    def watchdog(self, tld_id: str) -> None:
        """At escrow expiration: fine, reclaim, or record abandonment."""
        sim = self.sim
        tld = sim.ledger.contracts[tld_id]
        held = tld.balance
        if tld.status == contracts.STATUS_ARMED:
            sim.submit(self.request_key, tld_id, "fine_driver", {})
            self.outcome.refunded_to_rider += held
            self.outcome.stage = "fined_driver"
            self.outcome.status = "fined_recovered"
            self._refund_home()
        elif tld.status == contracts.STATUS_AWAITING:
            sim.submit(self.request_key, tld_id, "fine_driver", {})
            self.outcome.refunded_to_rider += held
            self.outcome.stage = "escrow_expired"
            if self.spec.profile == "rigged_setup":
                self.outcome.status = "rigged_setup_refunded"
            else:
                self.outcome.status = "expired_refund"
            self._refund_home()
        elif tld.status == contracts.STATUS_CLAIMED and not self.trip_started:
            if self.outcome.status == "pending":
                self.outcome.status = "abandoned_after_claim"
            self._refund_home()

    def payment_watchdog(self) -> None:
        sim = self.sim
        payment = sim.ledger.contracts.get(self.payment_id)
        if payment is None or payment.completed or payment.balance == 0:
            return
        refund = payment.balance
        try:
            sim.submit(self.request_key, self.payment_id, "withdraw_funds", {})
        except ContractRevert:
            return
        self.outcome.refunded_to_rider += refund
        if self.outcome.status in ("pending", "riding"):
            self.outcome.status = "payment_refunded"
        self._refund_home()

    def _refund_home(self) -> None:
        """Sweep whatever is left on the one-request address back home."""
        balance = self.sim.ledger.balance(self.request_address)
        if balance > 0:
            self.sim.submit(self.request_key, "", "transfer", {"to": self.home_address}, value=balance)


@dataclass
class SimulationTrace:
    scenario_digest: str
    seed: int
    curve_profile: str
    genesis: dict[str, int]
    address_labels: dict[str, str]
    events: list
    final_balances: dict[str, int]
    reputation: dict[str, dict]
    outcomes: list[dict]
    stats: dict
    timings: dict
    ledger: Ledger = field(repr=False, default=None)


class Simulation:
    """Wires a scenario into agents, genesis and contracts, then runs it."""

    def __init__(self, scenario: Scenario, seed: Optional[int] = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.ctx = PairingContext.from_profile(scenario.curve_profile)
        self.sched = Scheduler()
        self.address_labels: dict[str, str] = {}

        self.ra_rng = _agent_rng(self.seed, "registration-authority")
        self.ra_key = KeyPair.generate(self.ctx, self.ra_rng)
        self.system_key = KeyPair.generate(self.ctx, self.ra_rng)
        self.system_address = derive_address(self.system_key.public)
        self.address_labels[self.system_address] = "system"

        self.riders = [RiderAgent(self, spec) for spec in scenario.riders]
        self.drivers = [DriverAgent(self, spec) for spec in scenario.drivers]
        self.provers = [LocationProverAgent(self, spec) for spec in scenario.location_provers]
        for driver in self.drivers:
            driver.certificate = issue_certificate(
                self.ctx, self.ra_key, driver.spec.id, driver.key.public, self.ra_rng
            )

        genesis = {self.system_address: scenario.system_balance}
        for rider in self.riders:
            genesis[rider.home_address] = rider.spec.balance
            self.address_labels[rider.home_address] = rider.spec.id
        for driver in self.drivers:
            genesis[driver.address] = driver.spec.balance
            self.address_labels[driver.address] = driver.spec.id
        self.genesis = genesis
        self.ledger = Ledger(self.ctx, genesis, start_time=scenario.start_time)

        self.registry_id = self.submit(
            self.system_key,
            "",
            "registry",
            {
                "threshold": scenario.reputation_threshold,
                "bond_required": scenario.new_driver_bond,
                "grace_period_s": scenario.reputation_grace_s,
            },
        )
        self.board_id = self.submit(self.system_key, "", "ride_board", {})
        for prover in self.provers:
            self.submit(
                self.system_key,
                self.registry_id,
                "register_lp",
                {"public_key": prover.key.public.encode().hex()},
            )
        for driver in self.drivers:
            self.submit(
                driver.key, self.registry_id, "register_driver", {}, value=scenario.new_driver_bond
            )

    # -- plumbing -----------------------------------------------------------

    def submit(self, key: KeyPair, target: str, method: str, args: dict, value: int = 0):
        tx = make_transaction(self.ctx, key, target, method, args, value, self.ra_rng)
        return self.ledger.submit(tx)

    def board(self) -> contracts.RideBoard:
        return self.ledger.contracts[self.board_id]

    def registry(self) -> contracts.Registry:
        return self.ledger.contracts[self.registry_id]

    # -- run ------------------------------------------------------------------

    def run(self) -> SimulationTrace:
        zksm.METRICS.reset()
        wall_start = _time.perf_counter()
        for rider in self.riders:
            self.sched.at(rider.spec.request_time, rider.publish_request)
        self.sched.run(self.ledger)

        # settle reputation once every grace deadline has passed
        latest = max(
            (p["deadline"] for p in self.registry().pendings), default=self.ledger.now
        )
        if latest >= self.ledger.now:
            self.ledger.advance_time(latest - self.ledger.now + 1)
        self.submit(self.system_key, self.registry_id, "settle", {})
        self.sched.run(self.ledger)
        # slash compensation lands on one-request addresses; sweep it home
        for rider in self.riders:
            if rider.request_key is not None:
                rider._refund_home()

        metrics = zksm.METRICS
        reputation = {}
        for driver in self.drivers:
            score = contracts.reputation_score(self.registry(), driver.address)
            reputation[driver.spec.id] = {
                "address": driver.address,
                "arrivals": score.arrivals,
                "completions": score.completions,
                "ratio": f"{score.ratio.numerator}/{score.ratio.denominator}",
                "classification": score.classification,
                "new_driver": score.new_driver,
                "bond": score.bond,
            }
        stats = {
            "proofs_generated": metrics.prove_calls,
            "proofs_verified": metrics.verify_calls,
            "setups": metrics.setup_calls,
            "audits": metrics.audit_calls,
            "proof_size_bytes": metrics.proof_bytes,
            "events": len(self.ledger.events),
        }
        timings = {
            "wall_seconds": _time.perf_counter() - wall_start,
            "mean_setup_ms": _mean_ms(metrics.setup_seconds, metrics.setup_calls),
            "mean_audit_ms": _mean_ms(metrics.audit_seconds, metrics.audit_calls),
            "mean_prove_ms": _mean_ms(metrics.prove_seconds, metrics.prove_calls),
            "mean_verify_ms": _mean_ms(
                metrics.verify_seconds, metrics.verify_calls - metrics.verify_cache_hits
            ),
        }
        return SimulationTrace(
            scenario_digest=self.scenario.digest,
            seed=self.seed,
            curve_profile=self.scenario.curve_profile,
            genesis=dict(sorted(self.genesis.items())),
            address_labels=dict(sorted(self.address_labels.items())),
            events=list(self.ledger.events),
            final_balances=dict(sorted(self.ledger.balances.items())),
            reputation=reputation,
            outcomes=[r.outcome.to_record() for r in self.riders],
            stats=stats,
            timings=timings,
            ledger=self.ledger,
        )


def _mean_ms(total_seconds: float, calls: int) -> Optional[float]:
    if calls == 0:
        return None
    return round(total_seconds / calls * 1000.0, 3)


def run_scenario(scenario: Scenario, seed: Optional[int] = None) -> SimulationTrace:
    """Execute a scenario deterministically and return the full trace."""
    for rider in scenario.riders:
        if rider.profile not in RIDER_PROFILES:
            raise ScenarioError(f"unknown rider profile {rider.profile!r}")
    for driver in scenario.drivers:
        if driver.profile not in DRIVER_PROFILES:
            raise ScenarioError(f"unknown driver profile {driver.profile!r}")
    return Simulation(scenario, seed).run()


def mutual_authenticate(ctx, challenger_rng, respond, expected_public) -> bool:
    """Standalone challenge-response used by the driver at pick-up.

    ``respond`` maps a nonce to a signature; raises ImpersonationDetected
    when the response does not verify under the expected request key.
    """
    nonce = ctx.random_scalar(challenger_rng)
    signature = respond(nonce)
    message = b"auth|" + ctx.scalar_to_bytes(nonce)
    if not verify_message(ctx, expected_public, message, signature):
        raise ImpersonationDetected("challenge response failed")
    return True
