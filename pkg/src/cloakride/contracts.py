"""Hosted contract state machines.

Four kinds live on the ledger:

* ``Registry`` — driver reputation counters, new-driver bonds with
  pro-rata slashing, and the set of accepted location-prover keys.
* ``RideBoard`` — published ride requests and the sealed offers bid on
  them.
* ``TimeLockedDeposit`` — the claim-or-fine escrow gated by a
  zero-knowledge arrival proof.
* ``RidePayment`` — pay-as-you-drive escrow releasing fare per mutually
  signed distance segment.

Every guard from the protocol pseudocode is a reverting precondition:
a failed call leaves the ledger untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import zksm
from .crypto.schemes import AttestationSignature, verify_message
from .errors import ContractRevert, EncodingError
from .ledger import Address, Contract, LedgerApi, register_kind

STATUS_AWAITING = "awaiting_driver_deposit"
STATUS_ARMED = "armed"
STATUS_CLAIMED = "claimed"
STATUS_FINED = "fined"
STATUS_EXPIRED = "expired"


def _require(condition: bool, reason: str) -> None:
    if not condition:
        raise ContractRevert(reason)


def _int_arg(args: dict, name: str, minimum=None) -> int:
    value = args.get(name)
    _require(isinstance(value, int) and not isinstance(value, bool), f"{name} must be an integer")
    if minimum is not None:
        _require(value >= minimum, f"{name} must be >= {minimum}")
    return value


def _str_arg(args: dict, name: str) -> str:
    value = args.get(name)
    _require(isinstance(value, str) and value != "", f"{name} must be a non-empty string")
    return value


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReputationScore:
    """Read-model of one driver's standing."""

    arrivals: int  # accepted arrival proofs
    completions: int  # completed trips
    ratio: Fraction  # completions / arrivals, 1 for a blank history
    classification: str  # honest | suspect | dishonest
    new_driver: bool
    bond: int


@register_kind
class Registry(Contract):
    """Reputation counters, LP key registry, and bonded new drivers.

    A pending entry is opened whenever a driver claims an arrival and
    closed when the matching trip completes.  ``settle`` turns stale
    pendings into fraud evidence and, once a driver classifies as
    dishonest, slashes his bond pro-rata to the riders whose deposits
    he collected.
    """

    kind = "registry"
    methods = frozenset({"register_driver", "register_lp", "settle"})

    def create(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(value == 0, "registry holds only driver bonds")
        threshold = args.get("threshold", "1/2")
        try:
            frac = Fraction(str(threshold))
        except (ValueError, ZeroDivisionError):
            raise ContractRevert("bad reputation threshold") from None
        _require(0 < frac < 1, "threshold must be strictly between 0 and 1")
        self.operator = sender
        self.threshold = (frac.numerator, frac.denominator)
        self.bond_required = _int_arg(args, "bond_required", 0) if "bond_required" in args else 0
        self.grace_period = _int_arg(args, "grace_period_s", 0) if "grace_period_s" in args else 3600
        self.scores: dict[str, list[int]] = {}
        self.bonds: dict[str, int] = {}
        self.lp_keys: list[str] = []
        self.pendings: list[dict] = []

    # -- externally callable -------------------------------------------

    def register_driver(self, api: LedgerApi, sender: Address, value: int, args: dict):
        _require(sender not in self.scores, "driver already registered")
        _require(value == self.bond_required, f"bond of {self.bond_required} required")
        self.scores[sender] = [0, 0]
        self.bonds[sender] = value
        api.emit("ReputationUpdated", {"driver": sender, "action": "registered", "bond": value})

    def register_lp(self, api: LedgerApi, sender: Address, value: int, args: dict):
        _require(sender == self.operator, "only the operator registers provers")
        _require(value == 0, "no value expected")
        key = _str_arg(args, "public_key")
        _require(key not in self.lp_keys, "prover already registered")
        self.lp_keys.append(key)

    def settle(self, api: LedgerApi, sender: Address, value: int, args: dict):
        """Evaluate stale pendings and slash dishonest drivers' bonds."""
        _require(value == 0, "no value expected")
        slashed = []
        for driver in sorted(self.scores):
            victims = [
                p
                for p in self.pendings
                if p["driver"] == driver
                and not p["completed"]
                and not p["engaged"]
                and not p["compensated"]
                and api.now >= p["deadline"]
            ]
            if not victims:
                continue
            score = self.score_of(driver)
            bond = self.bonds.get(driver, 0)
            if score.classification != "dishonest" or bond == 0:
                continue
            total_lost = sum(p["amount"] for p in victims)
            paid = 0
            payments = []
            for p in victims:
                # pro-rata by lost deposit, never more than was actually lost
                share = min(bond * p["amount"] // total_lost, p["amount"])
                if share:
                    api.pay(p["rider"], share)
                    paid += share
                    payments.append([p["rider"], share])
                p["compensated"] = True
            self.bonds[driver] = bond - paid
            slashed.append(driver)
            api.emit(
                "ReputationUpdated",
                {"driver": driver, "action": "slashed", "amount": paid, "payments": payments},
            )
        return slashed

    # -- same-transaction hooks for the escrow contracts ----------------

    def record_arrival(self, api: LedgerApi, driver: Address, rider: Address, amount: int, deadline: int):
        score = self.scores.setdefault(driver, [0, 0])
        score[0] += 1
        self.pendings.append(
            {
                "driver": driver,
                "rider": rider,
                "amount": amount,
                "deadline": deadline,
                "completed": False,
                "engaged": False,
                "compensated": False,
            }
        )
        api.emit(
            "ReputationUpdated",
            {"driver": driver, "action": "arrival", "arrivals": score[0], "completions": score[1]},
        )

    def record_engaged(self, api: LedgerApi, driver: Address, rider: Address) -> None:
        """A co-signed segment proves the ride actually started.

        Engaged-but-incomplete trips still drag the ratio down, but they
        are no longer treated as deposit fraud when slashing.
        """
        for p in self.pendings:
            if p["driver"] == driver and p["rider"] == rider and not p["completed"]:
                p["engaged"] = True

    def record_completion(self, api: LedgerApi, driver: Address, rider: Address) -> bool:
        for p in self.pendings:
            if p["driver"] == driver and p["rider"] == rider and not p["completed"]:
                p["completed"] = True
                score = self.scores.setdefault(driver, [0, 0])
                score[1] += 1
                api.emit(
                    "ReputationUpdated",
                    {
                        "driver": driver,
                        "action": "completion",
                        "arrivals": score[0],
                        "completions": score[1],
                    },
                )
                return True
        return False

    # -- reads ------------------------------------------------------------

    def score_of(self, driver: Address) -> ReputationScore:
        arrivals, completions = self.scores.get(driver, [0, 0])
        threshold = Fraction(*self.threshold)
        if arrivals == 0:
            ratio = Fraction(1)
        else:
            ratio = Fraction(completions, arrivals)
        if ratio == 1:
            label = "honest"
        elif ratio <= threshold:
            label = "dishonest"
        else:
            label = "suspect"
        return ReputationScore(
            arrivals=arrivals,
            completions=completions,
            ratio=ratio,
            classification=label,
            new_driver=arrivals == 0 and completions == 0,
            bond=self.bonds.get(driver, 0),
        )

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "balance": self.balance,
            "operator": self.operator,
            "threshold": list(self.threshold),
            "bond_required": self.bond_required,
            "grace_period": self.grace_period,
            "scores": {k: list(v) for k, v in sorted(self.scores.items())},
            "bonds": dict(sorted(self.bonds.items())),
            "lp_keys": list(self.lp_keys),
            "pendings": self.pendings,
        }


def reputation_score(registry: Registry, driver: Address) -> ReputationScore:
    """Reputation read used by riders during selection (Eq.-style ratio)."""
    return registry.score_of(driver)


# ---------------------------------------------------------------------------


@register_kind
class RideBoard(Contract):
    """Published ride requests and sealed driver offers."""

    kind = "ride_board"
    methods = frozenset({"make_ride_request", "make_ride_offer"})

    def create(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(value == 0, "the board holds no funds")
        self.requests: dict[str, dict] = {}
        self._seq = 0

    def make_ride_request(self, api: LedgerApi, sender: Address, value: int, args: dict) -> str:
        _require(value == 0, "requests carry no deposit")
        origin = _int_arg(args, "origin_cell", 0)
        dest = _int_arg(args, "dest_cell", 0)
        window_start = _int_arg(args, "window_start", 0)
        window_end = _int_arg(args, "window_end")
        _require(window_start < window_end, "empty pick-up window")
        deadline = _int_arg(args, "deadline")
        _require(deadline > api.now, "offer deadline already passed")
        max_offers = None
        if args.get("max_offers") is not None:
            max_offers = _int_arg(args, "max_offers", 1)
        public_key = _str_arg(args, "public_key")
        request_id = f"req-{self._seq}"
        self._seq += 1
        self.requests[request_id] = {
            "rider": sender,
            "public_key": public_key,
            "origin_cell": origin,
            "window_start": window_start,
            "window_end": window_end,
            "dest_cell": dest,
            "deadline": deadline,
            "max_offers": max_offers,
            "offers": [],
        }
        api.emit(
            "RequestPublished",
            {
                "request": request_id,
                "rider": sender,
                "origin_cell": origin,
                "window_start": window_start,
                "window_end": window_end,
                "dest_cell": dest,
                "deadline": deadline,
            },
        )
        return request_id

    def make_ride_offer(self, api: LedgerApi, sender: Address, value: int, args: dict) -> int:
        _require(value == 0, "offers carry no deposit")
        request_id = _str_arg(args, "request")
        request = self.requests.get(request_id)
        _require(request is not None, f"unknown request {request_id!r}")
        _require(api.now <= request["deadline"], "offer deadline passed")
        cap = request["max_offers"]
        _require(cap is None or len(request["offers"]) < cap, "offer cap reached")
        bid = _int_arg(args, "bid", 0)
        ciphertext = _str_arg(args, "ciphertext")
        index = len(request["offers"])
        request["offers"].append({"driver": sender, "ciphertext": ciphertext, "bid": bid})
        api.emit(
            "OfferSubmitted",
            {"request": request_id, "driver": sender, "bid": bid, "index": index},
        )
        return index

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "balance": self.balance,
            "requests": {k: self.requests[k] for k in sorted(self.requests)},
        }


# ---------------------------------------------------------------------------


@register_kind
class TimeLockedDeposit(Contract):
    """Claim-or-fine escrow for one matched trip.

    The rider deploys it with her deposit plus the membership set and
    signatures; the driver arms it with his own deposit before the
    acceptance deadline, then claims the whole balance with a valid
    arrival proof inside the pick-up window.  After expiration the
    rider recovers everything instead.
    """

    kind = "time_locked_deposit"
    methods = frozenset({"driver_deposit", "proof_of_arrival", "fine_driver"})

    def create(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(value > 0, "rider deposit required")
        self.rider = sender
        self.driver = _str_arg(args, "driver")
        self.rider_deposit = value
        self.driver_deposit_required = _int_arg(args, "driver_deposit", 1)
        self.accept_deadline = _int_arg(args, "accept_deadline")
        _require(self.accept_deadline > api.now, "acceptance window already closed")
        self.pickup_start = _int_arg(args, "pickup_start", 0)
        self.pickup_end = _int_arg(args, "pickup_end")
        _require(self.pickup_start < self.pickup_end, "empty pick-up window")
        self.expiration = _int_arg(args, "expiration")
        _require(self.expiration >= self.pickup_end, "expiration inside the pick-up window")
        self.registry_id = _str_arg(args, "registry")
        elements = args.get("set_elements")
        signatures = args.get("signatures")
        _require(isinstance(elements, list) and len(elements) >= 2, "membership set too small")
        _require(
            isinstance(signatures, list) and len(signatures) == len(elements),
            "one signature per set element required",
        )
        self.set_elements = [str(e) for e in elements]
        self.signatures = [str(s) for s in signatures]
        self.public_y = _str_arg(args, "y")
        try:
            self._y = api.ctx.decode_g1(bytes.fromhex(self.public_y))
        except (EncodingError, ValueError):
            raise ContractRevert("malformed set public key") from None
        self.status = STATUS_AWAITING

    def setup_view(self, ctx) -> zksm.ZkSetup:
        """Decode the stored set artifacts (drivers audit through this)."""
        return zksm.ZkSetup(
            elements=tuple(ctx.scalar_from_bytes(bytes.fromhex(e)) for e in self.set_elements),
            public_key=ctx.decode_g1(bytes.fromhex(self.public_y)),
            signatures=tuple(ctx.decode_g1(bytes.fromhex(s)) for s in self.signatures),
        )

    def driver_deposit(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(self.status == STATUS_AWAITING, f"cannot deposit in status {self.status}")
        _require(sender == self.driver, "only the selected driver may deposit")
        _require(value == self.driver_deposit_required, "wrong deposit amount")
        _require(api.now < self.accept_deadline, "acceptance deadline passed")
        self.status = STATUS_ARMED
        api.emit("DepositArmed", {"driver": sender, "amount": value})

    def proof_of_arrival(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(value == 0, "no value expected")
        _require(sender == self.driver, "only the selected driver may claim")
        _require(self.status == STATUS_ARMED, f"cannot claim in status {self.status}")
        _require(
            self.pickup_start <= api.now < self.pickup_end,
            "proof outside the generalized pick-up window",
        )
        ctx = api.ctx
        registry = api.contract(self.registry_id)
        try:
            attestation = zksm.LPAttestation.decode(ctx, bytes.fromhex(_str_arg(args, "attestation")))
            proof_bytes = bytes.fromhex(_str_arg(args, "proof"))
            proof = zksm.MembershipProof.from_bytes(ctx, proof_bytes)
        except (EncodingError, ValueError):
            raise ContractRevert("malformed proof or attestation") from None
        _require(
            attestation.prover_public.encode().hex() in registry.lp_keys,
            "attestation not from a registered location prover",
        )
        _require(zksm.verify_attestation(ctx, attestation), "invalid location attestation")
        _require(
            attestation.commitment == proof.commitment,
            "attestation does not cover the proof commitment",
        )
        _require(zksm.verify(ctx, self._y, proof), "membership proof rejected")
        amount = self.balance
        registry.record_arrival(
            api.api_for(registry),
            self.driver,
            self.rider,
            self.rider_deposit,
            self.expiration + registry.grace_period,
        )
        api.pay(self.driver, amount)
        self.status = STATUS_CLAIMED
        # proof and attestation stay in the event log so a trace can be
        # re-verified offline without the contract state
        api.emit(
            "ArrivalClaimed",
            {
                "driver": self.driver,
                "amount": amount,
                "proof": proof_bytes.hex(),
                "attestation": args["attestation"],
                "y": self.public_y,
            },
        )

    def fine_driver(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(value == 0, "no value expected")
        _require(sender == self.rider, "only the rider may fine")
        _require(api.now >= self.expiration, "contract not yet expired")
        _require(
            self.status in (STATUS_ARMED, STATUS_AWAITING),
            f"cannot fine in status {self.status}",
        )
        amount = self.balance
        api.pay(self.rider, amount)
        if self.status == STATUS_ARMED:
            self.status = STATUS_FINED
            api.emit("DriverFined", {"driver": self.driver, "rider": self.rider, "amount": amount})
        else:
            self.status = STATUS_EXPIRED
            api.emit("Refunded", {"to": self.rider, "amount": amount})

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "balance": self.balance,
            "rider": self.rider,
            "driver": self.driver,
            "rider_deposit": self.rider_deposit,
            "driver_deposit": self.driver_deposit_required,
            "accept_deadline": self.accept_deadline,
            "pickup_start": self.pickup_start,
            "pickup_end": self.pickup_end,
            "expiration": self.expiration,
            "registry": self.registry_id,
            "set_elements": self.set_elements,
            "signatures": self.signatures,
            "y": self.public_y,
            "status": self.status,
        }


# ---------------------------------------------------------------------------


def segment_message(contract_id: str, segment_index: int, elapsed: int) -> bytes:
    """Canonical bytes both parties sign for one distance segment.

    The monotone segment index stops a signed segment from being
    replayed for a second payment.
    """
    return f"dist|{contract_id}|{segment_index}|{elapsed}".encode()


@register_kind
class RidePayment(Contract):
    """Pay-as-you-drive escrow: fare released per co-signed segment."""

    kind = "ride_payment"
    methods = frozenset({"proof_of_distance", "withdraw_funds"})

    def create(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        self.rider = sender
        self.driver = _str_arg(args, "driver")
        self.trip_distance = _int_arg(args, "distance", 1)
        self.rate = _int_arg(args, "rate", 1)
        self.expiration = _int_arg(args, "expiration")
        _require(self.expiration > api.now, "expiration already passed")
        _require(value == self.trip_distance * self.rate, "escrow must equal distance x rate")
        self.rider_key = _str_arg(args, "rider_key")
        self.driver_key = _str_arg(args, "driver_key")
        self.registry_id = _str_arg(args, "registry")
        self.remaining = self.trip_distance
        self.segment_index = 0
        self.completed = False

    def proof_of_distance(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(value == 0, "no value expected")
        _require(sender == self.rider, "only the rider submits distance proofs")
        _require(not self.completed, "trip already completed")
        _require(api.now < self.expiration, "payment window expired")
        elapsed = _int_arg(args, "elapsed", 1)
        _require(elapsed <= self.remaining, "elapsed distance exceeds the remaining trip")
        ctx = api.ctx
        message = segment_message(self.id, self.segment_index, elapsed)
        try:
            rider_key = ctx.decode_g1(bytes.fromhex(self.rider_key))
            driver_key = ctx.decode_g1(bytes.fromhex(self.driver_key))
            rider_sig = AttestationSignature.decode(ctx, bytes.fromhex(_str_arg(args, "rider_sig")))
            driver_sig = AttestationSignature.decode(ctx, bytes.fromhex(_str_arg(args, "driver_sig")))
        except (EncodingError, ValueError):
            raise ContractRevert("malformed segment signatures") from None
        _require(verify_message(ctx, rider_key, message, rider_sig), "bad rider signature")
        _require(verify_message(ctx, driver_key, message, driver_sig), "bad driver signature")
        amount = self.rate * elapsed
        api.pay(self.driver, amount)
        self.remaining -= elapsed
        segment = self.segment_index
        self.segment_index += 1
        if segment == 0:
            registry = api.contract(self.registry_id)
            registry.record_engaged(api.api_for(registry), self.driver, self.rider)
        api.emit(
            "SegmentPaid",
            {"driver": self.driver, "segment": segment, "elapsed": elapsed, "amount": amount},
        )
        if self.remaining == 0:
            self.completed = True
            registry = api.contract(self.registry_id)
            registry.record_completion(api.api_for(registry), self.driver, self.rider)
            api.emit("TripCompleted", {"driver": self.driver, "rider": self.rider})

    def withdraw_funds(self, api: LedgerApi, sender: Address, value: int, args: dict) -> None:
        _require(value == 0, "no value expected")
        _require(sender == self.rider, "only the rider may withdraw")
        _require(api.now >= self.expiration, "payment window still open")
        _require(self.balance > 0, "nothing left in escrow")
        amount = self.balance
        api.pay(self.rider, amount)
        api.emit("Refunded", {"to": self.rider, "amount": amount})

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "balance": self.balance,
            "rider": self.rider,
            "driver": self.driver,
            "distance": self.trip_distance,
            "rate": self.rate,
            "expiration": self.expiration,
            "remaining": self.remaining,
            "segment_index": self.segment_index,
            "completed": self.completed,
        }
