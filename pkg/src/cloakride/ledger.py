"""Deterministic in-process ledger.

Stands in for the public blockchain of the deployment target: trusted
for execution correctness and availability, but everything stored here
is readable by anyone, so contracts must never receive plaintext trip
data.  Consensus, gas and networking are out of scope; a single
serialized transaction sequence drives all state transitions, and block
time only moves through explicit ``advance_time`` calls.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from typing import Optional

from .crypto.pairing import G1Element, PairingContext
from .crypto.schemes import AttestationSignature, KeyPair, sign_message, verify_message
from .errors import BadSignature, ContractRevert, InsufficientFunds

Address = str


def derive_address(public: G1Element) -> Address:
    """Address = truncated digest of the canonical public-key encoding."""
    return hashlib.sha256(b"addr|" + public.encode()).hexdigest()[:40]


@dataclass(frozen=True)
class Event:
    time: int
    contract: str
    name: str
    payload: dict

    def to_record(self) -> dict:
        return {
            "time": self.time,
            "contract": self.contract,
            "event": self.name,
            "payload": self.payload,
        }


@dataclass
class Transaction:
    """A signed call: plain transfer, contract deployment, or method call.

    ``target`` is a contract id; an empty target means a built-in
    (transfer or deploy, selected by ``method``).  Args must already be
    JSON-compatible — crypto objects travel as hex strings.
    """

    sender: Address
    public: G1Element
    target: str
    method: str
    args: dict
    value: int = 0
    signature: Optional[AttestationSignature] = None

    def signing_bytes(self) -> bytes:
        body = {
            "sender": self.sender,
            "target": self.target,
            "method": self.method,
            "args": self.args,
            "value": self.value,
        }
        return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


def make_transaction(
    ctx: PairingContext,
    key: KeyPair,
    target: str,
    method: str,
    args: dict,
    value: int = 0,
    rng=None,
) -> Transaction:
    tx = Transaction(derive_address(key.public), key.public, target, method, dict(args), value)
    tx.signature = sign_message(ctx, key, tx.signing_bytes(), rng)
    return tx


class Contract:
    """Base class for hosted contract state machines.

    Subclasses declare ``kind`` and the externally callable ``methods``;
    anything else is reachable only from other contracts inside one
    transaction.  ``state_dict`` must be deterministic and JSON-able.
    """

    kind = "abstract"
    methods: frozenset = frozenset()

    def __init__(self, contract_id: str):
        self.id = contract_id
        self.balance = 0

    def create(self, api: "LedgerApi", sender: Address, value: int, args: dict) -> None:
        raise NotImplementedError

    def call(self, api: "LedgerApi", sender: Address, value: int, method: str, args: dict):
        if method not in self.methods:
            raise ContractRevert(f"{self.kind} has no callable method {method!r}")
        return getattr(self, method)(api, sender, value, args)

    def state_dict(self) -> dict:
        raise NotImplementedError


_KINDS: dict[str, type] = {}


def register_kind(cls: type) -> type:
    """Class decorator: make a Contract subclass deployable by kind name."""
    _KINDS[cls.kind] = cls
    return cls


class LedgerApi:
    """Restricted view a contract gets during one transaction."""

    def __init__(self, ledger: "Ledger", contract: Contract):
        self._ledger = ledger
        self._contract = contract

    @property
    def now(self) -> int:
        return self._ledger.now

    @property
    def ctx(self) -> PairingContext:
        return self._ledger.ctx

    @property
    def contract_id(self) -> str:
        return self._contract.id

    def emit(self, name: str, payload: dict) -> None:
        self._ledger._emit(self._contract.id, name, payload)

    def pay(self, to: Address, amount: int) -> None:
        """Move funds out of this contract's balance."""
        if amount < 0:
            raise ContractRevert("negative payment")
        if amount > self._contract.balance:
            raise ContractRevert("contract balance too low")
        self._contract.balance -= amount
        self._ledger.balances[to] = self._ledger.balances.get(to, 0) + amount

    def contract(self, contract_id: str) -> Contract:
        try:
            return self._ledger.contracts[contract_id]
        except KeyError:
            raise ContractRevert(f"no contract {contract_id!r}") from None

    def api_for(self, contract: Contract) -> "LedgerApi":
        """Api bound to another contract, for same-transaction calls."""
        return LedgerApi(self._ledger, contract)


class Ledger:
    """Accounts, block time, hosted contracts, and the event log."""

    def __init__(self, ctx: PairingContext, genesis_balances: dict[Address, int], start_time: int = 0):
        if any(v < 0 for v in genesis_balances.values()):
            raise ValueError("genesis balances must be non-negative")
        self.ctx = ctx
        self.balances: dict[Address, int] = dict(genesis_balances)
        self.now = start_time
        self.contracts: dict[str, Contract] = {}
        self.events: list[Event] = []
        self.genesis_supply = sum(genesis_balances.values())
        self._kind_counters: dict[str, int] = {}

    # -- time ------------------------------------------------------------

    def advance_time(self, dt: int) -> None:
        if dt < 0:
            raise ValueError("time cannot move backward")
        self.now += dt

    # -- reading -----------------------------------------------------------

    def balance(self, addr: Address) -> int:
        return self.balances.get(addr, 0)

    def total_holdings(self) -> int:
        return sum(self.balances.values()) + sum(c.balance for c in self.contracts.values())

    def serialize(self) -> str:
        """Canonical JSON snapshot; identical histories give identical bytes."""
        state = {
            "now": self.now,
            "balances": dict(sorted(self.balances.items())),
            "contracts": {cid: c.state_dict() for cid, c in sorted(self.contracts.items())},
            "events": [e.to_record() for e in self.events],
        }
        return json.dumps(state, sort_keys=True, separators=(",", ":"))

    # -- transactions ------------------------------------------------------

    def submit(self, tx: Transaction):
        """Apply one transaction atomically.

        Raises BadSignature / InsufficientFunds / ContractRevert with the
        ledger left bit-identical to before the call.
        """
        if tx.signature is None or derive_address(tx.public) != tx.sender:
            raise BadSignature("sender address does not match the signing key")
        if not verify_message(self.ctx, tx.public, tx.signing_bytes(), tx.signature):
            raise BadSignature("invalid transaction signature")
        if tx.value < 0:
            raise ContractRevert("negative value")
        if self.balances.get(tx.sender, 0) < tx.value:
            raise InsufficientFunds(f"{tx.sender} cannot attach {tx.value}")

        snapshot = (
            dict(self.balances),
            copy.deepcopy(self.contracts),
            len(self.events),
            dict(self._kind_counters),
        )
        try:
            return self._apply(tx)
        except ContractRevert:
            self.balances, self.contracts, nevents, self._kind_counters = (
                snapshot[0],
                snapshot[1],
                snapshot[2],
                snapshot[3],
            )
            del self.events[nevents:]
            raise

    def _apply(self, tx: Transaction):
        self.balances[tx.sender] = self.balances.get(tx.sender, 0) - tx.value
        if tx.target == "":
            if tx.method == "transfer":
                return self._builtin_transfer(tx)
            return self._deploy(tx)
        contract = self.contracts.get(tx.target)
        if contract is None:
            raise ContractRevert(f"no contract {tx.target!r}")
        contract.balance += tx.value
        return contract.call(LedgerApi(self, contract), tx.sender, tx.value, tx.method, tx.args)

    def _builtin_transfer(self, tx: Transaction) -> None:
        to = tx.args.get("to")
        if not isinstance(to, str) or not to:
            raise ContractRevert("transfer needs a recipient")
        self.balances[to] = self.balances.get(to, 0) + tx.value
        self._emit("", "Transfer", {"from": tx.sender, "to": to, "amount": tx.value})

    def _deploy(self, tx: Transaction) -> str:
        cls = _KINDS.get(tx.method)
        if cls is None:
            raise ContractRevert(f"unknown contract kind {tx.method!r}")
        seq = self._kind_counters.get(cls.kind, 0)
        self._kind_counters[cls.kind] = seq + 1
        contract = cls(f"{cls.kind}-{seq}")
        contract.balance = tx.value
        self.contracts[contract.id] = contract
        contract.create(LedgerApi(self, contract), tx.sender, tx.value, tx.args)
        self._emit(contract.id, "Deployed", {"kind": cls.kind, "sender": tx.sender, "value": tx.value})
        return contract.id

    def _emit(self, contract_id: str, name: str, payload: dict) -> None:
        self.events.append(Event(self.now, contract_id, name, dict(payload)))
