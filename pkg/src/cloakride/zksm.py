"""Zero-knowledge set membership: setup, attestation, proving, verifying.

The rider publishes a set of location encodings with a short signature
on each element; the driver proves that a Pedersen-committed location
lies in the set without revealing which element it is.  The interactive
sigma protocol is made non-interactive by hashing the transcript into
the challenge, so proofs are single messages a contract can check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

from .crypto.pairing import G1Element, GTElement, PairingContext
from .crypto.schemes import (
    AttestationSignature,
    KeyPair,
    att_sign,
    att_verify,
    pedersen_commit,
    set_sign,
    set_verify,
    sign_message,
    verify_message,
)
from .errors import (
    DegenerateElement,
    DuplicateElement,
    ElementNotInSet,
    EncodingError,
    OutOfCoverage,
    SetTooSmall,
    SignatureMismatch,
)


@dataclass
class ProtocolMetrics:
    """Counters and wall times for the off-ledger operations (resettable)."""

    setup_calls: int = 0
    setup_seconds: float = 0.0
    audit_calls: int = 0
    audit_seconds: float = 0.0
    prove_calls: int = 0
    prove_seconds: float = 0.0
    verify_calls: int = 0
    verify_seconds: float = 0.0
    verify_cache_hits: int = 0
    proof_bytes: int = 0

    def reset(self) -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, 0 if name.endswith(("calls", "hits", "bytes")) else 0.0)


METRICS = ProtocolMetrics()


@dataclass(frozen=True)
class ZkSetup:
    """Public artefacts of the set setup; the issuing secret is discarded."""

    elements: tuple[int, ...]
    public_key: G1Element  # y = g^x
    signatures: tuple[G1Element, ...]  # one g^{1/(x+element)} per element

    @property
    def k(self) -> int:
        return len(self.elements)

    def signature_for(self, element: int) -> G1Element:
        try:
            return self.signatures[self.elements.index(element)]
        except ValueError:
            raise ElementNotInSet(f"element {element} not in the published set") from None


@dataclass(frozen=True)
class AttestationRequest:
    """What the driver hands the location prover: C || element || sig."""

    commitment: G1Element
    element: int
    signature: AttestationSignature  # by the commitment randomness, base h


@dataclass(frozen=True)
class LPAttestation:
    """The location prover's countersignature on the commitment."""

    commitment: G1Element
    prover_public: G1Element
    signature: AttestationSignature

    def encode(self, ctx: PairingContext) -> bytes:
        return self.commitment.encode() + self.prover_public.encode() + self.signature.encode(ctx)

    @classmethod
    def decode(cls, ctx: PairingContext, data: bytes) -> "LPAttestation":
        g1 = ctx.params.g1_bytes
        if len(data) != 2 * g1 + 2 * ctx.params.scalar_bytes:
            raise EncodingError("bad attestation length")
        return cls(
            ctx.decode_g1(data[:g1]),
            ctx.decode_g1(data[g1 : 2 * g1]),
            AttestationSignature.decode(ctx, data[2 * g1 :]),
        )


@dataclass(frozen=True)
class MembershipProof:
    """Non-interactive membership proof, fixed serialization order."""

    commitment: G1Element  # C, Pedersen commitment to the location
    blinded_sig: G1Element  # V, randomized set signature
    challenge: int  # c
    gt_commit: GTElement  # a, first message in GT
    mask_commit: G1Element  # Q, first message masking the commitment
    resp_value: int  # response for the committed element
    resp_blind: int  # response for the signature blinding exponent
    resp_rand: int  # response for the commitment randomness

    def to_bytes(self, ctx: PairingContext) -> bytes:
        return b"".join(
            (
                self.commitment.encode(),
                self.blinded_sig.encode(),
                ctx.scalar_to_bytes(self.challenge),
                self.gt_commit.encode(),
                self.mask_commit.encode(),
                ctx.scalar_to_bytes(self.resp_value),
                ctx.scalar_to_bytes(self.resp_blind),
                ctx.scalar_to_bytes(self.resp_rand),
            )
        )

    @classmethod
    def from_bytes(cls, ctx: PairingContext, data: bytes) -> "MembershipProof":
        g1, gt, sc = ctx.params.g1_bytes, ctx.params.gt_bytes, ctx.params.scalar_bytes
        if len(data) != 2 * g1 + sc + gt + g1 + 3 * sc:
            raise EncodingError("bad proof length")
        pos = 0

        def take(n):
            nonlocal pos
            out = data[pos : pos + n]
            pos += n
            return out

        return cls(
            commitment=ctx.decode_g1(take(g1)),
            blinded_sig=ctx.decode_g1(take(g1)),
            challenge=ctx.scalar_from_bytes(take(sc)),
            gt_commit=ctx.decode_gt(take(gt)),
            mask_commit=ctx.decode_g1(take(g1)),
            resp_value=ctx.scalar_from_bytes(take(sc)),
            resp_blind=ctx.scalar_from_bytes(take(sc)),
            resp_rand=ctx.scalar_from_bytes(take(sc)),
        )


@dataclass(frozen=True)
class ProverTranscript:
    """Ephemeral prover randomness, exposed for algebraic tests only."""

    blinding: int  # v
    mask_value: int  # s
    mask_blind: int  # t
    mask_rand: int  # m
    element: int
    randomness: int  # the commitment opening


def setup(ctx: PairingContext, elements, rng=None) -> ZkSetup:
    """Sign every set element under a fresh secret; publish (set, y, sigs).

    The secret is resampled if it collides with any element and dropped
    before returning: nothing later in the protocol needs it.
    """
    t0 = time.perf_counter()
    elements = tuple(int(e) % ctx.p for e in elements)
    if len(elements) < 2:
        raise SetTooSmall("membership set needs at least 2 elements")
    if len(set(elements)) != len(elements):
        raise DuplicateElement("set elements must be pairwise distinct")
    while True:
        x = ctx.random_scalar(rng)
        try:
            signatures = tuple(set_sign(ctx, x, e) for e in elements)
            break
        except DegenerateElement:
            continue
    result = ZkSetup(elements, ctx.g ** x, signatures)
    METRICS.setup_calls += 1
    METRICS.setup_seconds += time.perf_counter() - t0
    return result


def audit(ctx: PairingContext, zk_setup: ZkSetup) -> bool:
    """Driver-side check that every published signature actually verifies.

    Protects the driver against a rigged setup that would make his
    arrival proof unverifiable.
    """
    t0 = time.perf_counter()
    ok = (
        len(zk_setup.elements) == len(zk_setup.signatures)
        and len(set(zk_setup.elements)) == len(zk_setup.elements)
        and all(
            set_verify(ctx, zk_setup.public_key, e, sig)
            for e, sig in zip(zk_setup.elements, zk_setup.signatures)
        )
    )
    METRICS.audit_calls += 1
    METRICS.audit_seconds += time.perf_counter() - t0
    return ok


def commit_location(ctx: PairingContext, element: int, rng=None):
    """Commit to the claimed pick-up encoding with fresh randomness.

    Returns (commitment, randomness, attestation request).  The request
    carries a signature by the randomness itself (base h), which lets
    the location prover check the commitment opens to the element.
    """
    randomness = ctx.random_scalar(rng)
    commitment = pedersen_commit(ctx, element, randomness)
    sig = att_sign(ctx, randomness, ctx.h, ctx.scalar_to_bytes(element), rng)
    return commitment, randomness, AttestationRequest(commitment, element % ctx.p, sig)


def lp_attest(
    ctx: PairingContext,
    prover_key: KeyPair,
    request: AttestationRequest,
    claimed_position,
    coverage,
    rng=None,
) -> LPAttestation:
    """Location-prover side: verify and countersign a commitment.

    Checks that C * g^{-element} = h^iota is the key that signed the
    element (so C really commits to it) and that the claimed position
    lies inside this prover's coverage region (the simulated stand-in
    for a physical presence check).
    """
    residual = request.commitment * ctx.g ** (-request.element)
    if not att_verify(ctx, residual, ctx.h, ctx.scalar_to_bytes(request.element), request.signature):
        raise SignatureMismatch("commitment does not open to the claimed element")
    if not coverage.contains(claimed_position):
        raise OutOfCoverage("claimed position outside the prover's region")
    sig = sign_message(ctx, prover_key, b"lp|" + request.commitment.encode(), rng)
    return LPAttestation(request.commitment, prover_key.public, sig)


def verify_attestation(ctx: PairingContext, attestation: LPAttestation) -> bool:
    """Check the countersignature against the prover key it names."""
    return verify_message(
        ctx,
        attestation.prover_public,
        b"lp|" + attestation.commitment.encode(),
        attestation.signature,
    )


def _challenge(ctx, blinded_sig, gt_commit, mask_commit) -> int:
    return ctx.hash_to_scalar(blinded_sig.encode() + gt_commit.encode() + mask_commit.encode())


def prove(
    ctx: PairingContext,
    zk_setup: ZkSetup,
    element: int,
    randomness: int,
    commitment: G1Element,
    rng=None,
) -> MembershipProof:
    proof, _ = prove_with_transcript(ctx, zk_setup, element, randomness, commitment, rng)
    return proof


def prove_with_transcript(
    ctx: PairingContext,
    zk_setup: ZkSetup,
    element: int,
    randomness: int,
    commitment: G1Element,
    rng=None,
):
    """Produce a membership proof plus the transcript (for tests).

    V = A^v blinds which signature was used; the three responses tie the
    committed element, the blinding exponent and the commitment
    randomness to one hash challenge.
    """
    t0 = time.perf_counter()
    element = int(element) % ctx.p
    sig = zk_setup.signature_for(element)
    v = ctx.random_scalar(rng)
    s = ctx.random_scalar(rng)
    t = ctx.random_scalar(rng)
    m = ctx.random_scalar(rng)
    blinded_sig = sig ** v
    gt_commit = ctx.pair(blinded_sig, ctx.g) ** (-s) * ctx.e_gg ** t
    mask_commit = ctx.g ** s * ctx.h ** m
    c = _challenge(ctx, blinded_sig, gt_commit, mask_commit)
    proof = MembershipProof(
        commitment=commitment,
        blinded_sig=blinded_sig,
        challenge=c,
        gt_commit=gt_commit,
        mask_commit=mask_commit,
        resp_value=(s - element * c) % ctx.p,
        resp_blind=(t - v * c) % ctx.p,
        resp_rand=(m - randomness * c) % ctx.p,
    )
    transcript = ProverTranscript(v, s, t, m, element, randomness)
    METRICS.prove_calls += 1
    METRICS.prove_seconds += time.perf_counter() - t0
    METRICS.proof_bytes = len(proof.to_bytes(ctx))
    return proof, transcript


def verify(ctx: PairingContext, y: G1Element, proof: MembershipProof) -> bool:
    """Contract-side verification from public values only.

    Accepts iff the challenge recomputes from (V, a, Q) and both check
    equations hold:

        Q == C^c * h^{z_iota} * g^{z_ell}
        a == e(V, y)^c * e(V, g)^{-z_ell} * e(g, g)^{z_v}

    Verification is a pure function of (y, proof), so results are
    memoized on the canonical encodings; repeated checks of one proof
    (replays, state-space exploration) cost a cache lookup.
    """
    METRICS.verify_calls += 1
    before = _verify_bytes.cache_info().hits
    result = _verify_bytes(ctx, y.encode(), proof.to_bytes(ctx))
    if _verify_bytes.cache_info().hits > before:
        METRICS.verify_cache_hits += 1
    return result


def verify_bytes(ctx: PairingContext, y_bytes: bytes, proof_bytes: bytes) -> bool:
    """Wire-level verification; malformed encodings simply fail."""
    METRICS.verify_calls += 1
    return _verify_bytes(ctx, bytes(y_bytes), bytes(proof_bytes))


@lru_cache(maxsize=512)
def _verify_bytes(ctx: PairingContext, y_bytes: bytes, proof_bytes: bytes) -> bool:
    try:
        y = ctx.decode_g1(y_bytes)
        proof = MembershipProof.from_bytes(ctx, proof_bytes)
    except EncodingError:
        return False
    t0 = time.perf_counter()
    try:
        if proof.challenge != _challenge(ctx, proof.blinded_sig, proof.gt_commit, proof.mask_commit):
            return False
        c = proof.challenge
        lhs_mask = proof.commitment ** c * ctx.h ** proof.resp_rand * ctx.g ** proof.resp_value
        if lhs_mask != proof.mask_commit:
            return False
        rhs = (
            ctx.pair(proof.blinded_sig, y) ** c
            * ctx.pair(proof.blinded_sig, ctx.g) ** (-proof.resp_value)
            * ctx.e_gg ** proof.resp_blind
        )
        return rhs == proof.gt_commit
    finally:
        METRICS.verify_seconds += time.perf_counter() - t0
