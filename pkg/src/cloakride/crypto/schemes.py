"""Primitive schemes over the pairing group.

Pedersen commitments, short set signatures of the form g^{1/(x+i)},
Schnorr signatures with an explicit base point, certificates, and the
hybrid encryption used for ride offers.
"""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

import hashlib
import secrets

from ..errors import DecryptionFailure, DegenerateElement, EncodingError
from .pairing import G1Element, PairingContext


def pedersen_commit(ctx: PairingContext, value: int, randomness: int) -> G1Element:
    """Commit to ``value`` with blinding ``randomness``: g^m * h^r."""
    return ctx.g ** value * ctx.h ** randomness


def set_sign(ctx: PairingContext, x: int, element: int) -> G1Element:
    """Short signature g^{1/(x+element)} on a set member.

    Raises DegenerateElement when x + element = 0 mod p; the caller must
    resample x.
    """
    exp = (x + element) % ctx.p
    if exp == 0:
        raise DegenerateElement(f"secret collides with element {element}")
    return ctx.g ** ctx.scalar_inv(exp)


def set_verify(ctx: PairingContext, y: G1Element, element: int, sig: G1Element) -> bool:
    """Check e(sig, y * g^element) == e(g, g)."""
    return ctx.pair(sig, y * ctx.g ** element) == ctx.e_gg


@dataclass(frozen=True)
class AttestationSignature:
    """Schnorr signature (challenge, response) relative to an explicit base."""

    challenge: int
    response: int

    def encode(self, ctx: PairingContext) -> bytes:
        return ctx.scalar_to_bytes(self.challenge) + ctx.scalar_to_bytes(self.response)

    @classmethod
    def decode(cls, ctx: PairingContext, data: bytes) -> "AttestationSignature":
        nb = ctx.params.scalar_bytes
        if len(data) != 2 * nb:
            raise EncodingError("bad signature length")
        return cls(ctx.scalar_from_bytes(data[:nb]), ctx.scalar_from_bytes(data[nb:]))


def _att_challenge(ctx, base, public, nonce_point, message):
    return ctx.hash_to_scalar(
        b"att|" + base.encode() + public.encode() + nonce_point.encode() + message
    )


def att_sign(
    ctx: PairingContext, secret: int, base: G1Element, message: bytes, rng=None
) -> AttestationSignature:
    """Sign ``message`` under public key base^secret."""
    public = base ** secret
    nonce = ctx.random_scalar(rng)
    challenge = _att_challenge(ctx, base, public, base ** nonce, message)
    response = (nonce + challenge * secret) % ctx.p
    return AttestationSignature(challenge, response)


def att_verify(
    ctx: PairingContext,
    public: G1Element,
    base: G1Element,
    message: bytes,
    sig: AttestationSignature,
) -> bool:
    nonce_point = base ** sig.response * public ** (-sig.challenge)
    return sig.challenge == _att_challenge(ctx, base, public, nonce_point, message)


@dataclass(frozen=True)
class KeyPair:
    """Signing/encryption keypair: public = g^secret."""

    secret: int
    public: G1Element

    @classmethod
    def generate(cls, ctx: PairingContext, rng=None) -> "KeyPair":
        secret = ctx.random_scalar(rng)
        return cls(secret, ctx.g ** secret)


def sign_message(ctx: PairingContext, key: KeyPair, message: bytes, rng=None) -> AttestationSignature:
    """Ordinary signature: Schnorr under the standard base g."""
    return att_sign(ctx, key.secret, ctx.g, message, rng)


def verify_message(
    ctx: PairingContext, public: G1Element, message: bytes, sig: AttestationSignature
) -> bool:
    return att_verify(ctx, public, ctx.g, message, sig)


@dataclass(frozen=True)
class Certificate:
    """Binds a driver public key to a driver identity string."""

    driver_id: str
    public: G1Element
    signature: AttestationSignature

    def signed_bytes(self) -> bytes:
        return b"cert|" + self.driver_id.encode() + b"|" + self.public.encode()


def issue_certificate(
    ctx: PairingContext, authority: KeyPair, driver_id: str, public: G1Element, rng=None
) -> Certificate:
    cert = Certificate(driver_id, public, AttestationSignature(0, 0))
    sig = sign_message(ctx, authority, cert.signed_bytes(), rng)
    return Certificate(driver_id, public, sig)


def verify_certificate(ctx: PairingContext, authority_public: G1Element, cert: Certificate) -> bool:
    return verify_message(ctx, authority_public, cert.signed_bytes(), cert.signature)


def offer_encrypt(ctx: PairingContext, public: G1Element, plaintext: bytes, rng=None) -> bytes:
    """Hybrid encryption: curve KEM + ChaCha20-Poly1305 payload."""
    eph = ctx.random_scalar(rng)
    eph_pub = ctx.g ** eph
    shared = public ** eph
    key = hashlib.sha256(b"kem|" + eph_pub.encode() + shared.encode()).digest()
    nonce = rng.randbytes(12) if rng is not None else secrets.token_bytes(12)
    sealed = ChaCha20Poly1305(key).encrypt(nonce, plaintext, b"")
    return eph_pub.encode() + nonce + sealed


def offer_decrypt(ctx: PairingContext, secret: int, ciphertext: bytes) -> bytes:
    nb = ctx.params.g1_bytes
    if len(ciphertext) < nb + 12 + 16:
        raise DecryptionFailure("ciphertext too short")
    try:
        eph_pub = ctx.decode_g1(ciphertext[:nb])
    except EncodingError as exc:
        raise DecryptionFailure("bad encapsulated key") from exc
    nonce, sealed = ciphertext[nb : nb + 12], ciphertext[nb + 12 :]
    shared = eph_pub ** secret
    key = hashlib.sha256(b"kem|" + eph_pub.encode() + shared.encode()).digest()
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, sealed, b"")
    except InvalidTag as exc:
        raise DecryptionFailure("wrong key or corrupted ciphertext") from exc
