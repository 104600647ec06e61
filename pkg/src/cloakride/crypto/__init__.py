"""Pairing-group arithmetic and the primitive schemes built on it."""

from .pairing import G1Element, GTElement, PairingContext
from .params import DEFAULT, PROFILES, SMALL, CurveParams, find_curve_params
from .schemes import (
    AttestationSignature,
    Certificate,
    KeyPair,
    att_sign,
    att_verify,
    issue_certificate,
    offer_decrypt,
    offer_encrypt,
    pedersen_commit,
    set_sign,
    set_verify,
    sign_message,
    verify_certificate,
    verify_message,
)

__all__ = [
    "AttestationSignature",
    "Certificate",
    "CurveParams",
    "DEFAULT",
    "G1Element",
    "GTElement",
    "KeyPair",
    "PROFILES",
    "PairingContext",
    "SMALL",
    "att_sign",
    "att_verify",
    "find_curve_params",
    "issue_certificate",
    "offer_decrypt",
    "offer_encrypt",
    "pedersen_commit",
    "set_sign",
    "set_verify",
    "sign_message",
    "verify_certificate",
    "verify_message",
]
