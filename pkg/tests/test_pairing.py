"""Group arithmetic, the pairing itself, and canonical encodings."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from cloakride.crypto import PairingContext
from cloakride.errors import EncodingError


def test_generators_have_group_order(ctx):
    assert not ctx.g.is_identity()
    assert not ctx.h.is_identity()
    assert (ctx.g ** ctx.p).is_identity()
    assert (ctx.h ** ctx.p).is_identity()
    assert ctx.g != ctx.h


def test_group_laws(ctx, rng):
    a, b = ctx.random_scalar(rng), ctx.random_scalar(rng)
    P, Q = ctx.g ** a, ctx.g ** b
    assert P * Q == Q * P
    assert P * P.inverse() == ctx.identity_g1()
    assert (P * Q) * P == P * (Q * P)
    assert P ** 0 == ctx.identity_g1()
    assert P ** -1 == P.inverse()
    assert ctx.g ** (a + b) == P * Q


def test_nondegenerate(ctx):
    assert not ctx.e_gg.is_identity()
    assert (ctx.e_gg ** ctx.p).is_identity()


def test_bilinearity_random_sample(ctx):
    # e(g^a, g^b) = e(g,g)^{ab} across 100 random pairs
    rng = random.Random(1)
    for _ in range(100):
        a, b = ctx.random_scalar(rng), ctx.random_scalar(rng)
        assert ctx.pair(ctx.g ** a, ctx.g ** b) == ctx.e_gg ** (a * b % ctx.p)


def test_pairing_symmetry_and_identity(ctx, rng):
    a = ctx.random_scalar(rng)
    P = ctx.g ** a
    assert ctx.pair(P, ctx.h) == ctx.pair(ctx.h, P)
    assert ctx.pair(ctx.identity_g1(), P).is_identity()
    assert ctx.pair(P, ctx.identity_g1()).is_identity()


def test_pairing_bilinear_in_each_slot(ctx, rng):
    a, b, c = (ctx.random_scalar(rng) for _ in range(3))
    P, Q, R = ctx.g ** a, ctx.g ** b, ctx.g ** c
    assert ctx.pair(P * Q, R) == ctx.pair(P, R) * ctx.pair(Q, R)
    assert ctx.pair(P, Q * R) == ctx.pair(P, Q) * ctx.pair(P, R)


def test_g1_encoding_round_trip(ctx, rng):
    for _ in range(10):
        P = ctx.g ** ctx.random_scalar(rng)
        assert ctx.decode_g1(P.encode()) == P
    identity = ctx.identity_g1()
    assert ctx.decode_g1(identity.encode()) == identity
    assert len(ctx.g.encode()) == ctx.params.g1_bytes


def test_g1_decode_rejects_garbage(ctx):
    with pytest.raises(EncodingError):
        ctx.decode_g1(b"\x05" + b"\x00" * ctx.params.field_bytes)
    with pytest.raises(EncodingError):
        ctx.decode_g1(b"\x02" + b"\xff" * ctx.params.field_bytes)  # x >= q
    with pytest.raises(EncodingError):
        ctx.decode_g1(b"")


def test_g1_decode_rejects_off_subgroup_points(ctx):
    # walk the curve until we hit a point outside the order-r subgroup
    import hashlib
    from cloakride.crypto.pairing import _pt_mul

    q = ctx.params.field_prime
    x = 2
    while True:
        t = (x * x * x + x) % q
        y = pow(t, (q + 1) // 4, q)
        if y * y % q == t and _pt_mul((x, y), ctx.p, q) is not None:
            break
        x += 1
    prefix = bytes([2 + (y & 1)])
    data = prefix + int(x).to_bytes(ctx.params.field_bytes, "big")
    with pytest.raises(EncodingError):
        ctx.decode_g1(data)


def test_gt_encoding_round_trip(ctx, rng):
    e = ctx.e_gg ** ctx.random_scalar(rng)
    assert ctx.decode_gt(e.encode()) == e
    with pytest.raises(EncodingError):
        ctx.decode_gt(b"\x00" * (ctx.params.gt_bytes - 1))


def test_gt_decode_rejects_unitary_off_subgroup(ctx):
    from cloakride.crypto.pairing import _fq2_pow_raw

    q = ctx.params.field_prime
    nb = ctx.params.field_bytes
    # unit-circle parametrization: ((x^2-1)/(x^2+1))^2 + (2x/(x^2+1))^2 = 1
    x = 3
    while True:
        inv = pow(x * x + 1, -1, q)
        a = (x * x - 1) * inv % q
        b = 2 * x * inv % q
        if _fq2_pow_raw(a, b, ctx.p, q) != (1, 0):
            break
        x += 1
    data = int(a).to_bytes(nb, "big") + int(b).to_bytes(nb, "big")
    with pytest.raises(EncodingError):
        ctx.decode_gt(data)


def test_scalar_codec(ctx, rng):
    s = ctx.random_scalar(rng)
    assert ctx.scalar_from_bytes(ctx.scalar_to_bytes(s)) == s
    with pytest.raises(EncodingError):
        ctx.scalar_from_bytes(ctx.scalar_to_bytes(s) + b"\x00")
    with pytest.raises(EncodingError):
        ctx.scalar_from_bytes(b"\xff" * ctx.params.scalar_bytes)


def test_hash_to_scalar_deterministic(ctx):
    assert ctx.hash_to_scalar(b"abc") == ctx.hash_to_scalar(b"abc")
    assert ctx.hash_to_scalar(b"") == ctx.hash_to_scalar(b"")
    assert 0 <= ctx.hash_to_scalar(b"") < ctx.p


def test_hash_to_scalar_collision_sample(ctx):
    # inputs differing in one byte give distinct scalars, 10^4 random pairs
    rng = random.Random(99)
    seen = set()
    for i in range(10_000):
        base = rng.randbytes(24)
        flipped = bytearray(base)
        flipped[rng.randrange(24)] ^= 1 << rng.randrange(8)
        if bytes(flipped) == base:
            continue
        a, b = ctx.hash_to_scalar(base), ctx.hash_to_scalar(bytes(flipped))
        assert a != b
        seen.add(a)
    assert len(seen) > 9_900  # near-uniform spread


@given(data=st.binary(max_size=64))
@settings(max_examples=25, deadline=None)
def test_hash_to_scalar_in_range(data):
    ctx = PairingContext.small()
    assert 0 <= ctx.hash_to_scalar(data) < ctx.p


def test_random_scalar_injectable(ctx):
    import random as _r

    assert ctx.random_scalar(_r.Random(5)) == ctx.random_scalar(_r.Random(5))
    assert 1 <= ctx.random_scalar() < ctx.p


def test_default_profile_sanity(default_ctx):
    # one bilinearity check on the production parameters
    rng = random.Random(2)
    a, b = default_ctx.random_scalar(rng), default_ctx.random_scalar(rng)
    lhs = default_ctx.pair(default_ctx.g ** a, default_ctx.g ** b)
    assert lhs == default_ctx.e_gg ** (a * b % default_ctx.p)
    assert default_ctx.params.order.bit_length() == 256
