"""Curve parameter sets for the symmetric pairing group.

The curve is E: y^2 = x^3 + x over F_q with q = 3 (mod 4), which is
supersingular with #E(F_q) = q + 1 and embedding degree 2.  G1 is the
subgroup of prime order r, and the distortion map (x, y) -> (-x, iy)
into E(F_q^2) turns the reduced Tate pairing into a symmetric bilinear
map e: G1 x G1 -> GT with e(g, g) != 1.

Two frozen parameter sets are provided:

* ``DEFAULT``: 1536-bit field, 256-bit group order.  Discrete logs live
  in a 3072-bit extension field, i.e. roughly 128-bit security.
* ``SMALL``: 512-bit field, 160-bit order.  Fast but far below modern
  security margins; intended for simulation-heavy tests only.

Both sets were produced by ``find_curve_params`` below, which derives
every value deterministically from a domain-separation tag, so the
constants can be re-derived and audited (see the parameter tests).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

try:
    import gmpy2

    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - exercised only without gmpy2
    gmpy2 = None
    HAVE_GMPY2 = False


@dataclass(frozen=True)
class CurveParams:
    """Frozen description of one supersingular pairing group."""

    tag: str
    field_prime: int  # q
    order: int  # r, prime order of G1 and GT
    cofactor: int  # (q + 1) // r

    @property
    def field_bytes(self) -> int:
        return (self.field_prime.bit_length() + 7) // 8

    @property
    def scalar_bytes(self) -> int:
        return (self.order.bit_length() + 7) // 8

    @property
    def g1_bytes(self) -> int:
        # 1 prefix byte (identity / y parity) + big-endian x
        return 1 + self.field_bytes

    @property
    def gt_bytes(self) -> int:
        return 2 * self.field_bytes


def find_curve_params(rbits: int, qbits: int, tag: str) -> CurveParams:
    """Deterministically search for a parameter set.

    r is the first prime at or above a seed value derived from the tag;
    the cofactor c is the smallest value past a seeded offset such that
    q = c*r - 1 is a qbits prime.  c is kept a multiple of 4 so that
    q = 3 (mod 4), and c is never a multiple of r so the r-torsion of
    E(F_q) stays cyclic.  Requires gmpy2 for primality testing.
    """
    if not HAVE_GMPY2:
        raise RuntimeError("parameter generation requires gmpy2")
    seed = b"cloakride/curve/" + tag.encode()
    blocks = (max(rbits, qbits) // 512) + 1
    rbase = int.from_bytes(hashlib.sha512(seed + b"|order").digest() * blocks, "big")
    r = int(gmpy2.next_prime((rbase % (1 << (rbits - 1))) | (1 << (rbits - 1))))
    cmin = ((1 << (qbits - 1)) + r) // r
    span = (1 << (qbits - 1)) // (2 * r)
    off = int.from_bytes(hashlib.sha512(seed + b"|cofactor").digest() * blocks, "big") % span
    c = cmin + off
    c += (-c) % 4
    while True:
        q = c * r - 1
        assert q.bit_length() == qbits
        if c % r != 0 and gmpy2.is_prime(q):
            return CurveParams(tag=tag, field_prime=q, order=r, cofactor=c)
        c += 4


# find_curve_params(256, 1536, "default-v1")
DEFAULT = CurveParams(
    tag="default-v1",
    order=0xEAC8AF5DB07646F153831832B1939F4CF15381C3D78D82A6DC8DEFD0CA3B5AC9,
    cofactor=int(
        "0x97fe09b2b6288cbe9af7f27126ae05c95b32f27f5f6038cc46a3069e3aedba53"
        "8a66e70e5a55024364440c16bb882299c92b310cb48eb243083bf9261d69c750"
        "1351273b01542640cdb612d24a80989d89a41a2dd11a4914267fefcaf4f1c98e"
        "23fa24165209fb4a096e97466ae503d2d87bb2b153799ade81ef97e6e390de11"
        "02019f3e9694ee5b2dfa7ef4ca2fadf368289488a42138cd0a61d2a369e95ea8",
        16,
    ),
    field_prime=int(
        "0x8b655b7336cef0a827802b80ef1585179b7c80cebb5500f1fa0b9ce02e51d89a"
        "5b37680a7349f83646cab5475a774c0e22d2ba5ca3ce69796324febf19b1636c"
        "4af9c60a23e9f10355eb2108b381708802f32ee43819e49d9c3c1f3eb6a3674d"
        "8a64b47d3b5a57b10143deb51541aaff17cb2846e56af16ba1d9bd4f841a75a9"
        "2534cd6ec3511e8f03dfa6564ba8105188226daad8987004bd6759806c8b02d5"
        "7426cbe677e8fd28855b43786dbf7a26be3cb7650d948bdc779b2383943a61e7",
        16,
    ),
)

# find_curve_params(160, 512, "small-v1")
SMALL = CurveParams(
    tag="small-v1",
    order=0xEBD4F3B611CE1F34C73649DAFCBD5D19328ED6A1,
    cofactor=int(
        "0x9c3fd89858530cdd7fc961cf0cea36cded3830555776061c0c6423336f31193f"
        "de776564e09875044de1b410",
        16,
    ),
    field_prime=int(
        "0x8ff09572f2180589f63ae1901aaae857f4b0116ecd9f0842058cf3618c1b0e4d"
        "9af7d133d771aa0e94dc5818849dfccd9416b10eb5d503d4ba90debca8579e0f",
        16,
    ),
)

PROFILES = {"default": DEFAULT, "small": SMALL}
