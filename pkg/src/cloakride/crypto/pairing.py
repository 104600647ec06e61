"""Symmetric bilinear pairing: group elements, Tate pairing, encodings.

Arithmetic uses gmpy2 big integers when available (an order of magnitude
faster at 1536 bits, mostly thanks to ``gmpy2.invert``), falling back to
plain Python ints otherwise.  All group elements are immutable; the
group law is written multiplicatively so protocol code reads like the
underlying algebra: ``g ** m * h ** r``.

Byte encodings are canonical and fixed-length per parameter set:

* scalar: big-endian, ``scalar_bytes`` wide
* G1: 1 prefix byte (0x00 identity, 0x02/0x03 y parity) + big-endian x
* GT: big-endian real part || big-endian imaginary part

These encodings feed every transcript hash and signature, so they must
never change for a given parameter tag.
"""

from __future__ import annotations

import hashlib
import secrets

from ..errors import EncodingError
from .params import DEFAULT, SMALL, CurveParams, HAVE_GMPY2

if HAVE_GMPY2:
    from gmpy2 import invert as _gmpy_invert, mpz

    def _inv(a, m):
        return _gmpy_invert(a, m)

else:  # pragma: no cover - exercised only without gmpy2

    def mpz(x):
        return x

    def _inv(a, m):
        return pow(a, -1, m)


def _hash_blocks(seed: bytes, nbytes: int) -> bytes:
    out = []
    i = 0
    while sum(len(b) for b in out) < nbytes:
        out.append(hashlib.sha512(seed + i.to_bytes(4, "big")).digest())
        i += 1
    return b"".join(out)[:nbytes]


# ---------------------------------------------------------------------------
# raw affine curve arithmetic on E: y^2 = x^3 + x over F_q
# points are (x, y) tuples, None is the point at infinity


def _pt_add(P, Q, q):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % q == 0:
            return None
        lam = (3 * x1 * x1 + 1) * _inv(2 * y1, q) % q
    else:
        lam = (y2 - y1) * _inv(x2 - x1, q) % q
    x3 = (lam * lam - x1 - x2) % q
    return (x3, (lam * (x1 - x3) - y1) % q)


def _pt_mul(P, n, q):
    # double-and-add; n must be non-negative but may exceed the subgroup order
    result = None
    acc = P
    while n:
        if n & 1:
            result = _pt_add(result, acc, q)
        acc = _pt_add(acc, acc, q)
        n >>= 1
    return result


def _fq2_pow_raw(a, b, n, q):
    # (a + bi)^n without reducing n; used for subgroup-order checks
    ra, rb = mpz(1), mpz(0)
    while n:
        if n & 1:
            ac = ra * a % q
            bd = rb * b % q
            ra, rb = (ac - bd) % q, ((ra + rb) * (a + b) - ac - bd) % q
        ac = a * a % q
        bd = b * b % q
        b = 2 * a * b % q
        a = (ac - bd) % q
        n >>= 1
    return ra, rb


class G1Element:
    """Immutable point in the prime-order subgroup (multiplicative API)."""

    __slots__ = ("params", "x", "y")

    def __init__(self, params: CurveParams, x, y):
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __setattr__(self, *_):
        raise AttributeError("G1Element is immutable")

    def is_identity(self) -> bool:
        return self.x is None

    def __mul__(self, other: "G1Element") -> "G1Element":
        if self.params is not other.params:
            raise ValueError("mixed parameter sets")
        q = self.params.field_prime
        P = None if self.x is None else (self.x, self.y)
        Q = None if other.x is None else (other.x, other.y)
        R = _pt_add(P, Q, q)
        if R is None:
            return G1Element(self.params, None, None)
        return G1Element(self.params, R[0], R[1])

    def __pow__(self, n: int) -> "G1Element":
        n = int(n) % self.params.order
        if n == 0 or self.x is None:
            return G1Element(self.params, None, None)
        R = _pt_mul((self.x, self.y), n, self.params.field_prime)
        if R is None:
            return G1Element(self.params, None, None)
        return G1Element(self.params, R[0], R[1])

    def inverse(self) -> "G1Element":
        if self.x is None:
            return self
        return G1Element(self.params, self.x, (-self.y) % self.params.field_prime)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, G1Element)
            and self.params is other.params
            and self.x == other.x
            and self.y == other.y
        )

    def __hash__(self):
        if self.x is None:
            return hash((self.params.tag, None))
        return hash((self.params.tag, int(self.x), int(self.y)))

    def __deepcopy__(self, memo):
        return self

    def __repr__(self):
        if self.x is None:
            return "G1(identity)"
        return f"G1(x=..{int(self.x) & 0xFFFFFF:06x})"

    def encode(self) -> bytes:
        nb = self.params.field_bytes
        if self.x is None:
            return b"\x00" * (nb + 1)
        prefix = 2 + (int(self.y) & 1)
        return bytes([prefix]) + int(self.x).to_bytes(nb, "big")

    def on_curve(self) -> bool:
        if self.x is None:
            return True
        q = self.params.field_prime
        return (self.y * self.y - self.x * self.x * self.x - self.x) % q == 0


class GTElement:
    """Immutable element of the order-r subgroup of F_{q^2}^* (a + b*i)."""

    __slots__ = ("params", "a", "b")

    def __init__(self, params: CurveParams, a, b):
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __setattr__(self, *_):
        raise AttributeError("GTElement is immutable")

    def is_identity(self) -> bool:
        return self.a == 1 and self.b == 0

    def __mul__(self, other: "GTElement") -> "GTElement":
        if self.params is not other.params:
            raise ValueError("mixed parameter sets")
        q = self.params.field_prime
        a, b = self.a, self.b
        c, d = other.a, other.b
        ac = a * c % q
        bd = b * d % q
        return GTElement(self.params, (ac - bd) % q, ((a + b) * (c + d) - ac - bd) % q)

    def conjugate(self) -> "GTElement":
        return GTElement(self.params, self.a, (-self.b) % self.params.field_prime)

    def __pow__(self, n: int) -> "GTElement":
        # elements have order dividing r, so reduce the exponent
        n = int(n) % self.params.order
        q = self.params.field_prime
        ra, rb = mpz(1), mpz(0)
        ba, bb = self.a, self.b
        while n:
            if n & 1:
                ac = ra * ba % q
                bd = rb * bb % q
                ra, rb = (ac - bd) % q, ((ra + rb) * (ba + bb) - ac - bd) % q
            ac = (ba + bb) * (ba - bb) % q
            bb = 2 * ba * bb % q
            ba = ac
            n >>= 1
        return GTElement(self.params, ra, rb)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GTElement)
            and self.params is other.params
            and self.a == other.a
            and self.b == other.b
        )

    def __hash__(self):
        return hash((self.params.tag, int(self.a), int(self.b)))

    def __deepcopy__(self, memo):
        return self

    def __repr__(self):
        return f"GT(a=..{int(self.a) & 0xFFFFFF:06x})"

    def encode(self) -> bytes:
        nb = self.params.field_bytes
        return int(self.a).to_bytes(nb, "big") + int(self.b).to_bytes(nb, "big")


class PairingContext:
    """Group order, generators and the bilinear map.

    ``p`` is the prime order of G1/GT.  ``g`` and ``h`` are independent
    generators: both are derived by hashing fixed domain tags to the
    curve and clearing the cofactor, so nobody knows log_g(h).
    """

    def __init__(self, params: CurveParams):
        self.params = params
        self.p = params.order
        self._q = mpz(params.field_prime)
        self._cofactor = params.cofactor
        self.g = self.hash_to_group(b"cloakride/gen-g/" + params.tag.encode())
        self.h = self.hash_to_group(b"cloakride/gen-h/" + params.tag.encode())
        self.e_gg = self.pair(self.g, self.g)
        if self.e_gg.is_identity():
            raise ValueError("degenerate pairing for parameter set " + params.tag)

    # -- construction -------------------------------------------------

    @classmethod
    def default(cls) -> "PairingContext":
        return _context_cache("default")

    @classmethod
    def small(cls) -> "PairingContext":
        return _context_cache("small")

    @classmethod
    def from_profile(cls, name: str) -> "PairingContext":
        return _context_cache(name)

    # -- scalars -------------------------------------------------------

    def hash_to_scalar(self, data: bytes) -> int:
        """Deterministic map from bytes to Z_p (sha512, reduced mod p)."""
        digest = _hash_blocks(b"cloakride/h2s|" + data, self.params.scalar_bytes + 16)
        return int.from_bytes(digest, "big") % self.p

    def random_scalar(self, rng=None) -> int:
        """Uniform nonzero scalar; cryptographic unless an rng is injected."""
        if rng is None:
            return 1 + secrets.randbelow(self.p - 1)
        return rng.randrange(1, self.p)

    def scalar_to_bytes(self, s: int) -> bytes:
        return (int(s) % self.p).to_bytes(self.params.scalar_bytes, "big")

    def scalar_from_bytes(self, data: bytes) -> int:
        if len(data) != self.params.scalar_bytes:
            raise EncodingError("bad scalar length")
        value = int.from_bytes(data, "big")
        if value >= self.p:
            raise EncodingError("scalar out of range")
        return value

    def scalar_inv(self, s: int) -> int:
        s = int(s) % self.p
        if s == 0:
            raise ZeroDivisionError("scalar has no inverse")
        return int(_inv(mpz(s), mpz(self.p)))

    # -- group elements -------------------------------------------------

    def identity_g1(self) -> G1Element:
        return G1Element(self.params, None, None)

    def identity_gt(self) -> GTElement:
        return GTElement(self.params, mpz(1), mpz(0))

    def hash_to_group(self, tag: bytes) -> G1Element:
        """Try-and-increment hash onto the curve, then cofactor-cleared."""
        q = self._q
        nb = self.params.field_bytes + 32
        ctr = 0
        while True:
            x = mpz(int.from_bytes(_hash_blocks(tag + b"|" + str(ctr).encode(), nb), "big") % q)
            t = (x * x * x + x) % q
            y = pow(t, (q + 1) // 4, q)
            if y * y % q == t:
                P = _pt_mul((x, y), self._cofactor, q)
                if P is not None and _pt_mul(P, int(self.p), q) is None:
                    return G1Element(self.params, P[0], P[1])
            ctr += 1

    def decode_g1(self, data: bytes, check_order: bool = True) -> G1Element:
        if len(data) != self.params.g1_bytes:
            raise EncodingError("bad G1 length")
        prefix, xb = data[0], data[1:]
        if prefix == 0:
            if any(xb):
                raise EncodingError("bad identity encoding")
            return self.identity_g1()
        if prefix not in (2, 3):
            raise EncodingError("bad G1 prefix")
        q = self._q
        x = mpz(int.from_bytes(xb, "big"))
        if x >= q:
            raise EncodingError("x out of range")
        t = (x * x * x + x) % q
        y = pow(t, (q + 1) // 4, q)
        if y * y % q != t:
            raise EncodingError("x not on curve")
        if (int(y) & 1) != (prefix & 1):
            y = (-y) % q
        if check_order and _pt_mul((x, y), int(self.p), q) is not None:
            raise EncodingError("point not in the prime-order subgroup")
        return G1Element(self.params, x, y)

    def decode_gt(self, data: bytes, check_order: bool = True) -> GTElement:
        nb = self.params.field_bytes
        if len(data) != 2 * nb:
            raise EncodingError("bad GT length")
        q = self._q
        a = mpz(int.from_bytes(data[:nb], "big"))
        b = mpz(int.from_bytes(data[nb:], "big"))
        if a >= q or b >= q:
            raise EncodingError("GT coordinate out of range")
        if check_order:
            if (a * a + b * b) % q != 1:
                raise EncodingError("GT element not unitary")
            if _fq2_pow_raw(a, b, int(self.p), q) != (1, 0):
                raise EncodingError("GT element not in the order-p subgroup")
        return GTElement(self.params, a, b)

    # -- the pairing ----------------------------------------------------

    def pair(self, P: G1Element, Q: G1Element) -> GTElement:
        """Reduced Tate pairing composed with the distortion map.

        Symmetric and bilinear on G1 x G1.  Both arguments must lie in
        the prime-order subgroup (decode_g1 guarantees this for wire
        inputs); behaviour on other curve points is undefined.
        """
        if P.params is not self.params or Q.params is not self.params:
            raise ValueError("mixed parameter sets")
        if P.is_identity() or Q.is_identity():
            return self.identity_gt()
        q = self._q
        xq, yq = Q.x, Q.y
        xt, yt = P.x, P.y
        xp, yp = P.x, P.y
        fa, fb = mpz(1), mpz(0)
        bits = bin(int(self.p))[3:]
        last = len(bits) - 1
        for idx in range(len(bits)):
            # tangent line at T, evaluated at the distorted Q = (-xq, i*yq)
            lam = (3 * xt * xt + 1) * _inv(2 * yt, q) % q
            la = (lam * (xq + xt) - yt) % q
            # f <- f^2 * l
            sa = (fa + fb) * (fa - fb) % q
            sb = 2 * fa * fb % q
            ac = sa * la % q
            bd = sb * yq % q
            fa, fb = (ac - bd) % q, ((sa + sb) * (la + yq) - ac - bd) % q
            x3 = (lam * lam - 2 * xt) % q
            yt = (lam * (xt - x3) - yt) % q
            xt = x3
            if bits[idx] == "1":
                if idx == last:
                    # T = [p-1]P = -P: the line is vertical and lies in F_q,
                    # which the final exponentiation kills, so skip it
                    continue
                lam = (yp - yt) * _inv(xp - xt, q) % q
                la = (lam * (xq + xt) - yt) % q
                ac = fa * la % q
                bd = fb * yq % q
                fa, fb = (ac - bd) % q, ((fa + fb) * (la + yq) - ac - bd) % q
                x3 = (lam * lam - xt - xp) % q
                yt = (lam * (xt - x3) - yt) % q
                xt = x3
        # final exponentiation: f^(q-1) via conjugate/inverse, then ^cofactor
        norm = _inv((fa * fa + fb * fb) % q, q)
        ua, ub = fa * norm % q, (-fb) * norm % q  # f^{-1}
        ta = (fa * ua - (-fb % q) * ub) % q  # conj(f) * f^{-1}
        tb = (fa * ub + (-fb % q) * ua) % q
        ra, rb = mpz(1), mpz(0)
        n = self._cofactor
        while n:
            if n & 1:
                ac = ra * ta % q
                bd = rb * tb % q
                ra, rb = (ac - bd) % q, ((ra + rb) * (ta + tb) - ac - bd) % q
            # unitary squaring: (a + bi)^2 with a^2 + b^2 = 1
            ac = (ta + tb) * (ta - tb) % q
            tb = 2 * ta * tb % q
            ta = ac
            n >>= 1
        return GTElement(self.params, ra, rb)


_CONTEXTS: dict[str, PairingContext] = {}


def _context_cache(name: str) -> PairingContext:
    if name not in _CONTEXTS:
        if name == "default":
            _CONTEXTS[name] = PairingContext(DEFAULT)
        elif name == "small":
            _CONTEXTS[name] = PairingContext(SMALL)
        else:
            raise ValueError(f"unknown curve profile {name!r}")
    return _CONTEXTS[name]
