"""Exception types shared across the package."""


class CloakRideError(Exception):
    """Base class for all library errors."""


class EncodingError(CloakRideError):
    """A byte string does not decode to a valid scalar/group element."""


class DegenerateElement(CloakRideError):
    """Set-signature secret collides with the element (x + i = 0 mod p)."""


class DuplicateElement(CloakRideError):
    """Membership set contains a repeated element."""


class SetTooSmall(CloakRideError):
    """Membership set needs at least two elements."""


class ElementNotInSet(CloakRideError):
    """Prover asked to prove membership of an element outside the set."""


class SignatureMismatch(CloakRideError):
    """Commitment does not open to the claimed element under the request signature."""


class OutOfCoverage(CloakRideError):
    """Claimed position lies outside the location prover's coverage region."""


class DecryptionFailure(CloakRideError):
    """Ciphertext is malformed or was encrypted under a different key."""


class OutOfBounds(CloakRideError):
    """Geographic point falls outside the grid bounding box."""


class TooFewWaypoints(CloakRideError):
    """Trip enumeration needs at least two waypoints."""


class BadSignature(CloakRideError):
    """Transaction signature does not verify; nothing was applied."""


class InsufficientFunds(CloakRideError):
    """Sender balance cannot cover the attached value."""


class ContractRevert(CloakRideError):
    """A contract precondition failed; the transaction was rolled back."""


class ImpersonationDetected(CloakRideError):
    """Challenge-response authentication failed at the pick-up point."""


class ScenarioError(CloakRideError):
    """Scenario file is malformed or violates the schema."""
