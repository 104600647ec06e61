"""Feasibility predicates and the rider's offer-selection heuristic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .trips import DesiredTrip, GeoPoint, RideRequest, TripCatalog, haversine_m


@dataclass(frozen=True)
class RideOffer:
    """A decrypted driver offer, ready for evaluation.

    ``order`` is the on-ledger submission index, used as the final
    tie-break so selection is deterministic.
    """

    driver: str
    pickup: GeoPoint
    pickup_time: int
    dropoff: GeoPoint
    dropoff_time: int
    bid: int  # currency units per distance unit, public on the ledger
    reputation: float  # snapshot in [0, 1]
    order: int = 0


@dataclass(frozen=True)
class MatchPreferences:
    """Rider slacks and scoring weights.

    delta_m: farthest the rider will walk (meters).
    tau_s: longest wait / arrival delay the rider tolerates (seconds).
    Weights must be non-negative and not all zero.
    """

    delta_m: float
    tau_s: float
    w_walk: float = 1.0
    w_wait: float = 1.0
    w_bid: float = 1.0
    w_rep: float = 1.0

    def __post_init__(self):
        if self.delta_m < 0 or self.tau_s < 0:
            raise ValueError("slacks must be non-negative")
        weights = (self.w_walk, self.w_wait, self.w_bid, self.w_rep)
        if any(w < 0 for w in weights) or not any(weights):
            raise ValueError("weights must be non-negative and not all zero")


def request_in_catalog(catalog: TripCatalog, request: RideRequest) -> bool:
    """Does some catalog triple cover the request?

    Origin and destination cells must match exactly; the origin windows
    only need to overlap.
    """
    return any(
        entry.origin_cell.id == request.origin_cell.id
        and entry.dest_cell.id == request.dest_cell.id
        and entry.origin_window.overlaps(request.origin_window)
        for entry in catalog.entries
    )


def spatial_match(offer: RideOffer, desired: DesiredTrip, delta_m: float) -> bool:
    """Both walk legs within the spatial slack (inclusive)."""
    return (
        haversine_m(offer.pickup, desired.pickup) <= delta_m
        and haversine_m(offer.dropoff, desired.dropoff) <= delta_m
    )


def temporal_match(offer: RideOffer, desired: DesiredTrip, tau_s: float) -> bool:
    """Both time gaps within the temporal slack (inclusive).

    The rider's drop-off target is pickup time + expected ride duration.
    """
    target_dropoff = desired.pickup_time + desired.expected_duration_s
    return (
        abs(offer.pickup_time - desired.pickup_time) <= tau_s
        and abs(offer.dropoff_time - target_dropoff) <= tau_s
    )


def offer_score(
    offer: RideOffer, desired: DesiredTrip, prefs: MatchPreferences, max_bid: int
) -> float:
    """Normalized weighted cost; lower is better.

    Walk and wait are normalized by the rider's own slacks, the bid by
    the largest feasible bid, and the reputation snapshot (already in
    [0, 1]) is subtracted.  Zero slack means the corresponding residual
    is necessarily zero for a feasible offer, so the term drops out.
    """
    walk = haversine_m(offer.pickup, desired.pickup)
    wait = abs(offer.pickup_time - desired.pickup_time)
    score = 0.0
    if prefs.delta_m > 0:
        score += prefs.w_walk * (walk / prefs.delta_m)
    if prefs.tau_s > 0:
        score += prefs.w_wait * (wait / prefs.tau_s)
    if max_bid > 0:
        score += prefs.w_bid * (offer.bid / max_bid)
    score -= prefs.w_rep * min(max(offer.reputation, 0.0), 1.0)
    return score


def select_offer(
    offers: Sequence[RideOffer], desired: DesiredTrip, prefs: MatchPreferences
) -> Optional[RideOffer]:
    """Pick the feasible offer with the lowest score.

    Ties break toward the lower bid, then the earlier submission.
    Returns None when no offer passes both feasibility checks.
    """
    feasible = [
        o
        for o in offers
        if spatial_match(o, desired, prefs.delta_m) and temporal_match(o, desired, prefs.tau_s)
    ]
    if not feasible:
        return None
    max_bid = max(o.bid for o in feasible)
    return min(feasible, key=lambda o: (offer_score(o, desired, prefs, max_bid), o.bid, o.order))
