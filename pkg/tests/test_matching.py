"""Feasibility predicates and offer selection, checked against oracles."""

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from cloakride.matching import (
    MatchPreferences,
    RideOffer,
    offer_score,
    request_in_catalog,
    select_offer,
    spatial_match,
    temporal_match,
)
from cloakride.trips import (
    CloakedTrip,
    DesiredTrip,
    GeoPoint,
    Grid,
    RideRequest,
    TimeWindow,
    enumerate_trips,
    haversine_m,
)

GRID = Grid(35.0, 36.5, -90.5, -81.5, rows=3, cols=9)
PICKUP = GeoPoint(35.96, -83.92)
DROPOFF = GeoPoint(36.16, -86.78)
DESIRED = DesiredTrip(PICKUP, 5400, DROPOFF, expected_duration_s=9000)


def offer(pickup=PICKUP, pickup_time=5400, dropoff=DROPOFF, dropoff_time=14400,
          bid=2, reputation=1.0, order=0, driver="d"):
    return RideOffer(driver, pickup, pickup_time, dropoff, dropoff_time, bid, reputation, order)


def point_at_distance(origin, meters):
    """Move due north; verify the distance with the library's own metric."""
    moved = GeoPoint(origin.lat + math.degrees(meters / 6_371_000.0), origin.lon)
    return moved, haversine_m(origin, moved)


# -- request_in_catalog -----------------------------------------------------------


def random_catalog(rng, n_stops):
    stops = tuple(
        (GRID.cell_by_id(rng.randrange(27)), TimeWindow(900 * rng.randrange(8), 0))
        for _ in range(n_stops)
    )
    stops = tuple((c, TimeWindow(w.start, w.start + 900)) for c, w in stops)
    return enumerate_trips(CloakedTrip(stops))


def oracle_in_catalog(catalog, request):
    found = False
    for entry in catalog.entries:
        same_cells = (
            entry.origin_cell.id == request.origin_cell.id
            and entry.dest_cell.id == request.dest_cell.id
        )
        w1, w2 = entry.origin_window, request.origin_window
        overlap = max(w1.start, w2.start) < min(w1.end, w2.end)
        if same_cells and overlap:
            found = True
    return found


def test_request_matches_catalog_entry():
    catalog = random_catalog(random.Random(5), 6)
    entry = catalog.entries[3]
    request = RideRequest(entry.origin_cell, entry.origin_window, entry.dest_cell, deadline=0)
    assert request_in_catalog(catalog, request)


def test_request_with_unknown_origin_cell():
    catalog = enumerate_trips(
        CloakedTrip(
            (
                (GRID.cell_by_id(1), TimeWindow(0, 900)),
                (GRID.cell_by_id(2), TimeWindow(900, 1800)),
            )
        )
    )
    request = RideRequest(GRID.cell_by_id(20), TimeWindow(0, 900), GRID.cell_by_id(2), deadline=0)
    assert not request_in_catalog(catalog, request)


def test_request_in_catalog_matches_oracle():
    rng = random.Random(6)
    for _ in range(10_000):
        catalog = random_catalog(rng, rng.randint(2, 6))
        request = RideRequest(
            GRID.cell_by_id(rng.randrange(27)),
            TimeWindow(900 * rng.randrange(8), 900 * rng.randrange(8) + 900),
            GRID.cell_by_id(rng.randrange(27)),
            deadline=0,
        )
        assert request_in_catalog(catalog, request) == oracle_in_catalog(catalog, request)


# -- spatial / temporal ------------------------------------------------------------


def test_spatial_exact_points_match_any_slack():
    assert spatial_match(offer(), DESIRED, 0.0)


def test_spatial_boundary_inclusive():
    moved, measured = point_at_distance(PICKUP, 500.0)
    assert measured == pytest.approx(500.0, abs=0.01)
    o = offer(pickup=moved)
    assert spatial_match(o, DESIRED, measured)  # exactly at the slack
    assert not spatial_match(o, DESIRED, 400.0)


def test_spatial_checks_both_ends():
    moved, measured = point_at_distance(DROPOFF, 700.0)
    o = offer(dropoff=moved)
    assert not spatial_match(o, DESIRED, 500.0)
    assert spatial_match(o, DESIRED, measured + 1)


def test_temporal_identical_times():
    assert temporal_match(offer(), DESIRED, 0)


def test_temporal_boundaries():
    o = offer(pickup_time=5400 + 300, dropoff_time=14400 - 300)
    assert temporal_match(o, DESIRED, 300)  # both gaps exactly tau
    assert not temporal_match(offer(pickup_time=5400 + 301), DESIRED, 300)
    assert not temporal_match(offer(dropoff_time=14400 + 301), DESIRED, 300)


def test_slack_monotonicity():
    rng = random.Random(8)
    for _ in range(300):
        o = offer(
            pickup=GeoPoint(PICKUP.lat + rng.uniform(-0.01, 0.01), PICKUP.lon),
            pickup_time=5400 + rng.randint(-2000, 2000),
            dropoff_time=14400 + rng.randint(-2000, 2000),
        )
        delta, tau = rng.uniform(0, 2000), rng.uniform(0, 2000)
        if spatial_match(o, DESIRED, delta):
            assert spatial_match(o, DESIRED, delta * 1.5 + 1)
        if temporal_match(o, DESIRED, tau):
            assert temporal_match(o, DESIRED, tau * 1.5 + 1)


# -- select_offer --------------------------------------------------------------------


PREFS = MatchPreferences(delta_m=900, tau_s=1200)


def test_single_feasible_offer_selected():
    assert select_offer([offer()], DESIRED, PREFS) == offer()


def test_lower_bid_wins_all_else_equal():
    cheap, dear = offer(bid=10, order=0), offer(bid=12, order=1)
    assert select_offer([dear, cheap], DESIRED, PREFS) == cheap


def test_no_feasible_offer_returns_none():
    far, _ = point_at_distance(PICKUP, 5000.0)
    assert select_offer([offer(pickup=far)], DESIRED, PREFS) is None


def test_selected_offer_is_feasible_and_minimal():
    rng = random.Random(9)
    for _ in range(200):
        offers = [
            offer(
                pickup=GeoPoint(PICKUP.lat + rng.uniform(-0.01, 0.01), PICKUP.lon),
                pickup_time=5400 + rng.randint(-1500, 1500),
                dropoff_time=14400 + rng.randint(-1500, 1500),
                bid=rng.randint(1, 9),
                reputation=rng.random(),
                order=i,
            )
            for i in range(rng.randint(1, 6))
        ]
        choice = select_offer(offers, DESIRED, PREFS)
        feasible = [
            o
            for o in offers
            if spatial_match(o, DESIRED, PREFS.delta_m) and temporal_match(o, DESIRED, PREFS.tau_s)
        ]
        if not feasible:
            assert choice is None
            continue
        assert choice in feasible
        max_bid = max(o.bid for o in feasible)
        best = offer_score(choice, DESIRED, PREFS, max_bid)
        assert all(best <= offer_score(o, DESIRED, PREFS, max_bid) + 1e-12 for o in feasible)


def oracle_select(offers, desired, prefs):
    feasible = []
    for o in offers:
        walk_ok = (
            haversine_m(o.pickup, desired.pickup) <= prefs.delta_m
            and haversine_m(o.dropoff, desired.dropoff) <= prefs.delta_m
        )
        target = desired.pickup_time + desired.expected_duration_s
        time_ok = (
            abs(o.pickup_time - desired.pickup_time) <= prefs.tau_s
            and abs(o.dropoff_time - target) <= prefs.tau_s
        )
        if walk_ok and time_ok:
            feasible.append(o)
    if not feasible:
        return None
    max_bid = max(o.bid for o in feasible)
    best, best_key = None, None
    for o in feasible:
        score = 0.0
        if prefs.delta_m > 0:
            score += prefs.w_walk * haversine_m(o.pickup, desired.pickup) / prefs.delta_m
        if prefs.tau_s > 0:
            score += prefs.w_wait * abs(o.pickup_time - desired.pickup_time) / prefs.tau_s
        if max_bid > 0:
            score += prefs.w_bid * o.bid / max_bid
        score -= prefs.w_rep * min(max(o.reputation, 0.0), 1.0)
        key = (score, o.bid, o.order)
        if best_key is None or key < best_key:
            best, best_key = o, key
    return best


def test_select_offer_matches_oracle():
    rng = random.Random(10)
    for _ in range(10_000):
        weights = (
            rng.choice([0, 0.5, 1, 2]),
            rng.choice([0, 1]),
            rng.choice([0, 1, 3]),
            rng.choice([0, 1]),
        )
        if not any(weights):
            continue
        prefs = MatchPreferences(
            delta_m=rng.choice([0, 300, 900, 2000]),
            tau_s=rng.choice([0, 600, 1200]),
            w_walk=weights[0],
            w_wait=weights[1],
            w_bid=weights[2],
            w_rep=weights[3],
        )
        offers = [
            offer(
                pickup=GeoPoint(PICKUP.lat + rng.uniform(-0.02, 0.02), PICKUP.lon),
                pickup_time=5400 + rng.randint(-1500, 1500),
                dropoff_time=14400 + rng.randint(-1500, 1500),
                bid=rng.randint(0, 9),
                reputation=rng.choice([0.0, 0.4, 0.8, 1.0]),
                order=i,
                driver=f"d{i}",
            )
            for i in range(rng.randint(0, 6))
        ]
        assert select_offer(offers, DESIRED, prefs) == oracle_select(offers, DESIRED, prefs)


def test_dominated_offer_never_wins():
    rng = random.Random(11)
    for _ in range(300):
        base_walk = rng.uniform(0, 0.005)
        good = offer(
            pickup=GeoPoint(PICKUP.lat + base_walk, PICKUP.lon),
            pickup_time=5400 + rng.randint(0, 500),
            bid=rng.randint(1, 5),
            reputation=0.9,
            order=0,
        )
        worse = offer(
            pickup=GeoPoint(PICKUP.lat + base_walk + 0.002, PICKUP.lon),
            pickup_time=good.pickup_time + 200,
            bid=good.bid + 2,
            reputation=0.5,
            order=1,
        )
        chosen = select_offer([worse, good], DESIRED, PREFS)
        assert chosen == good


def test_preferences_validation():
    with pytest.raises(ValueError):
        MatchPreferences(delta_m=-1, tau_s=0)
    with pytest.raises(ValueError):
        MatchPreferences(delta_m=1, tau_s=1, w_walk=0, w_wait=0, w_bid=0, w_rep=0)
    with pytest.raises(ValueError):
        MatchPreferences(delta_m=1, tau_s=1, w_bid=-2)


@given(slack=st.floats(min_value=0, max_value=5000), extra=st.floats(min_value=0.1, max_value=5000))
@settings(max_examples=50, deadline=None)
def test_spatial_monotone_property(slack, extra):
    moved, _ = point_at_distance(PICKUP, 800.0)
    o = offer(pickup=moved)
    if spatial_match(o, DESIRED, slack):
        assert spatial_match(o, DESIRED, slack + extra)
