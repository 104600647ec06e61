import random

import pytest

from cloakride.crypto import PairingContext


@pytest.fixture(scope="session")
def ctx():
    """Small parameter set: fast, used by most unit tests."""
    return PairingContext.small()


@pytest.fixture(scope="session")
def default_ctx():
    """Production parameter set; reserved for the tests that need it."""
    return PairingContext.default()


@pytest.fixture
def rng():
    return random.Random(0xC10AC)


# -- shared scenario builders -------------------------------------------------

GRID = {
    "min_lat": 35.0,
    "max_lat": 36.5,
    "min_lon": -90.5,
    "max_lon": -81.5,
    "rows": 3,
    "cols": 9,
}

RIDER_PROFILES = ["honest", "honest", "honest", "rigged_setup", "ghost_request",
                  "stop_signing", "impersonated"]
DRIVER_PROFILES = ["honest", "honest", "honest", "no_show", "claim_and_abandon",
                   "distance_cheat", "ghost_offer"]


def corridor_scenario(pairs, seed=7, set_size=4, deposit=25, bond=30, bid=2):
    """One vertical corridor per (rider_profile, driver_profile) pair.

    Each pair gets its own grid column, so requests match exactly their
    intended driver.
    """
    riders, drivers, lps = [], [], []
    for i, (rider_profile, driver_profile) in enumerate(pairs):
        lon = -90.0 + i
        riders.append(
            {
                "id": f"rider-{i}",
                "balance": 2000,
                "request_time": 100 + 7 * i,
                "pickup": {"lat": 35.2505, "lon": lon},
                "pickup_time": 5400,
                "dropoff": {"lat": 36.2505, "lon": lon},
                "expected_duration_s": 3600,
                "deposit": deposit,
                "offer_window_s": 300,
                "preferences": {"delta_m": 900, "tau_s": 1200},
                "profile": rider_profile,
            }
        )
        drivers.append(
            {
                "id": f"driver-{i}",
                "balance": 500,
                "bid": bid,
                "profile": driver_profile,
                "response_delay_s": 10 + i,
                "waypoints": [
                    {"lat": 35.25, "lon": lon, "t": 5400},
                    {"lat": 36.25, "lon": lon, "t": 9000},
                ],
            }
        )
        lps.append(
            {
                "id": f"lp-{i}",
                "coverage": {
                    "type": "circle",
                    "center": {"lat": 35.25, "lon": lon},
                    "radius_m": 4000,
                },
            }
        )
    return {
        "version": 1,
        "seed": seed,
        "curve_profile": "small",
        "grid": dict(GRID),
        "time_interval_s": 900,
        "set_size": set_size,
        "new_driver_bond": bond,
        "driver_deposit": 40,
        "distance_unit_m": 5000,
        "segment_interval_s": 300,
        "riders": riders,
        "drivers": drivers,
        "location_provers": lps,
    }


def random_scenario(rng: random.Random, index: int) -> dict:
    """A randomized mixed-honesty scenario on the corridor layout."""
    n_pairs = rng.randint(1, 3)
    columns = rng.sample(range(9), n_pairs)
    riders, drivers, lps = [], [], []
    for i, col in enumerate(columns):
        lon = -90.0 + col
        rider_profile = rng.choice(RIDER_PROFILES)
        driver_profile = rng.choice(DRIVER_PROFILES)
        pickup_time = rng.randrange(3600, 7200, 60)
        duration = rng.randrange(1800, 5400, 60)
        # sometimes break the match on purpose (wrong destination cell)
        match = rng.random() > 0.15
        drop_lat = 36.25 if match else 35.75
        riders.append(
            {
                "id": f"rider-{i}",
                "balance": rng.randrange(500, 3000, 100),
                "request_time": rng.randrange(50, 600, 10),
                "pickup": {"lat": 35.25 + rng.randrange(0, 40) * 1e-4, "lon": lon},
                "pickup_time": pickup_time,
                "dropoff": {"lat": 36.2505, "lon": lon},
                "expected_duration_s": duration,
                "deposit": rng.randrange(5, 60, 5),
                "offer_window_s": rng.randrange(120, 600, 60),
                "max_offers": rng.choice([None, 1, 3, 7]),
                "preferences": {"delta_m": rng.choice([500, 900, 1500]), "tau_s": 1200},
                "profile": rider_profile,
            }
        )
        drivers.append(
            {
                "id": f"driver-{i}",
                "balance": rng.randrange(200, 800, 50),
                "bid": rng.randint(1, 4),
                "profile": driver_profile,
                "response_delay_s": rng.randint(5, 40),
                "waypoints": [
                    {"lat": 35.25, "lon": lon, "t": pickup_time},
                    {"lat": drop_lat, "lon": lon, "t": pickup_time + duration},
                ],
            }
        )
        lps.append(
            {
                "id": f"lp-{i}",
                "coverage": {
                    "type": "circle",
                    "center": {"lat": 35.25, "lon": lon},
                    "radius_m": 4000,
                },
            }
        )
    return {
        "version": 1,
        "seed": rng.randrange(1 << 32),
        "curve_profile": "small",
        "grid": dict(GRID),
        "time_interval_s": 900,
        "set_size": rng.randint(2, 5),
        "new_driver_bond": rng.choice([0, 20, 40]),
        "driver_deposit": rng.randrange(10, 60, 10),
        "distance_unit_m": 5000,
        "segment_interval_s": rng.choice([120, 300, 600]),
        "riders": riders,
        "drivers": drivers,
        "location_provers": lps,
    }
