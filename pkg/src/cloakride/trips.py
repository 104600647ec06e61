"""Geographic grid, spatio-temporal cloaking and trip-catalog enumeration.

Exact trip data never leaves the user's device in the clear: locations
are blurred to grid cells and times to fixed intervals before anything
is published.  A driver additionally expands a cloaked route into the
catalog of every sub-trip he is willing to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import OutOfBounds, TooFewWaypoints


class GeoPoint(NamedTuple):
    lat: float
    lon: float


class Cell(NamedTuple):
    id: int
    row: int
    col: int


class TimeWindow(NamedTuple):
    start: int
    end: int

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end

    def overlaps(self, other: "TimeWindow") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Grid:
    """Row-major cell grid over a lat/lon bounding box.

    Rows are counted from the north edge and columns from the west edge,
    so the north-west corner lies in cell 0.  Points on shared cell
    edges belong to the neighbouring cell with the smaller index.
    """

    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and one column")
        if self.min_lat >= self.max_lat or self.min_lon >= self.max_lon:
            raise ValueError("empty bounding box")

    @property
    def cell_height(self) -> float:
        return (self.max_lat - self.min_lat) / self.rows

    @property
    def cell_width(self) -> float:
        return (self.max_lon - self.min_lon) / self.cols

    def contains(self, point: GeoPoint) -> bool:
        return (
            self.min_lat <= point.lat <= self.max_lat
            and self.min_lon <= point.lon <= self.max_lon
        )

    def cell(self, row: int, col: int) -> Cell:
        return Cell(row * self.cols + col, row, col)

    def cell_by_id(self, cell_id: int) -> Cell:
        if not 0 <= cell_id < self.rows * self.cols:
            raise ValueError(f"cell id {cell_id} out of range")
        return Cell(cell_id, cell_id // self.cols, cell_id % self.cols)

    def cell_box(self, cell: Cell):
        """(south, north, west, east) bounds of a cell."""
        north = self.max_lat - cell.row * self.cell_height
        west = self.min_lon + cell.col * self.cell_width
        return (north - self.cell_height, north, west, west + self.cell_width)


def cloak_point(grid: Grid, point: GeoPoint) -> Cell:
    """Map a point to the cell containing it (deterministic tie-break)."""
    if not grid.contains(point):
        raise OutOfBounds(f"point {point} outside grid bounding box")
    fr = (grid.max_lat - point.lat) / grid.cell_height
    fc = (point.lon - grid.min_lon) / grid.cell_width
    row, col = int(fr), int(fc)
    # boundary points go to the smaller-index cell
    if row == fr and row > 0:
        row -= 1
    if col == fc and col > 0:
        col -= 1
    row = min(row, grid.rows - 1)
    col = min(col, grid.cols - 1)
    return grid.cell(row, col)


def cloak_time(t: int, interval_s: int) -> TimeWindow:
    """Generalize a timestamp to its enclosing interval [k*L, (k+1)*L)."""
    if interval_s <= 0:
        raise ValueError("interval must be positive")
    start = (t // interval_s) * interval_s
    return TimeWindow(start, start + interval_s)


@dataclass(frozen=True)
class PlannedTrip:
    """A driver's exact route: (point, timestamp) waypoints in time order."""

    waypoints: tuple[tuple[GeoPoint, int], ...]

    def __post_init__(self):
        times = [t for _, t in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint timestamps must be strictly increasing")


@dataclass(frozen=True)
class CloakedTrip:
    """Cell/window sequence corresponding to a planned trip."""

    stops: tuple[tuple[Cell, TimeWindow], ...]


def cloak_trip(grid: Grid, trip: PlannedTrip, interval_s: int) -> CloakedTrip:
    return CloakedTrip(
        tuple((cloak_point(grid, p), cloak_time(t, interval_s)) for p, t in trip.waypoints)
    )


class CatalogEntry(NamedTuple):
    origin_cell: Cell
    origin_window: TimeWindow
    dest_cell: Cell
    multiplicity: int
    origin_index: int  # first waypoint pair that produced this triple
    dest_index: int


@dataclass(frozen=True)
class TripCatalog:
    """All shareable (origin cell, origin window, destination cell) triples."""

    entries: tuple[CatalogEntry, ...]
    pair_count: int  # n(n-1)/2, before deduplication


def enumerate_trips(cloaked: CloakedTrip) -> TripCatalog:
    """Expand a cloaked route into every ordered sub-trip.

    Identical triples (e.g. consecutive waypoints in one cell) are
    merged, keeping their multiplicity, so matching sees each distinct
    triple once.
    """
    stops = cloaked.stops
    n = len(stops)
    if n < 2:
        raise TooFewWaypoints("need at least two waypoints to enumerate trips")
    merged: dict[tuple, CatalogEntry] = {}
    for j in range(n):
        cell_j, window_j = stops[j]
        for k in range(j + 1, n):
            cell_k = stops[k][0]
            key = (cell_j.id, window_j, cell_k.id)
            if key in merged:
                merged[key] = merged[key]._replace(multiplicity=merged[key].multiplicity + 1)
            else:
                merged[key] = CatalogEntry(cell_j, window_j, cell_k, 1, j, k)
    return TripCatalog(tuple(merged.values()), n * (n - 1) // 2)


@dataclass(frozen=True)
class DesiredTrip:
    """A rider's exact wish: pick-up point/time and drop-off point.

    ``expected_duration_s`` is the rider's own estimate of the ride
    length; it sets the drop-off target time for temporal matching.
    """

    pickup: GeoPoint
    pickup_time: int
    dropoff: GeoPoint
    expected_duration_s: int = 0


@dataclass(frozen=True)
class RideRequest:
    """Generalized, publishable form of a desired trip."""

    origin_cell: Cell
    origin_window: TimeWindow
    dest_cell: Cell
    deadline: int
    max_offers: Optional[int] = None


def generalize_request(
    grid: Grid,
    desired: DesiredTrip,
    interval_s: int,
    deadline: int,
    max_offers: Optional[int] = None,
) -> RideRequest:
    return RideRequest(
        origin_cell=cloak_point(grid, desired.pickup),
        origin_window=cloak_time(desired.pickup_time, interval_s),
        dest_cell=cloak_point(grid, desired.dropoff),
        deadline=deadline,
        max_offers=max_offers,
    )


def _interleave_bits(a: int, b: int) -> int:
    out = 0
    i = 0
    while a or b:
        out |= (a & 1) << (2 * i)
        out |= (b & 1) << (2 * i + 1)
        a >>= 1
        b >>= 1
        i += 1
    return out


def encode_location(point: GeoPoint, precision: int = 5) -> int:
    """Quantize a point and pack it into one integer set element.

    Latitude and longitude are rounded to ``precision`` decimal places,
    shifted to non-negative integers and bit-interleaved.  The result is
    injective over the quantized domain and around 72 bits at the
    default precision, far below any group order in use.
    """
    if not 3 <= precision <= 6:
        raise ValueError("precision must be between 3 and 6 decimal places")
    scale = 10 ** precision
    qlat = round(point.lat * scale) + 90 * scale
    qlon = round(point.lon * scale) + 180 * scale
    return _interleave_bits(qlat, qlon)


def quantize(point: GeoPoint, precision: int = 5) -> GeoPoint:
    """The representative point of a quantization bucket."""
    scale = 10 ** precision
    return GeoPoint(round(point.lat * scale) / scale, round(point.lon * scale) / scale)


@dataclass(frozen=True)
class CircleCoverage:
    """Coverage region of a roadside location prover: a geodesic disc."""

    center: GeoPoint
    radius_m: float

    def contains(self, point: GeoPoint) -> bool:
        return haversine_m(self.center, point) <= self.radius_m


@dataclass(frozen=True)
class PolygonCoverage:
    """Polygonal coverage region (even-odd rule, lat/lon treated planar)."""

    vertices: tuple[GeoPoint, ...]

    def contains(self, point: GeoPoint) -> bool:
        inside = False
        n = len(self.vertices)
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            if (a.lat > point.lat) != (b.lat > point.lat):
                t = (point.lat - a.lat) / (b.lat - a.lat)
                if point.lon < a.lon + t * (b.lon - a.lon):
                    inside = not inside
        return inside


EARTH_RADIUS_M = 6_371_000.0


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    lat1, lon1, lat2, lon2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    s = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(s))
