"""Great-circle geometry and the distance-to-latency conversion.

Latencies between geo-located routers are derived from their great-circle
distance on a sphere, divided by the signal propagation speed in fiber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0

# Speed of light in fiber, ~2/3 c. Configurable via the `speed_km_s`
# argument everywhere it matters; this is the documented default.
PROPAGATION_SPEED_KM_S = 200_000.0


@dataclass(frozen=True)
class GeoCoord:
    """A point on the sphere, degrees. lat in [-90, 90], lon in (-180, 180]."""

    lat: float
    lon: float

    def __post_init__(self):
        object.__setattr__(self, "lat", float(self.lat))
        object.__setattr__(self, "lon", float(self.lon))
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 < self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


def haversine_km(a: GeoCoord, b: GeoCoord) -> float:
    """Great-circle distance in km between two coordinates (spherical earth)."""
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = math.radians(b.lat - a.lat)
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    # Clamp against rounding before asin; h can exceed 1 by ~1e-16 at antipodes.
    h = min(1.0, h)
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def great_circle_latency(a: GeoCoord, b: GeoCoord, speed_km_s: float = PROPAGATION_SPEED_KM_S) -> float:
    """One-way propagation latency in milliseconds along the great circle a-b.

    Symmetric in its arguments and zero for identical points.
    """
    return haversine_km(a, b) / speed_km_s * 1000.0
