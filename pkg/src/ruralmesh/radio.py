"""Wi-Fi link abstraction: range, nominal rate, channel count and fair-share contention."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .model import GeoPoint, distance

MBPS = 1_000_000


class RadioStandard(enum.Enum):
    DOT11B = ("802.11b", 11 * MBPS, 3, 0.10)
    DOT11G = ("802.11g", 54 * MBPS, 3, 0.10)
    DOT11A = ("802.11a", 54 * MBPS, 12, 0.05)

    def __init__(self, label, nominal_bps, channels, default_range_km):
        self.label = label
        self.nominal_bps = nominal_bps
        self.channels = channels
        self.default_range_km = default_range_km

    @classmethod
    def from_label(cls, label: str) -> "RadioStandard":
        for std in cls:
            if std.label == label:
                return std
        raise ValueError(f"unknown radio standard {label!r}")


DEFAULT_EFFICIENCY = 0.5


@dataclass(frozen=True)
class LinkProfile:
    standard: RadioStandard = RadioStandard.DOT11B
    range_km: Optional[float] = None
    efficiency: float = DEFAULT_EFFICIENCY

    def __post_init__(self):
        if self.range_km is None:
            object.__setattr__(self, "range_km", self.standard.default_range_km)
        if not self.range_km > 0:
            raise ValueError("range_km must be positive")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")

    @property
    def site_capacity_bps(self) -> float:
        """Upper bound on aggregate goodput at one fixed site."""
        return self.efficiency * self.standard.nominal_bps * self.standard.channels


def in_range(a: GeoPoint, b: GeoPoint, profile: LinkProfile) -> bool:
    return distance(a, b) <= profile.range_km


def effective_rate(profile: LinkProfile, concurrent_sessions_at_site: int) -> float:
    """Per-session goodput in bits/s when ``concurrent_sessions_at_site`` share one site.

    Sessions are spread over the standard's non-overlapping channels; once
    there are more sessions than channels each gets an equal share.
    """
    k = concurrent_sessions_at_site
    if k < 1:
        raise ValueError("need at least one session")
    base = profile.efficiency * profile.standard.nominal_bps
    channels = profile.standard.channels
    if k <= channels:
        return base
    return base * channels / k


def transfer_time(size_bits: int, rate: float) -> float:
    if size_bits < 0:
        raise ValueError("negative size")
    if rate <= 0:
        raise ValueError("zero-rate link")
    return size_bits / rate
