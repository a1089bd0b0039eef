"""Installed and candidate strain-gauge layouts on the wing planform.

Positions are planform fractions: ``x`` runs along the chord, ``y`` along the
span from root (0) to tip (1). A gauge is excluded when it lies inside any
damage region, because a gauge bonded to a damaged patch would read the damage
directly rather than through the surrounding structure.
"""

from __future__ import annotations

import dataclasses
import hashlib
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .config import DEFAULT_DAMAGE_REGIONS, DamageRegion
from .exceptions import DomainError

__all__ = (
    "Gauge",
    "SensorLayout",
    "candidate_layout",
    "installed_layout",
)

_INSTALLED_ROWS: tuple[tuple[float, int], ...] = ((0.30, 12), (0.70, 12))
_INSTALLED_SPAN = (0.25, 0.75)
_CANDIDATE_ROWS: tuple[tuple[float, int], ...] = ((0.15, 14), (0.45, 14), (0.55, 15), (0.85, 15))
_CANDIDATE_SPAN = (0.10, 0.95)


@dataclass(frozen=True)
class Gauge:
    """A uniaxial spanwise strain gauge.

    Args:
        id: Stable positive integer label
        x: Chordwise fraction
        y: Spanwise fraction
        installed: Whether the gauge is part of the installed suite
        excluded: Whether the gauge lies inside a damage region
    """

    id: int
    x: float
    y: float
    installed: bool = True
    excluded: bool = False

    @property
    def feature_name(self) -> str:
        return f"gauge_{self.id}"


@dataclass(frozen=True)
class SensorLayout:
    """An ordered, immutable set of gauges.

    Feature column ``k`` of any dataset built on this layout is the ``k``-th
    usable gauge, in ``gauges`` order.
    """

    gauges: tuple[Gauge, ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        ids = [g.id for g in self.gauges]
        if any(i <= 0 for i in ids):
            raise DomainError("Gauge ids must be positive")
        if len(set(ids)) != len(ids):
            raise DomainError("Gauge ids must be unique")
        for g in self.gauges:
            if not (0.0 <= g.x <= 1.0 and 0.0 <= g.y <= 1.0):
                raise DomainError(f"Gauge {g.id} at ({g.x}, {g.y}) lies outside the planform")

    def __iter__(self) -> Iterator[Gauge]:
        return iter(self.gauges)

    def __len__(self) -> int:
        return len(self.gauges)

    @property
    def usable(self) -> tuple[Gauge, ...]:
        return tuple(g for g in self.gauges if not g.excluded)

    @property
    def usable_ids(self) -> tuple[int, ...]:
        return tuple(g.id for g in self.usable)

    @property
    def excluded_ids(self) -> tuple[int, ...]:
        return tuple(g.id for g in self.gauges if g.excluded)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(g.feature_name for g in self.usable)

    @property
    def max_id(self) -> int:
        return max((g.id for g in self.gauges), default=0)

    def by_id(self, gauge_id: int) -> Gauge:
        for g in self.gauges:
            if g.id == gauge_id:
                return g
        raise KeyError(f"No gauge with id {gauge_id} in layout {self.name!r}")

    def with_regions(self, regions: Sequence[DamageRegion]) -> SensorLayout:
        """Re-derive every exclusion flag from the given damage regions."""
        return SensorLayout(
            tuple(dataclasses.replace(g, excluded=_inside_any(g, regions)) for g in self.gauges),
            name=self.name,
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "id": [g.id for g in self.gauges],
                "x": [g.x for g in self.gauges],
                "y": [g.y for g in self.gauges],
                "installed": [g.installed for g in self.gauges],
                "excluded": [g.excluded for g in self.gauges],
            }
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, name: str = "custom") -> SensorLayout:
        return cls(
            tuple(
                Gauge(int(r.id), float(r.x), float(r.y), bool(r.installed), bool(r.excluded))
                for r in frame.itertuples(index=False)
            ),
            name=name,
        )

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: str | Path, name: str = "custom") -> SensorLayout:
        return cls.from_frame(pd.read_csv(path, float_precision="round_trip"), name=name)

    def layout_hash(self) -> str:
        text = self.to_frame().to_csv(index=False, float_format="%.17g")
        return hashlib.sha256(text.encode()).hexdigest()


def _inside_any(gauge: Gauge, regions: Sequence[DamageRegion]) -> bool:
    return any(r.contains(gauge.x, gauge.y) for r in regions)


def _rows(
    rows: Sequence[tuple[float, int]],
    span_range: tuple[float, float],
    first_id: int,
    installed: bool,
    regions: Sequence[DamageRegion],
) -> list[Gauge]:
    gauges: list[Gauge] = []
    next_id = first_id
    for chord, count in rows:
        for y in np.linspace(span_range[0], span_range[1], count):
            g = Gauge(next_id, chord, float(y), installed=installed)
            gauges.append(dataclasses.replace(g, excluded=_inside_any(g, regions)))
            next_id += 1
    return gauges


def installed_layout(regions: Sequence[DamageRegion] = DEFAULT_DAMAGE_REGIONS) -> SensorLayout:
    """The 24-gauge installed suite: two spanwise rows between 25% and 75% span.

    Ids run root to tip along the 0.30-chord row (1-12), then the 0.70-chord row
    (13-24). With the default damage regions gauges 17, 18, 23 and 24 are excluded.
    """
    return SensorLayout(tuple(_rows(_INSTALLED_ROWS, _INSTALLED_SPAN, 1, True, regions)), name="installed")


def candidate_layout(regions: Sequence[DamageRegion] = DEFAULT_DAMAGE_REGIONS) -> SensorLayout:
    """The installed suite plus 58 candidate locations in four spanwise rows (ids 25-82)."""
    installed = _rows(_INSTALLED_ROWS, _INSTALLED_SPAN, 1, True, regions)
    candidates = _rows(_CANDIDATE_ROWS, _CANDIDATE_SPAN, len(installed) + 1, False, regions)
    return SensorLayout(tuple(installed + candidates), name="candidate")
