"""Panel data model shared by every other module.

A :class:`PanelDataset` is a balanced unit x year panel. It is stored as wide
``(n_units, n_years)`` arrays because every estimator works on that layout;
:meth:`PanelDataset.to_frame` gives the long table used for CSV exchange.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import (
    DuplicateCell,
    EnactmentOutOfRange,
    FileUnreadable,
    MissingCell,
    NegativeRate,
    NonContiguousYears,
)

COLUMNS = ("unit", "year", "outcome_rate", "unemployment", "population")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PanelDataset:
    units: tuple[str, ...]
    years: tuple[int, ...]
    outcome: np.ndarray
    unemployment: np.ndarray
    population: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(str(u) for u in self.units))
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        object.__setattr__(self, "outcome", _frozen(np.asarray(self.outcome, dtype=float)))
        object.__setattr__(self, "unemployment", _frozen(np.asarray(self.unemployment, dtype=float)))
        object.__setattr__(self, "population", _frozen(np.asarray(self.population, dtype=np.int64)))
        shape = (len(self.units), len(self.years))
        for name in ("outcome", "unemployment", "population"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_years(self) -> int:
        return len(self.years)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_units, self.n_years)

    def year_index(self, year: int) -> int:
        return int(year) - self.years[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PanelDataset):
            return NotImplemented
        return (
            self.units == other.units
            and self.years == other.years
            and np.array_equal(self.outcome, other.outcome)
            and np.array_equal(self.unemployment, other.unemployment)
            and np.array_equal(self.population, other.population)
        )

    def to_frame(self) -> pd.DataFrame:
        """Long table, one row per (unit, year), units in panel order."""
        n, t = self.shape
        return pd.DataFrame(
            {
                "unit": np.repeat(np.array(self.units, dtype=object), t),
                "year": np.tile(np.array(self.years, dtype=np.int64), n),
                "outcome_rate": self.outcome.ravel(),
                "unemployment": self.unemployment.ravel(),
                "population": self.population.ravel(),
            },
            columns=list(COLUMNS),
        )

    def to_csv(self, path: Optional[str | Path] = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for i, unit in enumerate(self.units):
            for j, year in enumerate(self.years):
                writer.writerow([
                    unit,
                    year,
                    repr(float(self.outcome[i, j])),
                    repr(float(self.unemployment[i, j])),
                    int(self.population[i, j]),
                ])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def validate_panel(raw) -> PanelDataset:
    """Build a :class:`PanelDataset` from long-format rows.

    ``raw`` may be a DataFrame or any iterable of mappings carrying the
    ``unit, year, outcome_rate, unemployment, population`` columns. Units keep
    their order of first appearance.
    """
    df = raw if isinstance(raw, pd.DataFrame) else pd.DataFrame(list(raw))
    missing_cols = [c for c in COLUMNS if c not in df.columns]
    if missing_cols and len(df) == 0:
        raise MissingCell("panel has no rows")
    if missing_cols:
        raise MissingCell(f"missing columns {missing_cols}")
    if len(df) == 0:
        raise MissingCell("panel has no rows")

    units_col = df["unit"].astype(str).to_numpy()
    try:
        years_col = df["year"].to_numpy(dtype=float)
    except (TypeError, ValueError) as exc:
        raise NonContiguousYears(f"non-numeric year: {exc}") from None
    if np.any(years_col != np.round(years_col)):
        bad = int(np.flatnonzero(years_col != np.round(years_col))[0])
        raise NonContiguousYears("non-integer year", units_col[bad], df["year"].iloc[bad])
    years_col = years_col.astype(np.int64)

    seen: set[tuple[str, int]] = set()
    for u, y in zip(units_col, years_col):
        key = (u, int(y))
        if key in seen:
            raise DuplicateCell("duplicate cell", u, int(y))
        seen.add(key)

    rate = df["outcome_rate"].to_numpy(dtype=float)
    unem = df["unemployment"].to_numpy(dtype=float)
    pop = df["population"].to_numpy(dtype=float)
    for name, values, ok in (
        ("outcome_rate", rate, rate >= 0),
        ("unemployment", unem, unem >= 0),
        ("population", pop, pop > 0),
    ):
        bad = np.flatnonzero(~ok)  # NaN fails the comparison too
        if bad.size:
            k = int(bad[0])
            raise NegativeRate(f"invalid {name}={values[k]!r}", units_col[k], int(years_col[k]))
    if np.any(pop != np.round(pop)):
        k = int(np.flatnonzero(pop != np.round(pop))[0])
        raise NegativeRate("population must be an integer count", units_col[k], int(years_col[k]))

    year_set = np.unique(years_col)
    if year_set[-1] - year_set[0] + 1 != len(year_set):
        gaps = sorted(set(range(int(year_set[0]), int(year_set[-1]) + 1)) - set(year_set.tolist()))
        raise NonContiguousYears("years are not contiguous", None, gaps[0])
    years = tuple(int(y) for y in year_set)

    units = tuple(dict.fromkeys(units_col.tolist()))
    u_index = {u: i for i, u in enumerate(units)}
    n, t = len(units), len(years)
    if len(df) != n * t:
        have = {(u, int(y)) for u, y in zip(units_col, years_col)}
        for u in units:
            for y in years:
                if (u, y) not in have:
                    raise MissingCell("unbalanced panel", u, y)

    ii = np.array([u_index[u] for u in units_col])
    jj = years_col - years[0]
    out = np.empty((n, t))
    ue = np.empty((n, t))
    po = np.empty((n, t), dtype=np.int64)
    out[ii, jj] = rate
    ue[ii, jj] = unem
    po[ii, jj] = pop.astype(np.int64)
    return PanelDataset(units, years, out, ue, po)


def read_panel_csv(path: str | Path) -> PanelDataset:
    try:
        df = pd.read_csv(path, dtype={"unit": str}, encoding="utf-8", float_precision="round_trip")
    except FileNotFoundError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from None
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as exc:
        raise FileUnreadable(f"cannot parse {path}: {exc}") from None
    except pd.errors.EmptyDataError:
        raise MissingCell(f"{path} is empty") from None
    return validate_panel(df)


# -- treatment ---------------------------------------------------------------

@dataclass(frozen=True)
class Enactment:
    year: int
    month: int = 1

    def __post_init__(self):
        if not 1 <= int(self.month) <= 12:
            raise EnactmentOutOfRange(f"enactment month {self.month} outside 1..12")


@dataclass(frozen=True)
class TreatmentSchedule:
    """Absorbing adoption record, one optional :class:`Enactment` per unit."""

    units: tuple[str, ...]
    enactments: tuple[Optional[Enactment], ...]

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "enactments", tuple(self.enactments))
        if len(self.units) != len(self.enactments):
            raise ValueError("one enactment slot per unit required")

    @classmethod
    def from_mapping(cls, units: Sequence[str], mapping: Mapping[str, tuple[int, int] | Enactment]):
        slots = []
        for u in units:
            e = mapping.get(u)
            if e is not None and not isinstance(e, Enactment):
                e = Enactment(*e)
            slots.append(e)
        return cls(tuple(units), tuple(slots))

    @classmethod
    def never(cls, units: Sequence[str]) -> "TreatmentSchedule":
        return cls(tuple(units), (None,) * len(units))

    @property
    def treated_mask(self) -> np.ndarray:
        return np.array([e is not None for e in self.enactments], dtype=bool)

    @property
    def n_treated(self) -> int:
        return int(self.treated_mask.sum())

    def as_dict(self) -> dict[str, tuple[int, int]]:
        return {u: (e.year, e.month) for u, e in zip(self.units, self.enactments) if e is not None}


def first_year_fraction(month: int) -> float:
    # enactment on the first day of the month
    return (13 - int(month)) / 12.0


def exposure_matrix(schedule: TreatmentSchedule, panel: PanelDataset | Sequence[int]) -> np.ndarray:
    """Policy exposure A_it in [0, 1] on the panel grid.

    ``panel`` may also be the sequence of panel years; rows follow
    ``schedule.units``.
    """
    years = panel.years if isinstance(panel, PanelDataset) else tuple(int(y) for y in panel)
    if isinstance(panel, PanelDataset) and tuple(panel.units) != tuple(schedule.units):
        raise ValueError("schedule units do not match panel units")
    y0, t = years[0], len(years)
    a = np.zeros((len(schedule.units), t))
    for i, e in enumerate(schedule.enactments):
        if e is None:
            continue
        j = int(e.year) - y0
        if not 0 <= j < t:
            raise EnactmentOutOfRange("enactment year outside panel", schedule.units[i], e.year)
        a[i, j] = first_year_fraction(e.month)
        a[i, j + 1:] = 1.0
    return a


def onset_index(exposure: np.ndarray) -> np.ndarray:
    """Column of the first positive exposure per row, -1 if never treated."""
    pos = exposure > 0
    idx = np.argmax(pos, axis=1)
    return np.where(pos.any(axis=1), idx, -1)


@dataclass(frozen=True, eq=False)
class SimulatedPanel:
    """One simulated dataset.

    ``outcome_untreated`` is the no-policy branch of the generated outcome;
    ``outcome_sim`` adds ``truth * exposure`` to it.
    """

    baseline: PanelDataset
    schedule: TreatmentSchedule
    confounder_c: np.ndarray
    outcome_untreated: np.ndarray
    outcome_sim: np.ndarray
    truth: float
    exposure: np.ndarray = field(repr=False)

    @property
    def covariates(self) -> np.ndarray:
        return self.baseline.unemployment

    @property
    def population(self) -> np.ndarray:
        return self.baseline.population

    @property
    def outcome_treated(self) -> np.ndarray:
        return self.outcome_untreated + self.truth

    def outcome_sd(self) -> float:
        """Sample SD of the simulated outcome over all state-years."""
        return float(np.std(self.outcome_sim, ddof=1))
