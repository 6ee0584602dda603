"""Rydberg-state data: van der Waals coefficients and decay rates per n.

The shipped table (``data/rb_ns.csv``) holds Rb nS values in laboratory units
(GHz um^6 for C6, inverse microseconds for the decay rate) together with a
provenance string per row.  On load everything is converted to natural units
using the D2-line width Gamma = 2 pi x 6.07 MHz and wavelength 780 nm, so a
C6 value comes out in Gamma lambda^6 and plugs directly into the interaction
models.

Interpolation between tabulated n is log-log and restricted to the table
hull; extrapolation is refused.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .units import GAMMA_HZ, LAMBDA_UM

# C6 tables quote the level shift as a plain frequency (U/h), decay rates as
# inverse lifetimes; the natural unit for both is the D2 rate 2 pi x 6.07 MHz.
_GAMMA_PER_US = 2.0 * math.pi * GAMMA_HZ * 1e-6
_C6_TO_NATURAL = (1e9 / GAMMA_HZ) / LAMBDA_UM**6

_COLUMNS = ["n", "C6_GHz_um6", "gamma_per_us", "source"]


@dataclass(frozen=True)
class RydbergState:
    """Single-n parameters in natural units (C6 in Gamma lambda^6, gamma in Gamma)."""

    n: int
    c6: float
    gamma: float
    provenance: str

    @property
    def c6_physical(self) -> float:
        """C6 in GHz um^6."""
        return c6_from_natural(self.c6)

    @property
    def gamma_physical(self) -> float:
        """Decay rate in inverse microseconds."""
        return gamma_from_natural(self.gamma)


def c6_to_natural(c6_ghz_um6: float) -> float:
    return c6_ghz_um6 * _C6_TO_NATURAL


def c6_from_natural(c6: float) -> float:
    return c6 / _C6_TO_NATURAL


def gamma_to_natural(gamma_per_us: float) -> float:
    return gamma_per_us / _GAMMA_PER_US


def gamma_from_natural(gamma: float) -> float:
    return gamma * _GAMMA_PER_US


class RydbergTable:
    """Immutable, n-sorted collection of RydbergState rows."""

    def __init__(self, states: list[RydbergState]):
        if not states:
            raise ConfigError("Rydberg data table is empty")
        self._states = sorted(states, key=lambda s: s.n)
        ns = [s.n for s in self._states]
        if len(set(ns)) != len(ns):
            raise ConfigError("duplicate n in Rydberg data table")
        for i in range(1, len(self._states)):
            if self._states[i].gamma >= self._states[i - 1].gamma:
                raise ConfigError(
                    f"decay rate not decreasing in n at table row {i} (n={ns[i]})"
                )
        for i, s in enumerate(self._states):
            if s.c6 <= 0 or s.gamma <= 0:
                raise ConfigError(f"non-positive C6 or gamma at table row {i} (n={s.n})")

    def __len__(self) -> int:
        return len(self._states)

    def __iter__(self):
        return iter(self._states)

    @property
    def ns(self) -> list[int]:
        return [s.n for s in self._states]

    @property
    def hull(self) -> tuple[int, int]:
        return self._states[0].n, self._states[-1].n

    def get(self, n: int) -> RydbergState:
        for s in self._states:
            if s.n == n:
                return s
        raise ConfigError(f"n={n} not tabulated (rows: {self.hull[0]}..{self.hull[1]})")

    def interpolate(self, n: int) -> RydbergState:
        """Tabulated row if n matches, else log-log interpolation between neighbors."""
        lo, hi = self.hull
        if not lo <= n <= hi:
            raise ConfigError(f"n={n} outside table hull [{lo}, {hi}]")
        for s in self._states:
            if s.n == n:
                return s
        # bracket scan; the table is small
        for i in range(1, len(self._states)):
            if self._states[i].n > n:
                a, b = self._states[i - 1], self._states[i]
                break
        t = (math.log(n) - math.log(a.n)) / (math.log(b.n) - math.log(a.n))
        c6 = math.exp((1 - t) * math.log(a.c6) + t * math.log(b.c6))
        gm = math.exp((1 - t) * math.log(a.gamma) + t * math.log(b.gamma))
        return RydbergState(
            n=n, c6=c6, gamma=gm,
            provenance=f"log-log interpolation between n={a.n} and n={b.n}",
        )


def default_table_path() -> Path:
    return Path(str(resources.files("superatom").joinpath("data/rb_ns.csv")))


def load_states(path: str | Path | None = None) -> RydbergTable:
    """Parse and validate a Rydberg data CSV, converting to natural units."""
    p = Path(path) if path is not None else default_table_path()
    if not p.exists():
        raise ConfigError(f"Rydberg data file not found: {p}")
    states = []
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _COLUMNS:
            raise ConfigError(
                f"bad Rydberg data header {header!r}, expected {_COLUMNS!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise ConfigError(f"{p}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                n = int(row[0])
                c6_phys = float(row[1])
                gamma_phys = float(row[2])
            except ValueError as exc:
                raise ConfigError(f"{p}:{lineno}: {exc}") from exc
            states.append(
                RydbergState(
                    n=n,
                    c6=c6_to_natural(c6_phys),
                    gamma=gamma_to_natural(gamma_phys),
                    provenance=row[3],
                )
            )
    return RydbergTable(states)
