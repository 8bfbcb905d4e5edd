"""Tilings, quasimomenta and per-tiling constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class Tiling(Enum):
    # slug, edge count, matrix dimension, lower end of the band condition on S'
    TRIANGULAR = ("triangular", 3, 6, -0.5)
    # The roots (2 cos t1 +- |1 + e^{i t1} + e^{i t2}|) / 5 reach -13/20 at
    # |cos(t1/2)| = 1/4, t2 = t1/2; the often quoted -3/5 is only the
    # minimum along t1 = pi.  See NOMINAL_LOWER_BOUND.
    ELONGATED_TRIANGULAR = ("elongated-triangular", 5, 10, -0.65)
    TRUNCATED_SQUARE = ("truncated-square", 6, 12, -1.0)
    TRIHEXAGONAL = ("trihexagonal", 6, 12, -0.5)
    SQUARE = ("square", 4, None, -1.0)
    HEXAGONAL = ("hexagonal", 3, None, -1.0)

    def __init__(self, slug: str, edge_count: int, matrix_dim: Optional[int], lower: float):
        self.slug = slug
        self.edge_count = edge_count
        self.matrix_dim = matrix_dim
        self.ac_lower_bound = lower

    @property
    def has_matrix(self) -> bool:
        return self.matrix_dim is not None

    @classmethod
    def from_name(cls, name) -> "Tiling":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-").replace(" ", "-")
        aliases = {"t": "triangular", "et": "elongated-triangular",
                   "trs": "truncated-square", "th": "trihexagonal",
                   "s": "square", "hex": "hexagonal"}
        key = aliases.get(key, key)
        for t in cls:
            if t.slug == key or t.name.lower().replace("_", "-") == key:
                return t
        raise ValueError(f"unknown tiling {name!r}; choose from "
                         + ", ".join(t.slug for t in cls))

    def __str__(self):
        return self.slug


MATRIX_TILINGS = tuple(t for t in Tiling if t.has_matrix)

# Lower band bounds as usually quoted; they differ from the attained minimum
# only for the elongated triangular tiling.
NOMINAL_LOWER_BOUND = {t: t.ac_lower_bound for t in Tiling}
NOMINAL_LOWER_BOUND[Tiling.ELONGATED_TRIANGULAR] = -0.6


def _wrap(theta: float) -> float:
    if -math.pi <= theta <= math.pi:
        return float(theta)
    return float((theta + math.pi) % (2 * math.pi) - math.pi)


@dataclass(frozen=True)
class Quasimomentum:
    """Point of the Brillouin zone ``[-pi, pi]^2``; components are wrapped on construction."""

    theta1: float
    theta2: float

    def __post_init__(self):
        if not (math.isfinite(self.theta1) and math.isfinite(self.theta2)):
            raise ValueError("quasimomentum components must be finite")
        object.__setattr__(self, "theta1", _wrap(self.theta1))
        object.__setattr__(self, "theta2", _wrap(self.theta2))

    def __iter__(self):
        yield self.theta1
        yield self.theta2

    def __neg__(self):
        return Quasimomentum(-self.theta1, -self.theta2)
