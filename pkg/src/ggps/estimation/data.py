from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, EmptyDataset

MIN_FIT_SIZE = 5


@dataclass(frozen=True, eq=False)
class Dataset:
    """Strictly positive lifetimes plus a label saying where they came from."""

    values: np.ndarray
    label: str = ""
    source: str = field(default="", compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size == 0:
            raise EmptyDataset("dataset has no observations")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("observations must be finite and strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def require_fit_size(self) -> None:
        if self.n < MIN_FIT_SIZE:
            raise DomainError(f"need at least {MIN_FIT_SIZE} observations to fit, got {self.n}")


def as_values(data) -> np.ndarray:
    return data.values if isinstance(data, Dataset) else Dataset(data).values
