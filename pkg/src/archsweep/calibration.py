"""Least-squares fitting of per-memory-type linear area models.

This is offline tooling: the explorer always consumes a fixed
:class:`~archsweep.area.AreaCoefficients` set, and this module regenerates
individual (beta, alpha) pairs from ``(size_kB, area_mm2)`` sample files such
as the sweeps produced by SRAM/cache estimation tools.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "AreaSample",
    "LinearFit",
    "DegenerateSamplesError",
    "fit_linear",
    "predict_block_area",
    "read_samples_csv",
    "REFERENCE_SWEEP_SIZES_KB",
]

#: Sweep grids used to produce the shipped coefficient set, per memory type.
REFERENCE_SWEEP_SIZES_KB = {
    "reg": (0.5, 1.0, 2.0, 4.0, 8.0),
    "shared": (24.0, 48.0, 96.0, 192.0, 384.0),
    "l1": (3.0, 6.0, 12.0, 24.0, 48.0, 96.0),
    "l2": (32.0, 64.0, 128.0, 256.0, 512.0),
}


class DegenerateSamplesError(ValueError):
    """Raised when a regression has no spread in the size axis."""


@dataclass(frozen=True)
class AreaSample:
    size_kb: float
    area_mm2: float

    def __post_init__(self) -> None:
        if self.size_kb <= 0:
            raise ValueError(f"size_kb must be > 0, got {self.size_kb}")
        if self.area_mm2 <= 0:
            raise ValueError(f"area_mm2 must be > 0, got {self.area_mm2}")


@dataclass(frozen=True)
class LinearFit:
    beta: float       # slope, mm^2 per kB
    alpha: float      # intercept, mm^2
    r_squared: float  # goodness of fit in [0, 1]

    def to_dict(self) -> dict:
        return {"beta": self.beta, "alpha": self.alpha, "r_squared": self.r_squared}


def fit_linear(samples: list[AreaSample]) -> LinearFit:
    """Ordinary least squares of area against size.

    Minimizes the sum of squared residuals of ``area = beta*size + alpha``.
    ``r_squared`` is ``1 - SS_res/SS_tot``, defined as 1 when the areas have
    no variance.  Raises :class:`DegenerateSamplesError` when fewer than two
    samples are given or all sizes coincide.

    Samples are summed in a canonical order internally, so the result is
    identical (bitwise) no matter how the input is arranged.
    """
    if len(samples) < 2:
        raise DegenerateSamplesError(f"need at least 2 samples, got {len(samples)}")
    samples = sorted(samples, key=lambda s: (s.size_kb, s.area_mm2))
    n = len(samples)
    xbar = sum(s.size_kb for s in samples) / n
    ybar = sum(s.area_mm2 for s in samples) / n
    sxx = sum((s.size_kb - xbar) ** 2 for s in samples)
    if sxx == 0.0:
        raise DegenerateSamplesError("all sample sizes are equal; slope is undefined")
    sxy = sum((s.size_kb - xbar) * (s.area_mm2 - ybar) for s in samples)
    beta = sxy / sxx
    alpha = ybar - beta * xbar
    ss_tot = sum((s.area_mm2 - ybar) ** 2 for s in samples)
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = sum((s.area_mm2 - (beta * s.size_kb + alpha)) ** 2 for s in samples)
        r2 = 1.0 - ss_res / ss_tot
    return LinearFit(beta=beta, alpha=alpha, r_squared=min(max(r2, 0.0), 1.0))


def predict_block_area(fit: LinearFit, size_kb: float, multiplicity: int = 1) -> float:
    """Predicted area of a memory block of ``size_kb``.

    ``multiplicity`` is how many times the block's fixed cost is charged: 1
    for per-SM or per-SM-pair blocks, the SM count for a chip-level block
    whose interface logic replicates per SM.
    """
    if size_kb < 0:
        raise ValueError("size_kb must be >= 0")
    if multiplicity < 1:
        raise ValueError("multiplicity must be >= 1")
    return fit.beta * size_kb + fit.alpha * multiplicity


def read_samples_csv(path: str | Path) -> list[AreaSample]:
    """Read samples from a CSV file with the header ``size_kB,area_mm2``."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty sample file") from None
        if [h.strip() for h in header] != ["size_kB", "area_mm2"]:
            raise ValueError(f"{path}: expected header 'size_kB,area_mm2', got {header!r}")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                samples.append(AreaSample(float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return samples
