"""Linear silicon-area model for GPU-style vector accelerators.

Each memory block (register file, shared memory, L1, L2) costs
``beta * capacity_kB + alpha`` at its structural multiplicity; vector lanes
and common chip overhead are fixed per-unit costs.  Coefficients are
calibrated per fabrication process; the 28 nm set used throughout ships as
``MAXWELL``.

All areas are mm^2, all capacities kB (1 kB = 1024 bytes).  Register file
capacity is expressed per vector unit, shared memory per SM, L1 per SM pair,
L2 as a chip total.  Fetch/decode, instruction cache and load-store logic are
not separately modeled; they are absorbed into the per-lane and per-SM
constants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

__all__ = [
    "AreaCoefficients",
    "HardwareConfig",
    "MAXWELL",
    "GTX980",
    "TITAN_X",
    "sm_area",
    "total_area",
    "area_breakdown",
    "cacheless_area",
    "coefficients_from_dict",
    "load_coefficients",
]


@dataclass(frozen=True)
class AreaCoefficients:
    """Calibrated cost coefficients, all in mm^2 (per kB where applicable)."""

    beta_R: float    # register file, per kB per vector unit
    alpha_R: float   # register file fixed cost per vector unit
    beta_M: float    # shared memory, per kB per SM
    alpha_M: float   # shared memory fixed cost per SM
    beta_L1: float   # L1, per kB per SM pair
    alpha_L1: float  # L1 fixed cost per SM pair
    beta_L2: float   # L2, per kB (chip total)
    alpha_L2: float  # L2 interface cost, charged per SM
    beta_VU: float   # core logic per vector unit, excluding registers
    alpha_oh: float  # common overhead (I/O, routing, schedulers) per SM

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and v >= 0.0):
                raise ValueError(f"coefficient {f.name} must be >= 0, got {v!r}")


#: Canonical 28 nm coefficient set at full precision.  The truncated values
#: sometimes quoted for this process do not reproduce the GTX980 die area;
#: these do, to within 0.003%.
MAXWELL = AreaCoefficients(
    beta_R=0.004305,
    alpha_R=0.001947,
    beta_M=0.01565,
    alpha_M=0.09281,
    beta_L1=0.1604,
    alpha_L1=0.08204,
    beta_L2=0.04197,
    alpha_L2=0.7685,
    beta_VU=0.04282,
    alpha_oh=6.4156,
)


@dataclass(frozen=True)
class HardwareConfig:
    """One point in the accelerator design space.

    ``sm_count`` must be even (>= 2) and ``vector_units`` a multiple of 32,
    matching the granularity at which such chips are actually built.  A zero
    ``vector_units`` is tolerated so degenerate corners of the model can be
    probed directly.
    """

    sm_count: int          # streaming multiprocessors on the chip
    vector_units: int      # vector lanes per SM
    shared_kb: float = 0.0  # shared memory per SM
    regfile_kb: float = 2.0  # register file per vector unit
    l1_kb: float = 0.0     # L1 per SM pair
    l2_kb: float = 0.0     # L2, chip total

    def __post_init__(self) -> None:
        if self.sm_count < 2 or self.sm_count % 2 != 0:
            raise ValueError(f"sm_count must be even and >= 2, got {self.sm_count}")
        if self.vector_units < 0 or self.vector_units % 32 != 0:
            raise ValueError(
                f"vector_units must be a non-negative multiple of 32, got {self.vector_units}"
            )
        for name in ("shared_kb", "regfile_kb", "l1_kb", "l2_kb"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0")
            # normalize so equal configs serialize (and hash) identically no
            # matter whether sizes came in as ints or floats
            object.__setattr__(self, name, float(v))

    def to_dict(self) -> dict:
        return {
            "sm_count": self.sm_count,
            "vector_units": self.vector_units,
            "shared_kb": self.shared_kb,
            "regfile_kb": self.regfile_kb,
            "l1_kb": self.l1_kb,
            "l2_kb": self.l2_kb,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HardwareConfig":
        return cls(**d)


#: Reference chips used to calibrate and validate the coefficient set.
GTX980 = HardwareConfig(16, 128, shared_kb=96, regfile_kb=2, l1_kb=48, l2_kb=2048)
TITAN_X = HardwareConfig(24, 128, shared_kb=96, regfile_kb=2, l1_kb=48, l2_kb=3072)


def sm_area(cfg: HardwareConfig, coeffs: AreaCoefficients = MAXWELL) -> float:
    """Area of one SM in mm^2, including its share of chip-level overhead.

    Covers everything except the chip-global L2 capacity term, so that
    ``total_area == sm_count * sm_area + beta_L2 * l2_kb`` holds exactly.
    """
    per_lane = coeffs.beta_VU + coeffs.alpha_R + coeffs.beta_R * cfg.regfile_kb
    return (
        cfg.vector_units * per_lane
        + (coeffs.beta_M * cfg.shared_kb + coeffs.alpha_M)
        + 0.5 * (coeffs.beta_L1 * cfg.l1_kb + coeffs.alpha_L1)
        + coeffs.alpha_L2
        + coeffs.alpha_oh
    )


def total_area(cfg: HardwareConfig, coeffs: AreaCoefficients = MAXWELL) -> float:
    """Total chip area in mm^2."""
    return cfg.sm_count * sm_area(cfg, coeffs) + coeffs.beta_L2 * cfg.l2_kb


def area_breakdown(cfg: HardwareConfig, coeffs: AreaCoefficients = MAXWELL) -> dict[str, float]:
    """Split ``total_area`` into six components that sum to it exactly.

    Keys: ``vector_logic``, ``registers``, ``shared``, ``l1``, ``l2``,
    ``overhead``.  A memory block of zero capacity does not exist on the die,
    so its fixed (alpha) cost is reported under ``overhead`` rather than under
    the block; the per-SM L2 interface cost is always overhead, leaving ``l2``
    as the pure capacity term.
    """
    lanes = cfg.sm_count * cfg.vector_units
    vector_logic = coeffs.beta_VU * lanes
    registers = (
        (coeffs.beta_R * cfg.regfile_kb + coeffs.alpha_R) * lanes if cfg.regfile_kb > 0 else 0.0
    )
    shared = (
        (coeffs.beta_M * cfg.shared_kb + coeffs.alpha_M) * cfg.sm_count if cfg.shared_kb > 0 else 0.0
    )
    l1 = (
        0.5 * (coeffs.beta_L1 * cfg.l1_kb + coeffs.alpha_L1) * cfg.sm_count if cfg.l1_kb > 0 else 0.0
    )
    l2 = coeffs.beta_L2 * cfg.l2_kb
    total = total_area(cfg, coeffs)
    overhead = total - vector_logic - registers - shared - l1 - l2
    return {
        "vector_logic": vector_logic,
        "registers": registers,
        "shared": shared,
        "l1": l1,
        "l2": l2,
        "overhead": overhead,
    }


def cacheless_area(cfg: HardwareConfig, coeffs: AreaCoefficients = MAXWELL) -> float:
    """Area of ``cfg`` with the L1/L2 blocks removed entirely.

    Unlike setting ``l1_kb = l2_kb = 0`` (which still charges the blocks'
    fixed costs), this deletes the cache blocks and their overheads, modeling
    a die on which they were never placed.
    """
    per_lane = coeffs.beta_VU + coeffs.alpha_R + coeffs.beta_R * cfg.regfile_kb
    per_sm = (
        cfg.vector_units * per_lane
        + (coeffs.beta_M * cfg.shared_kb + coeffs.alpha_M)
        + coeffs.alpha_oh
    )
    return cfg.sm_count * per_sm


_COEFF_NAMES = tuple(f.name for f in fields(AreaCoefficients))


def coefficients_from_dict(data: dict) -> AreaCoefficients:
    """Build coefficients from a mapping with exactly the ten field names."""
    got = set(data)
    want = set(_COEFF_NAMES)
    if got != want:
        missing = sorted(want - got)
        extra = sorted(got - want)
        parts = []
        if missing:
            parts.append(f"missing {missing}")
        if extra:
            parts.append(f"unexpected {extra}")
        raise ValueError("bad coefficient document: " + ", ".join(parts))
    return AreaCoefficients(**{k: float(v) for k, v in data.items()})


def load_coefficients(path: str | Path) -> AreaCoefficients:
    """Load a coefficient set from a JSON document."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("coefficient document must be a JSON object")
    return coefficients_from_dict(data)
