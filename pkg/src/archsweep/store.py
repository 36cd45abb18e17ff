"""Persistent store of per-(hardware, kernel, size) tile solutions.

Records are newline-delimited JSON, keyed by a hash of a canonical
serialization of every input the solution depends on (kernel, size, hardware,
machine constants, search bounds, time-model id).  Workload frequencies are
intentionally not part of the key: reweighting a finished exploration must
hit the cache for every instance.  Interrupted runs resume at record
granularity.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .area import HardwareConfig
from .timemodel import MachineConstants, TileConfig
from .tiles import TileSearchBounds, TileSolution
from .workload import ProblemSize, StencilKernel

__all__ = ["InstanceRecord", "ResultsStore", "instance_key"]


def instance_key(
    kern: StencilKernel,
    size: ProblemSize,
    hw: HardwareConfig,
    mc: MachineConstants,
    bounds: TileSearchBounds,
    model_id: str,
) -> str:
    """Content hash identifying one solved instance."""
    payload = {
        "kernel": kern.to_dict(),
        "size": size.to_dict(),
        "hw": hw.to_dict(),
        "machine": mc.to_dict(),
        "bounds": bounds.to_dict(),
        "model": model_id,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:32]


@dataclass(frozen=True)
class InstanceRecord:
    """One cached tile solution together with the inputs that identify it."""

    key: str
    kernel: str
    size: ProblemSize
    hw: HardwareConfig
    solution: TileSolution

    def to_json(self) -> str:
        sol = self.solution
        doc = {
            "key": self.key,
            "hw": self.hw.to_dict(),
            "kernel": self.kernel,
            "size": self.size.to_dict(),
            "tile": sol.tile.to_dict() if sol.tile is not None else None,
            "k": sol.tile.blocks if sol.tile is not None else None,
            "time_s": sol.time_s,
            "feasible": sol.feasible,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "InstanceRecord":
        doc = json.loads(line)
        tile = None
        if doc.get("tile") is not None:
            tile = TileConfig.from_dict(doc["tile"], blocks=int(doc["k"]))
        solution = TileSolution(tile=tile, time_s=doc["time_s"], feasible=doc["feasible"])
        return cls(
            key=doc["key"],
            kernel=doc["kernel"],
            size=ProblemSize.from_dict(doc["size"]),
            hw=HardwareConfig.from_dict(doc["hw"]),
            solution=solution,
        )


class ResultsStore:
    """Append-only NDJSON store; later records win on duplicate keys."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.exists()

    def iter_records(self) -> Iterator[InstanceRecord]:
        if not self.path.exists():
            return
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield InstanceRecord.from_json(line)
                except (ValueError, KeyError) as exc:
                    raise ValueError(f"{self.path}:{lineno}: corrupt record ({exc})") from None

    def load(self) -> dict[str, InstanceRecord]:
        return {rec.key: rec for rec in self.iter_records()}

    def append(self, records: Iterable[InstanceRecord]) -> int:
        """Append records; returns how many were written."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        n = 0
        with open(self.path, "a", encoding="utf-8") as fh:
            for rec in records:
                fh.write(rec.to_json())
                fh.write("\n")
                n += 1
        return n
