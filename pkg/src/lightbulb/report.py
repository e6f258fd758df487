"""Solver reports and their JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class SolveReport:
    mode: str
    n: int
    d: int
    found: tuple[int, int] | None
    verified_inner_product: int | None
    stage: str  # within_group | holdout_scan | vote | fallback | not_found
    plan: dict = field(default_factory=dict)
    rounds: list[dict] = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    seed: int | None = None
    wall_ms: dict = field(default_factory=dict)
    success: bool | None = None
    pairs: list[tuple[int, int]] | None = None  # findcorr only

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "mode": self.mode,
            "n": self.n,
            "d": self.d,
            "plan": self.plan,
            "found": list(self.found) if self.found is not None else None,
            "verified_inner_product": self.verified_inner_product,
            "stage": self.stage,
            "rounds": self.rounds,
            "counters": self.counters,
            "seed": self.seed,
            "wall_ms": self.wall_ms if timing else None,
        }
        if self.pairs is not None:
            out["pairs"] = [list(p) for p in self.pairs]
        if self.success is not None:
            out["success"] = self.success
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, separators=(",", ":"))

    def judge(self, planted) -> bool:
        """Record whether the answer matches ground truth."""
        truth = sorted(tuple(sorted(p)) for p in planted)
        if self.pairs is not None:
            got = sorted(tuple(sorted(p)) for p in self.pairs)
        else:
            got = [tuple(sorted(self.found))] if self.found is not None else []
        self.success = got == truth
        return self.success
