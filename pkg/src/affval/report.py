"""Pass/fail records produced by the checking harness."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckReport:
    """Residual + verdict of one numeric check; passed iff residual <= tolerance."""

    name: str
    residual: float
    tolerance: float
    passed: bool = field(init=False)
    witnesses: tuple = ()
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "residual", float(self.residual))
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "passed", bool(self.residual <= self.tolerance))

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.witnesses:
            out["witnesses"] = [
                w.tolist() if hasattr(w, "tolist") else w for w in self.witnesses
            ]
        if self.note:
            out["note"] = self.note
        return out
