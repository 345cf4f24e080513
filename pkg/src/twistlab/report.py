"""Check records and verification reports with stable JSON output."""

from __future__ import annotations

import json
import math
import platform
from dataclasses import asdict, dataclass, field
from typing import Any


def _jsonable(x: Any):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, complex):
        if x.imag == 0:
            return _jsonable(x.real)
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    if hasattr(x, "dtype") and getattr(x, "shape", None) == ():
        return _jsonable(x.item())
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    try:
        f = float(x)
    except (TypeError, ValueError):
        return str(x)
    if math.isnan(f) or math.isinf(f):
        return str(f)
    # a fixed number of significant digits keeps reports byte-stable
    return float(f"{f:.12g}")


@dataclass
class CheckRecord:
    """One verified statement.

    ``anchor`` names the identity or construction being checked; ``gated``
    checks decide the exit status, diagnostic ones never do.
    """

    name: str
    anchor: str
    backend: str
    value: Any
    residual: float
    threshold: float
    passed: bool
    gated: bool = True
    details: dict = field(default_factory=dict)


def check(name, anchor, residual, threshold, backend="exact_trace", value=None, gated=True, **details) -> CheckRecord:
    residual = float(residual) if not isinstance(residual, complex) else abs(residual)
    return CheckRecord(
        name=name,
        anchor=anchor,
        backend=backend,
        value=value,
        residual=residual,
        threshold=threshold,
        passed=bool(residual <= threshold),
        gated=gated,
        details=details,
    )


@dataclass
class VerificationReport:
    suite: str
    scenario: str
    config: dict
    records: list[CheckRecord] = field(default_factory=list)
    wall_time: float = 0.0

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.records.append(rec)
        return rec

    def extend(self, recs) -> None:
        self.records.extend(recs)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records if r.gated)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.gated and not r.passed]

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "suite": self.suite,
            "scenario": self.scenario,
            "config": self.config,
            "passed": self.passed,
            "environment": environment_fingerprint(),
            "records": [asdict(r) for r in self.records],
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return _jsonable(d)

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    def summary_lines(self) -> list[str]:
        lines = []
        for r in self.records:
            tag = "PASS" if r.passed else ("FAIL" if r.gated else "info")
            lines.append(f"[{tag}] {r.name}: residual={r.residual:.3e} threshold={r.threshold:.1e} ({r.backend})")
        return lines


def environment_fingerprint() -> dict:
    import numpy
    import scipy

    from . import __version__

    return {
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "twistlab": __version__,
    }
