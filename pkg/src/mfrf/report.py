"""Solver result records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


def db(x):
    """Power ratio in decibels."""
    return 10.0 * np.log10(x)


@dataclass
class SolverReport:
    """Diagnostics returned next to a designed waveform.

    ``sinr`` is the full quadratic form ``s^H M s``; ``sinr_t`` is the transmit
    part ``a^H S S^H a`` when the disturbance is structured.
    """

    solver: str
    sinr: float
    energy: float
    matching_residuals: List[float]
    sinr_t: Optional[float] = None
    iterations: int = 0
    converged: bool = True
    elapsed: float = 0.0
    trace: List[Dict[str, Any]] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def sinr_db(self) -> float:
        return float(db(self.sinr))

    @property
    def sinr_t_db(self) -> Optional[float]:
        return None if self.sinr_t is None else float(db(self.sinr_t))
