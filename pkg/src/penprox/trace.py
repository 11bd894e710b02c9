"""Per-iteration records produced by solver runs."""

from dataclasses import dataclass, field

__all__ = ["TraceRecord", "ConvergenceTrace"]


@dataclass
class TraceRecord:
    k: int
    objective: float
    feasibility: float
    psi: float
    rho: float
    tau: float
    wall_ms: float = 0.0
    extra: dict = None


@dataclass
class ConvergenceTrace:
    """Records for k = 0 .. iterations, plus run metadata.

    ``meta`` carries everything a bound check needs to reconstruct the
    guarantee constants: initial point, rho0/gamma0, the operator norm the
    run used, the algorithm name and smooth-term constant when present.
    ``notes`` collects non-fatal observations (skipped checks, overrides).
    """

    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    diagnostics: list = None

    @property
    def iterations(self):
        return len(self.records) - 1

    def column(self, name):
        return [getattr(r, name) for r in self.records]

    def final(self):
        return self.records[-1]
