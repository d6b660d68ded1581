from dataclasses import dataclass


@dataclass
class RunRecord:
    """Metrics of one solver run on one channel realization.

    Scenario coordinates are filled in by the experiment harness; solvers
    only set the method, mode and metric fields.
    """

    method: str
    mode: str
    min_snr: float
    se: float
    n_tx: int = 0
    n_rx: int = 0
    n_rf: int = 0
    k_users: int = 0
    scenario: str = ""
    realization: int = 0
    seed: int | None = None
    wall_ms: float | None = None
    trace: tuple | None = None
    error: str | None = None
