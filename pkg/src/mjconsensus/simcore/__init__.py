from .disturbance import DisturbanceSpec, Samples, SquareWave, Zero
from .export import csv_header, read_csv, write_csv
from .metrics import (
    ConsensusSignals,
    PerformanceReport,
    StepMetrics,
    Unsettled,
    ZeroDenominator,
    consensus_norm,
    consensus_signals,
    jtr_ratio,
    require_denominator,
    step_metrics,
    transient_metrics,
)
from .simulate import NumericalBlowup, Trajectory, simulate_full_order, simulate_reduced_order
from .metrics import PathSummary, aggregate, scenario_denominator, summarize_path
from .montecarlo import MonteCarloResult, run_paths
