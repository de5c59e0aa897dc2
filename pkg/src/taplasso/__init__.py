"""Correlator-domain GNSS spoofing detection via sparse triangle decomposition.

The pipeline: generate C/A code replicas (:mod:`~taplasso.codegen`),
build a dictionary of shifted correlation triangles
(:mod:`~taplasso.dictionary`), synthesize or ingest complex correlator
snapshots (:mod:`~taplasso.simulator`), decompose them with LASSO /
multi-LASSO solvers (:mod:`~taplasso.lasso`), threshold the sparse
output into a clean/spoofed verdict (:mod:`~taplasso.detector`), and run
PSR / DER / PFA evaluation campaigns (:mod:`~taplasso.metrics`).
"""

from ._kernels import BACKEND
from .codegen import CaCode, SampledCode, generate_ca_code, sample_code
from .detector import DetectionReport, classify_trial, detect_peaks
from .dictionary import (
    CorrelatorConfig,
    Dictionary,
    GridConfig,
    SubDictionary,
    build_dictionary,
    build_replica_bank,
    build_signal_grid,
    decimate_dictionary,
    ideal_dictionary,
    make_dictionary,
)
from .lasso import (
    LassoProblem,
    NonConvergenceError,
    SparseSelector,
    solve_iq_lasso,
    solve_lasso,
    solve_multi_lasso,
)
from .metrics import (
    DerScenario,
    ScenePipeline,
    SolverSettings,
    run_der_campaign,
    run_pfa_campaign,
    run_psr_sweep,
)
from .simulator import (
    CorrelatorSnapshot,
    PeakSpec,
    ReplicaBank,
    SnapshotParams,
    load_snapshot,
    save_snapshot,
    simulate_snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CaCode",
    "CorrelatorConfig",
    "CorrelatorSnapshot",
    "DerScenario",
    "DetectionReport",
    "Dictionary",
    "GridConfig",
    "LassoProblem",
    "NonConvergenceError",
    "PeakSpec",
    "ReplicaBank",
    "SampledCode",
    "ScenePipeline",
    "SnapshotParams",
    "SolverSettings",
    "SparseSelector",
    "SubDictionary",
    "build_dictionary",
    "build_replica_bank",
    "build_signal_grid",
    "classify_trial",
    "decimate_dictionary",
    "detect_peaks",
    "generate_ca_code",
    "ideal_dictionary",
    "load_snapshot",
    "make_dictionary",
    "run_der_campaign",
    "run_pfa_campaign",
    "run_psr_sweep",
    "sample_code",
    "save_snapshot",
    "simulate_snapshot",
    "solve_iq_lasso",
    "solve_lasso",
    "solve_multi_lasso",
]
