"""Relay-test identification and tuning toolkit (python surface of the C++ core)."""

from ._core import (
    BlockDiagram,
    CascadeLoop,
    CascadeProbe,
    CascadeStructure,
    CostMatrix,
    DiscreteProcess,
    DiscretizedDomain,
    DiscretizeError,
    DomainBox,
    GainError,
    HarmonicBalance,
    HarmonicContent,
    InnerParams,
    ModelError,
    MRFTConfig,
    MRFTError,
    MRFTOutcome,
    OscillationRecord,
    OuterParams,
    PDGains,
    PhaseResult,
    PhaseSearch,
    PIGains,
    RationalBlock,
    SimConfig,
    SimError,
    TimeSeries,
    TunedPD,
    TuningError,
    TuningSpec,
    ZetaRecord,
    ZetaTable,
    __version__,
    altitude_box,
    attitude_box,
    build_cascade,
    compute_zeta_table,
    cost_matrix,
    detect_steady_oscillation,
    deterioration,
    discretize_inner,
    discretize_outer,
    estimate_gain,
    find_distinguishing_phase,
    freq_response,
    harmonic_content,
    inner_plant,
    ise_unit_step,
    loop_margins,
    measure_zeta,
    optimize_pd,
    outer_plant,
    preprocess_to_input,
    read_domain,
    run_relay_test,
    scale_controller,
    side_box,
    side_chain,
    solve_harmonic_balance,
    write_domain,
    yaw_plant,
    zeta_df,
)

__all__ = [
    "BlockDiagram",
    "CascadeLoop",
    "CascadeProbe",
    "CascadeStructure",
    "CostMatrix",
    "DiscreteProcess",
    "DiscretizedDomain",
    "DiscretizeError",
    "DomainBox",
    "GainError",
    "HarmonicBalance",
    "HarmonicContent",
    "InnerParams",
    "ModelError",
    "MRFTConfig",
    "MRFTError",
    "MRFTOutcome",
    "OscillationRecord",
    "OuterParams",
    "PDGains",
    "PhaseResult",
    "PhaseSearch",
    "PIGains",
    "RationalBlock",
    "SimConfig",
    "SimError",
    "TimeSeries",
    "TunedPD",
    "TuningError",
    "TuningSpec",
    "ZetaRecord",
    "ZetaTable",
    "__version__",
    "altitude_box",
    "attitude_box",
    "build_cascade",
    "compute_zeta_table",
    "cost_matrix",
    "detect_steady_oscillation",
    "deterioration",
    "discretize_inner",
    "discretize_outer",
    "estimate_gain",
    "find_distinguishing_phase",
    "freq_response",
    "harmonic_content",
    "inner_plant",
    "ise_unit_step",
    "loop_margins",
    "measure_zeta",
    "optimize_pd",
    "outer_plant",
    "preprocess_to_input",
    "read_domain",
    "run_relay_test",
    "scale_controller",
    "side_box",
    "side_chain",
    "solve_harmonic_balance",
    "write_domain",
    "yaw_plant",
    "zeta_df",
]
