"""Simulation of capacitively coupled relaxation-oscillator networks that solve MaxCut."""
from .analysis import (
    HarmonicRatio,
    PhaseVector,
    Readout,
    SpectrumError,
    UnsynchronizedError,
    bipartition_residual,
    device_sweep_grid,
    extract_phases,
    graph_readout,
    harmonic_ratio,
    phases_to_spins,
    sweep_harmonic_ratio,
    synth_relaxation,
)
from .graphlib import (
    CutResult,
    Graph,
    GraphFormatError,
    brute_force_maxcut,
    complete_graph,
    cut_value,
    cycle_graph,
    gen_random,
    ising_energy,
    load_graph,
    save_graph,
)
from .harness import (
    ComparisonRow,
    ExperimentSpec,
    GraphEntry,
    Machine,
    TrialResult,
    compare_machines,
    run_experiment,
)
from .network import (
    CouplingSpec,
    InjectionConfig,
    InstabilityError,
    NetworkState,
    SimConfig,
    Trace,
    assemble_mass_matrix,
    run,
)
from .oscillator import (
    ComparatorState,
    Kind,
    NonOscillationError,
    OscillatorParams,
    branch_conductance,
    closed_form_timing,
    comparator_update,
    simulate_single,
)

__version__ = "0.1.0"
