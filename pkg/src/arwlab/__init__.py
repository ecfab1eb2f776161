"""Activated random walk laboratory.

Simulation and verification tools for activated random walks on finite
tori and boxes: an instruction-stack toppling engine with exact replay,
greedy orderings and their reduced birth-death chains, staged
stabilization keeping a boundary ring untouched, jump-only spreading,
closed-form bounds, and deterministic experiment drivers.
"""

from .lattice import (
    EXTERIOR,
    BoxFamily,
    Topology,
    box_boundaries,
    box_lambda,
    nested_boxes,
)
from .engine import (
    SLEEP,
    Configuration,
    CoupledSleepInsertionField,
    JumpOnlyField,
    ScriptedField,
    SleepFreeOutsideField,
    StabilizeOutcome,
    StandardField,
    couple_insert_sleeps,
    is_stable,
    particle_count,
    sample_instruction,
    stabilize,
    topple,
)
from .strategies import (
    BoundCheck,
    LoopRunRecord,
    OrderedSet,
    StageReport,
    greedy_order,
    idla_stabilize,
    loop_return_procedure,
    product_bound_check,
    spread_to_singles,
    staged_torus_procedure,
)
from .chain1d import (
    AbsorptionBound,
    ReducedChain,
    ReversibilityMeasure,
    absorption_bound,
    build_chain,
    cycle_adjacent_hitting,
    hitting_prob_exact,
    log_nu_top_closed_form,
    nu_measure,
    simulate_absorption,
)
from .bounds import (
    Kappa,
    PhaseCondition,
    StageParams,
    active_phase_condition,
    admissible_c,
    kappa,
    log_binomial_bound,
    stage_params,
)
from .experiments import (
    ContinuousOutcome,
    ExperimentSpec,
    IdlaEstimate,
    ScanResult,
    chain_bound_rows,
    fixation_scan,
    idla_fluctuation,
    mn_scan,
    phase_scan,
    run,
    sample_initial,
    simulate_continuous,
    staged_runs,
    wilson_interval,
)

__version__ = "0.1.0"
