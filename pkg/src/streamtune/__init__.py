"""Experiment-driven configuration tuning for stream processing
benchmarks: maximin Latin hypercube exploration, simulated annealing,
hill-climbing refinement, early termination, and reporting."""

from .analysis import (
    CorrelationReport,
    ImprovementRow,
    ImprovementTable,
    correlate,
    emit_report,
    improvement_table,
    read_trials_csv,
)
from .annealing import (
    Evaluation,
    SaSettings,
    SaTrace,
    TemperatureSchedule,
    acceptance_probability,
    initial_temperature,
    propose_neighbor,
    sa_run,
    temperature_at,
)
from .campaign import (
    Campaign,
    CampaignConfig,
    CampaignState,
    TrialId,
    TrialRecord,
    derive_seed,
    resume_campaign,
    run_campaign,
    select_seeds,
    validate_best,
)
from .early_stop import StopRule, ThroughputMonitor
from .errors import ConfigurationError, ExecutionError, StateError, StreamtuneError
from .execution import (
    CommandExecutor,
    ExperimentOutcome,
    ExperimentRequest,
    ManifestSettings,
    MetricSample,
    SyntheticExecutor,
    SyntheticSurface,
    render_execution_manifest,
    run_experiment,
)
from .hillclimb import HcSettings, HcTrace, gate_seeds, hc_run
from .sampling import LhsDesign, generate_lhs, maximin_lhs, min_pairwise_distance
from .space import (
    ParameterDefinition,
    ParameterSpace,
    dump_space,
    format_si,
    load_space,
    map_to_concrete,
    map_to_normalized,
)

__version__ = "0.1.0"
