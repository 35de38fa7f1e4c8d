"""Input-symbol selection for discrete memoryless channels.

Capacity and pseudo-capacity solvers with certified brackets, chi-squared
projections onto channel convex hulls, analytical capacity-loss certificates,
clustering-based input selection, and a hierarchical Dirichlet channel
generator with a reproducible experiment harness.
"""

__version__ = "0.1.0"

from .backend import BACKEND, HAVE_COMPILED
from .bound import BoundReport, InvalidKappa, Mode, capacity_loss_bound, choose_eta, validate_bound
from .capacity import (
    CapacityResult,
    EtaInfeasible,
    KktReport,
    KktViolation,
    NotConverged,
    PseudoCapacityResult,
    blahut_arimoto,
    capacity_value,
    mutual_information,
    pseudo_capacity,
    verify_kkt,
)
from .core import (
    INFINITE,
    Channel,
    DimensionMismatch,
    DmcError,
    EmptyMatrix,
    IndexOutOfRange,
    InvalidSubset,
    NegativeEntry,
    RowSumError,
    chi2_divergence,
    entropy,
    input_subset,
    js_divergence,
    kl_divergence,
    restrict,
    validate_channel,
)
from .gen import GeneratorConfig, InvalidAlpha, sample_dirichlet, sample_dmc
from .hull import (
    HullPartition,
    HullProjection,
    chi2_to_hull,
    is_in_hull,
    nearest_neighbor,
    partition_removed,
    prune_redundant,
)
from .io import load_channel, save_channel
from .select import (
    BudgetExceeded,
    ClusterAssignment,
    CounterexampleFailed,
    InvalidK,
    Method,
    SelectionResult,
    check_submodularity_counterexample,
    cluster_inputs,
    exhaustive_select,
    greedy_select,
    pairwise_jsd,
    random_select,
    select_inputs,
    select_representatives,
)
from .sweep import SweepConfig, SweepRow, read_csv, run_sweep, summarize, write_csv
