"""Prediction with limited selectivity.

A forecaster watches a bounded sequence and, at one of a restricted set of
stopping times, predicts the mean of an upcoming window.  This package
provides the instance encodings and their approximate-uniformity complexity
measure, the forecasting algorithms, the hard input distributions they are
measured against, random instance generation, and an exact / Monte Carlo
evaluation harness with a CLI.
"""

from .instance import (
    BlockRepresentation,
    MergePlan,
    StoppingTimeSet,
    UniformityResult,
    approximate_uniformity,
    approximate_uniformity_bruteforce,
    family,
    from_blocks,
    greedy_merge,
    instance_from_json,
    instance_to_json,
    load_instance,
    save_instance,
    to_blocks,
)
from .streams import ArrayStream, SequenceStream, StreamError
from .forecaster import (
    OutcomeDistribution,
    Prediction,
    SelectOutcome,
    general_forecast,
    make_general_forecaster,
    make_separation_forecaster,
    make_uniform_forecaster,
    outcome_to_coefficients,
    random_select,
    random_select_distribution,
    separation_forecast,
    uniform_forecast,
    uniform_forecast_distribution,
)
from .adversary import (
    AdversaryTree,
    BernoulliBlockSampler,
    BernoulliBlockStream,
    BlockMeanModel,
    TreeSample,
    bernoulli_block_model,
    build_tree,
    conditional_variance_check,
    find_technical_edge,
    render_sequence,
    sample_bernoulli_sequence,
    sample_tree_leaf_means,
    sample_tree_node_values,
    sample_tree_values,
    tree_model_moments,
)
from .randgen import (
    ProbabilitySequence,
    harmonic,
    heavy_subsequence,
    load_probability_sequence,
    monotone_runs,
    random_kmonotone,
    sample_stopping_set,
    save_probability_sequence,
)
from .evaluate import (
    AverageCaseReport,
    BoundReport,
    ErrorEstimate,
    OverlapProfile,
    analytic_upper_bound,
    average_case_experiment,
    check_block_overlap,
    exact_expected_error,
    expected_phi_of_mean,
    bernoulli_phi_expectation,
    min_window_variance_bruteforce,
    monte_carlo_error,
    phi,
    separation_bound,
    tree_min_window_variance,
    trial_rng,
    variance_lower_bound_report,
    window_overlap_profile,
    window_variance_from_model,
)

__version__ = "0.1.0"
