"""Character-level spam filtering with depth-limited suffix tree profiles.

Build a frequency-annotated suffix tree per class, score documents by the
summed significance of every suffix's longest match, and decide by the
ham/spam score ratio against a threshold.  Ships a multinomial naive Bayes
baseline and a cross-validated threshold-sweep evaluation harness.
"""

from .corpus import (
    EdsSpec,
    EmailDataSet,
    FoldAssignment,
    Message,
    compose_eds,
    load_labeled_dir,
    load_mixed_dir,
    parse_email,
    stratified_folds,
)
from .errors import ConfigError, ContractError, EvaluationError, StfilterError
from .evaluation import (
    Confusion,
    MetricSet,
    NBClassifier,
    STClassifier,
    SweepReport,
    breakeven,
    metrics,
    optimal_threshold,
    roc_points,
    run_cv,
)
from .flat import FlatTree
from .naive_bayes import NBModel, TokenPipeline, nb_classify, nb_log_score, preprocess, train_nb
from .scoring import (
    Match,
    ScoringConfig,
    Verdict,
    classify,
    document_score,
    length_weight,
    longest_match,
    match_score,
    permutation_weight,
    score_many,
    significance,
)
from .suffix_tree import (
    ClassTree,
    Node,
    build_class_tree,
    conditional_probability,
    find_node,
    insert_string,
    load_profile,
    save_profile,
    total_probability,
    tree_stats,
)

__version__ = "0.1.0"
