"""Learn pairwise word-order statistics from UD treebanks and reorder sentences to match them."""

__version__ = "0.1.0"

from .conllu import (
    DepTree,
    MultiwordToken,
    Sentence,
    Token,
    build_tree,
    parse_conllu,
    serialize_conllu,
    subtree_span,
)
from .constraints import (
    ConstraintSet,
    LocalOrderProblem,
    derive_constraints,
    load_constraints,
    relevant_constraints,
    save_constraints,
    solve_order,
)
from .pods import (
    Granularity,
    PodTable,
    estimate_pods,
    load_pods,
    merge,
    pod_distance,
    probability,
    save_pods,
)
from .reorder import (
    LockedSpan,
    NonContiguousImage,
    ReorderResult,
    apply_alignment,
    lock_spans,
    reorder_tree,
    reorder_treebank,
)
from .report import ReorderStats, RunReport
