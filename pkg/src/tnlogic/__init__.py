"""Logical and probabilistic reasoning with tensor networks."""

from .core import (
    SparseTensor,
    Tensor,
    TensorNetwork,
    Variable,
    contract,
    coordinate,
    make_delta,
    make_one_hot,
    nonzero_indicator,
    normalize,
    ones,
    partition_function,
)
from .encoding import (
    DecompositionGraph,
    EnumerationMap,
    FunctionTable,
    Hyperedge,
    adder_inputs,
    basis_encode,
    build_madic_adder,
    compile_decomposition,
    connective_encoding,
    evaluate_composition,
    evidence_network,
    exactly_one_cp,
    exactly_one_tensor,
    exactly_one_tt,
)
from .errors import (
    ConvergenceError,
    DegenerateActivationError,
    DegenerateNetworkError,
    DimensionError,
    InconsistencyError,
    InputError,
    NonRepresentableMomentError,
    ParseError,
    StateError,
    StructureError,
    TnLogicError,
)
from .hln import (
    Dataset,
    FormulaStatistic,
    HybridParams,
    amm_train,
    canonicalize_activation,
    empirical_means,
    hln_distribution,
    hln_network,
    nll,
    probabilistic_entails,
    query_probability,
)
from .logic import (
    KnowledgeBase,
    board_to_start,
    build_sudoku_kb,
    count_models,
    deductions_to_board,
    entails,
    formula_tensor,
    kb_network,
    syntactic_decomposition,
)
from .probability import (
    Statistic,
    conditional,
    exponential_family_member,
    head_count,
    is_cond_independent,
    is_independent,
    log_partition,
    marginal,
    markov_distribution,
    separates,
)
from .propagation import (
    PropagationResult,
    constraint_propagation,
    deduce_atoms,
    directed_bp,
    local_marginal,
    read_states,
    tree_bp,
)

__version__ = "0.1.0"
