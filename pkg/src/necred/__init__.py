"""Workbench for network coding under single-edge adversarial errors.

Builds the reduction gadget from multiple-unicast network coding to
single-unicast network error correction, moves codes across it in both
directions, verifies codes exhaustively against every admissible error
pattern, and instantiates an explicit code family whose rates approach the
error-correction capacity without reaching it.
"""

from .codeeval import (
    DECODE_FAILURE,
    ErrorPattern,
    LocalFunction,
    NetworkCode,
    Simulator,
    evaluate,
    expand_truth_table,
    normalize_relay,
)
from .counterexample import (
    build_cx_code,
    build_cx_instances,
    demonstrate_unachievability,
    search_zero_error_codes,
    verify_cx_zero_error,
)
from .netmodel import (
    Edge,
    MultipleUnicastInstance,
    NECInstance,
    Network,
    cut_capacity,
    cutset_rate_bound,
    validate_network,
)
from .reduction import GadgetInstance, backward_embed, build_gadget
from .transfer import (
    build_pi,
    build_psi,
    build_tables,
    lemma2_witness,
    lemma4_witnesses,
    pair_deletion,
    pi_partition,
    run_transfer,
    transfer_code,
    transfer_report,
)
from .verifier import cut_images, enumerate_patterns, verify_mu, verify_nec

__version__ = "0.1.0"
