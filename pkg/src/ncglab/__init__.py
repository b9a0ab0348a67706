"""Finite-truncation laboratory for Dirac operators built from projection chains.

The package assembles diagonal Dirac operators ``D = sum_k alpha_k Q_k`` over
coordinate projection chains, realizes elements of a few concrete operator
algebras (Toeplitz, compacts plus unit, diagonal, residually finite dimensional)
as truncated matrices, and runs the spectral-triple, summability and
quasidiagonality diagnostics on them.
"""

from ncglab.opcore import (
    Tolerance,
    as_operator,
    commutator,
    is_self_adjoint,
    op_norm,
    singular_values,
    validate_projection,
)
from ncglab.models import (
    Element,
    RepresentationModel,
    SymbolPolynomial,
    SymbolVanishes,
    default_chain,
    parse_element,
    realize,
    winding_index,
    winding_number,
)
from ncglab.dirac import (
    AlphaSequence,
    NoProgress,
    ProjectionChain,
    SelectionCertificate,
    assemble_dirac,
    block_of,
    blocks,
    commutator_blocks,
    select_chain,
    tail_estimate,
)
from ncglab.verify import (
    boundedness_scan,
    compactness_scan,
    offdiag_check,
    summability_profile,
)
from ncglab.qdiag import compress, mult_defect, qd_scan

__version__ = "0.1.0"
