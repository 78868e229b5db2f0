"""Truncated q-commuting Fock spaces, maximal q-commuting pieces and dilations."""

from .dilation import (
    TailTooLarge,
    main_theorem_check,
    noncommuting_dilation,
    poisson_embedding,
    weyl_pair_generator,
    weyl_q,
)
from .fock import FockContext, QFockSpace
from .linalg import SubspaceProjector
from .moments import GWord, TruncationLeak, vacuum_expectation
from .piece import OperatorTuple, PieceResult, maximal_q_piece
from .qcoeff import QParams
from .report import Report

__version__ = "0.1.0"

__all__ = [
    "FockContext",
    "GWord",
    "OperatorTuple",
    "PieceResult",
    "QFockSpace",
    "QParams",
    "Report",
    "SubspaceProjector",
    "TailTooLarge",
    "TruncationLeak",
    "main_theorem_check",
    "maximal_q_piece",
    "noncommuting_dilation",
    "poisson_embedding",
    "vacuum_expectation",
    "weyl_pair_generator",
    "weyl_q",
]
