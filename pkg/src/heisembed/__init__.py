"""Constructive embeddings of bounded-degree graphs into Cayley graphs of the
discrete Heisenberg group (and, for cross-checks, of the lattices Z^d)."""

from heisembed.errors import (
    ArithmeticOverflow,
    AttemptsExhausted,
    DomainError,
    HeisembedError,
    PreconditionError,
    ResourceError,
    ValidationError,
)
from heisembed.group import (
    HEISENBERG,
    GeneratingSet,
    GeneratorLabel,
    GroupElement,
    Lattice,
    Word,
    eval_word,
    inv,
    lam,
    mul,
    parse_genset,
)

__all__ = [
    "ArithmeticOverflow",
    "AttemptsExhausted",
    "DomainError",
    "HeisembedError",
    "PreconditionError",
    "ResourceError",
    "ValidationError",
    "HEISENBERG",
    "GeneratingSet",
    "GeneratorLabel",
    "GroupElement",
    "Lattice",
    "Word",
    "eval_word",
    "inv",
    "lam",
    "mul",
    "parse_genset",
]

__version__ = "0.1.0"
