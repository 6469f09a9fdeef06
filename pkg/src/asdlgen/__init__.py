"""Grammar-constrained code generation over ASDL-style abstract syntax.

A derivation is a sequence of transition actions over a stack of dotted
rules; decoding with a legal-action mask only ever builds trees the grammar
allows.
"""

from .derivation import ast_to_derivation, derivation_to_ast, validate_ast
from .grammar import Grammar, bundled_grammar, load_grammar, parse_grammar
from .surface import canonicalize, is_valid_code, parse_code, unparse
from .transition import Action, GeneratorState, Limits, apply, initial_state, legal_actions, replay

__version__ = "0.1.0"

__all__ = [
    "Action",
    "GeneratorState",
    "Grammar",
    "GrammarCodeGenerator",
    "Limits",
    "apply",
    "ast_to_derivation",
    "bundled_grammar",
    "canonicalize",
    "derivation_to_ast",
    "initial_state",
    "is_valid_code",
    "legal_actions",
    "load_grammar",
    "parse_code",
    "parse_grammar",
    "replay",
    "unparse",
    "validate_ast",
]


def __getattr__(name):
    # the estimator pulls in scikit-learn; import it only when asked for
    if name == "GrammarCodeGenerator":
        from .estimator import GrammarCodeGenerator
        return GrammarCodeGenerator
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
