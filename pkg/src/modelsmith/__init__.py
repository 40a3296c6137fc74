"""Prove or disprove properties of rewrite systems by finding finite models."""
from .terms import App, Rule, RewriteSpec, Signature, SpecError, Var, parse_spec, parse_term
from .fol import negate, parse_formula, quantifier_analysis, relevant_sorts, skolemize, to_prenex
from .theory import (
    PropertyTemplate,
    Theory,
    generate_nstep_theory,
    generate_rewrite_theory,
    generate_topmost_theory,
    instantiate_property,
)

__all__ = [
    "App", "Rule", "RewriteSpec", "Signature", "SpecError", "Var", "parse_spec", "parse_term",
    "negate", "parse_formula", "quantifier_analysis", "relevant_sorts", "skolemize", "to_prenex",
    "PropertyTemplate", "Theory", "generate_nstep_theory", "generate_rewrite_theory",
    "generate_topmost_theory", "instantiate_property",
]

__version__ = "0.1.0"
