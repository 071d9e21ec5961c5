"""Pluriminimal immersions from holomorphic Weierstrass data."""

from .expr import HoloExpr, ParseError, differentiate, evaluate, parse
from .family import FamilyInput, family_data, self_intersect, solve_family, split_pairs
from .jets import Jet2, eval_jet2
from .relations import PolyBasis, QuadraticRelation, build_mu, diagonalize, emit_map, kernel
from .weierstrass import (
    OneForm,
    WeierstrassData,
    check_closed,
    check_rank,
    conformality,
    immerse,
    metric_blocks,
    second_fundamental_form,
)

__version__ = "0.1.0"
