from .expr import Affine, as_affine, bmat, inner, outer
from .oracle import brute_force_lp, brute_force_lp_value
from .program import (ConicProgram, ConstraintGroup, ProgramBuilder, PsdBlock,
                      VariableMap, dump_program)
from .solve import SolveOptions, SolveResult, Status, solve, verify_ray

__all__ = ["Affine", "as_affine", "bmat", "inner", "outer", "brute_force_lp",
           "brute_force_lp_value", "ConicProgram", "ConstraintGroup",
           "ProgramBuilder", "PsdBlock", "VariableMap", "dump_program",
           "SolveOptions", "SolveResult", "Status", "solve", "verify_ray"]
