"""RLT and SDP-RLT relaxations of nonconvex quadratic programs, their
KKT-augmented variants, optimality certificates and lifting maps."""

from .builders import ProblemKind, build
from .certify import certify_rlt, certify_sdp
from .conic import SolveOptions, Status, solve
from .extreal import ExtReal
from .instances import (ExampleFamily, QpInstance, closed_form_values,
                        example_family, load_instance,
                        random_bounded_instance, save_instance,
                        validate_assumption1)
from .matrixops import build_face_data

__version__ = "0.1.0"

__all__ = ["ProblemKind", "build", "certify_rlt", "certify_sdp",
           "SolveOptions", "Status", "solve", "ExtReal", "ExampleFamily",
           "QpInstance", "closed_form_values", "example_family",
           "load_instance", "random_bounded_instance", "save_instance",
           "validate_assumption1", "build_face_data"]
