"""Limit operators of band operators on discrete metric spaces.

Extract limit operators by patch stabilisation, estimate lower norms from
column truncations, and turn both into Fredholm verdicts (with an exact symbol
oracle for eventually periodic operators on Z).
"""
__version__ = "0.1.0"

from .errors import ConfigurationError, DomainError, InconclusiveError, LimitOpsError, OracleUnavailable
from .space import CoarseUnion, FiniteRegion, Space, ZLattice, space_from_dict
from .operator import (BlockTerm, Constant, Converging, DiagTerm, EventuallyPeriodic, FiniteTerm, Operator,
                       ShiftTerm, TermOperator, add, adjoint, apply, assemble, compose, diag, entry,
                       identity, scale, shift, truncate_columns)
from .diagnostics import (column_support_profile, ghost_profile, propagation_of, quasi_locality_profile)
from .galaxy import (GalaxySample, LimitOperatorRep, PointedPatch, check_limit_propagation,
                     dedup_limit_operators, extract_along, extract_limit_operator, patch)
from .lowernorm import (lower_norm_curve, lower_norm_spectrum, lower_norm_truncated, schedule_probe,
                        sigma_min, window_search)
from .fredholm import (FredholmConfig, FredholmReport, SymbolFunction, fredholm_verdict, oracle_crosscheck,
                       symbol_invertibility, symbol_of, winding_number)
from .specfile import SpecError, dump_spec, load_spec, load_spec_text
