"""Order-by-order parameterization of invariant manifolds attached to
parabolic invariant tori, with numerical validation helpers."""

from paratori.errors import (BoundViolated, CNotInvertible, ConfigError,
                             DimensionMismatch, Diverged, EnergyBelowThreshold,
                             FlowLeftSector, HypothesisViolated,
                             NonPositiveLeadingCoefficient, NonZeroAverage,
                             ParatoriError, SingularSystem,
                             SmallDivisorUnderflow, StructureViolation,
                             TailNotConverged, TruncationTooLow,
                             ZeroLeadingCoefficient)
from paratori.fourier import (FourierSeries, diophantine_margin, reciprocal,
                              solve_sd_flow, solve_sd_map)
from paratori.jets import TFJet, UPoly
from paratori.mapdata import (NormalizationRecord, TaylorFourierMap, XYPoly,
                              reduce_general_field, reduce_general_map)
from paratori.pairs import (ManifoldPair, ResidualReport, compare_pairs,
                            residual_report)
from paratori.map_solver import (default_trunc, init_order2,
                                 invert_reduced_map, solve_to_order)
from paratori.flow_solver import (init_order2_flow, solve_flow_to_order,
                                  solve_helicoure, validate_shear_field)
from paratori.operators import (Sector, contraction_probe, drift_derivative,
                                flow_inverse, flow_inverse_norm_limit,
                                flow_orbit_integral, map_inverse_norm_limit,
                                orbit_sum_inverse, sector_iterate_check,
                                transfer_difference)
from paratori.applications import (HeCuParams, OscillatorParams,
                                   build_hecu_field, build_oscillator_field,
                                   build_oscillator_unstable, hecu_manifolds)

__version__ = "0.1.0"

__all__ = [
    "BoundViolated", "CNotInvertible", "ConfigError", "DimensionMismatch",
    "Diverged", "EnergyBelowThreshold", "FlowLeftSector", "HypothesisViolated",
    "NonPositiveLeadingCoefficient", "NonZeroAverage", "ParatoriError",
    "SingularSystem", "SmallDivisorUnderflow", "StructureViolation",
    "TailNotConverged", "TruncationTooLow", "ZeroLeadingCoefficient",
    "FourierSeries", "diophantine_margin", "reciprocal", "solve_sd_flow",
    "solve_sd_map",
    "TFJet", "UPoly",
    "NormalizationRecord", "TaylorFourierMap", "XYPoly",
    "reduce_general_field", "reduce_general_map",
    "ManifoldPair", "ResidualReport", "compare_pairs", "residual_report",
    "default_trunc", "init_order2", "invert_reduced_map", "solve_to_order",
    "init_order2_flow", "solve_flow_to_order", "solve_helicoure",
    "validate_shear_field",
    "Sector", "contraction_probe", "drift_derivative", "flow_inverse",
    "flow_inverse_norm_limit", "flow_orbit_integral", "map_inverse_norm_limit",
    "orbit_sum_inverse", "sector_iterate_check", "transfer_difference",
    "HeCuParams", "OscillatorParams", "build_hecu_field",
    "build_oscillator_field", "build_oscillator_unstable", "hecu_manifolds",
]
