"""Expanding Kaehler-Ricci solitons on C^n: kernels, profiles, curvature, geometry and flow."""

from .curvature import (
    CurvatureError,
    abc_at,
    curvature_form_matrix,
    curvature_sample,
    kernel_route,
    metric_at,
    positivity_check,
    positivity_scan,
    scalar_curvature,
)
from .flow import FlowError, FlowSchedule, FlowState, flow_rhs, run_flow, self_similar_reference, step
from .geometry import DecayReport, decay_report, distance_profile, sphere_area, volume_of_ball
from .kernels import eval_f, eval_g, eval_h, eval_l, eval_L, kernel_identity_report
from .soliton import RadialProfile, SolitonParams, build_profile, flat_profile, ode_rhs, soliton_residual

__version__ = "0.1.0"

__all__ = [
    "CurvatureError",
    "DecayReport",
    "FlowError",
    "FlowSchedule",
    "FlowState",
    "RadialProfile",
    "SolitonParams",
    "abc_at",
    "build_profile",
    "curvature_form_matrix",
    "curvature_sample",
    "decay_report",
    "distance_profile",
    "eval_L",
    "eval_f",
    "eval_g",
    "eval_h",
    "eval_l",
    "flat_profile",
    "flow_rhs",
    "kernel_identity_report",
    "kernel_route",
    "metric_at",
    "ode_rhs",
    "positivity_check",
    "positivity_scan",
    "run_flow",
    "scalar_curvature",
    "self_similar_reference",
    "soliton_residual",
    "sphere_area",
    "step",
    "volume_of_ball",
]
