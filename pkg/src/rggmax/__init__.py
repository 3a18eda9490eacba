"""Extreme degrees and connectivity thresholds of random geometric graphs."""

from ._backend import BACKEND
from .geometry import CellGrid, Norm, brute_force_distances, build_grid, unit_ball_volume
from .graph_atlas import Atlas, GraphClass, SmallGraph, build_atlas, enumerate_candidates, estimate_mu
from .limit_laws import (GumbelLaw, RadiusSchedule, WeibullLaw, gumbel_statistic, lambert_w0,
                         radius_fixed_k, radius_growing, tail_bounds, weibull_statistic)
from .rgg import degree_profile, extreme_points, induced_subgraph_count, threshold_radius
from .runner import ExperimentConfig, load_config, run_experiment
from .sampling import PointCloud, RadialPeak, RngStream, UniformCube, sample_binomial

__all__ = [
    "BACKEND", "CellGrid", "Norm", "brute_force_distances", "build_grid", "unit_ball_volume",
    "Atlas", "GraphClass", "SmallGraph", "build_atlas", "enumerate_candidates", "estimate_mu",
    "GumbelLaw", "RadiusSchedule", "WeibullLaw", "gumbel_statistic", "lambert_w0",
    "radius_fixed_k", "radius_growing", "tail_bounds", "weibull_statistic",
    "degree_profile", "extreme_points", "induced_subgraph_count", "threshold_radius",
    "ExperimentConfig", "load_config", "run_experiment",
    "PointCloud", "RadialPeak", "RngStream", "UniformCube", "sample_binomial",
]
