"""Synthetic spatially embedded power-grid networks."""

from .geo import GeoPoint, great_circle_km, polyline_length_km, project, unproject
from .graph import SpatialGraph, read_graph_csv, write_graph_csv
from .ingest import LineRecord, RegionPolygon, build_graph, clip_region, largest_component
from .mixture import EmConfig, GmmModel, bic, fit_em, sample, select_model
from .generator import (
    PRESETS,
    GenParams,
    compute_rho,
    gnlg,
    preset_params,
    reinforce,
    twst_connect,
    twst_order,
)
from .metrics import (
    MetricsReport,
    avg_path_length,
    clustering_coefficient,
    degree_histogram,
    edge_lengths,
    kl_divergence,
    ks_statistic,
    structural_report,
    tail_slope,
)

__version__ = "0.1.0"
