"""Graph-directed inhomogeneous self-similar sets: graph dimensions, point
clouds, box counting, invariant measures and open set checks."""
from .attractor import PointCloud, cloud, homogeneous_cloud, inhomogeneous_cloud, orbital_cloud
from .boxdim import (BoxCountSeries, DimEstimate, analytic_count, box_count_series, count_boxes, cre,
                     estimate_dims, pt_estimate)
from .errors import GDFractalError
from .measure import ProbabilityScheme, invariance_residual, sample_measure
from .model import (Box, CondensationSet, Edge, GDSystem, PathCode, Point, Polyline, Segment,
                    SimilarityMap, cross_cut, validate_system)
from .separation import check_gdiosc, check_strong
from .spectral import build_ratio_matrix, cross_cut_bound_check, graph_dimension, perron_vector, spectral_radius

__version__ = "0.1.0"
