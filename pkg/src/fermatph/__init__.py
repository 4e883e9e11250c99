"""Density-based intrinsic distances, persistent homology on top of them,
and change-point detection in time series via delay embeddings."""

from ._kernels import get_threads, set_threads
from .comparison import (Distortion, Matching, StabilityReport, bottleneck,
                         check_stability, metric_distortion)
from .geometry import (PointCloud, TimeSeries, gen_eyeglasses, gen_outliers,
                       gen_trefoil, gen_uniform_manifold, geodesic_matrix,
                       lorenz_series, population_fermat_matrix)
from .metric import (DistanceMatrix, FermatParams, epsilon_star,
                     estimate_mu, euclidean_matrix, fermat_matrix, knn_matrix,
                     mds_project, minimal_spacing, outlier_delta,
                     quotient_matrix, rescale_fermat)
from .persistence import (Bar, FiltrationSimplex, PersistenceDiagram,
                          RipsFiltration, h0_mst, persistent_homology,
                          rips_filtration, salient_bars, truncate_diagram)
from .signal import (ChangePointScore, DelayParams, change_point_score,
                     delay_embed, detect_peaks, evolving_diagrams)

__version__ = "0.1.0"
