"""Spectral clustering accelerated by spectrum-preserving node aggregation."""

from .cluster import ClusterResult, KMeansResult, kmeans, lift_membership
from .coarsen import (
    CoarsenParams,
    CoarseningHierarchy,
    MappingOperator,
    TestVectors,
    affinity,
    aggregate_level,
    build_hierarchy,
    galerkin_reduce,
    smooth_test_vectors,
)
from .dataio import (
    Dataset,
    load_csv,
    load_idx,
    load_libsvm,
    make_two_circles,
    make_two_moons,
    minmax_scale,
    save_csv,
)
from .errors import ConfigError, DataError
from .evalmetrics import AccReport, ConfusionMatrix, accuracy, confusion_matrix, hungarian_max
from .graph import (
    LaplacianMatrix,
    SimilarityGraph,
    build_knn_graph,
    connected_components,
    laplacian,
    load_graph_mm,
    save_graph_mm,
)
from .pipeline import (
    EvalReport,
    RunConfig,
    bench_sweep,
    load_dataset,
    report_to_json,
    run_pipeline,
    scaling_probe,
)
from .spectral import Embedding, bottom_eigs, embed_rows

__version__ = "0.1.0"
