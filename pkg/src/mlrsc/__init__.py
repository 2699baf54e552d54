"""Randomized spectral clustering for multi-layer networks."""

from .cluster import (
    ClusterResult,
    PipelineConfig,
    kmeans,
    rsc_coclustering,
    rsc_pipeline,
    sc_coclustering,
    sc_pipeline,
)
from .errors import CapacityError, ParseError, RankDeficiencyError, ValidationError
from .graph import MultiLayerNetwork, SparseLayer, degrees, load_edge_list, spmv, write_edge_list
from .metrics import ami, ari, misclassification_rate
from .randeig import Embedding, KrylovConfig, dense_top_eigs, krylov_basis, rayleigh_ritz
from .sbm import BlockModel, Membership, model_preset, population_pi, sample_msbm, sample_mscbm
from .sketch import DebiasedOperator, SamplingConfig, build_operator, dense_reference, sparsify

__version__ = "0.1.0"
