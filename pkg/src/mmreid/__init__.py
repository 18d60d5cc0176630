"""Mix-modality person re-identification evaluation kit.

Works on pre-extracted embeddings: mix-modality query/gallery splits,
the CIDHL metric-learning loss with analytic gradients, modality-bridge
re-ranking and CMC / mAP / mINP scoring.
"""
__version__ = "0.1.0"

from .core import (DistanceMap, EmbeddingSet, LossConfig, MiniBatch, Modality, ReRankConfig, SampleRecord,
                   euclidean_distance, pairwise_distances)
from .cidhl import (LossReport, ModalityCenters, cidhl_gradient, cidhl_loss, compute_centers,
                    finite_difference_check, triplet_hard_loss)
from .mbsos import OptimizedDistanceMap, bridge_optimize, rerank, scale_same_modality
from .metrics import EvalReport, RankedList, average_precision, cmc_curve, evaluate, inverse_negative_penalty, rank_gallery
from .splitter import SplitResult, SplitSpec, build_split
from .formats import load_features, load_features_csv, save_features, save_features_csv
from .synth import SynthSpec, generate_synthetic
