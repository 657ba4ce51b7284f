"""Embedding-based retrieval for moderation trend handling, at desk scale.

Train contrastive embedding models on labeled data, select seed items,
retrieve similar items by cosine similarity, apply threshold-tiered
actions, and refine seeds and thresholds from human labels.
"""

from .errors import TrendGuardError
from .vectors import cosine, normalize, similarity_matrix
from .store import RetrievalHit, VectorStore, load_vectors, save_vectors, top_k_exact
from .ivf import IvfIndex, build_ivf, default_n_partitions, default_n_probe, search_ivf
from .scl import ntxent_labels, scl_loss, scl_loss_grad
from .encoders import (
    ClassifierParams,
    MultiModalParams,
    SingleModalParams,
    encode_multimodal,
    encode_single,
)
from .training import (
    Record,
    TrainConfig,
    augment,
    embed_dataset,
    load_dataset,
    load_manifest,
    save_dataset,
    save_manifest,
    train,
)
from .seeds import (
    ClusterAssignment,
    SeedStats,
    centroid_proximity_seeds,
    dbscan,
    historical_precision,
    select_historical_seeds,
)
from .trends import (
    Trend,
    TrendScore,
    evaluate_new_video,
    register_manual_seed,
    retrieve_per_seed,
    retrieve_trend,
    score_video,
)
from .feedback import (
    ActionDecision,
    ActionTier,
    FeedbackLabel,
    LabelBook,
    decide_action,
    ingest_label,
    run_feedback_cycle,
    trend_precision_at_k,
)
from .metrics import best_f1, precision_at_k, pr_auc, roc_auc
from .synthetic import SynthConfig, SynthDataset, gen_synthetic

from .version import __version__  # noqa: E402
