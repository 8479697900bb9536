"""Contrastive pretraining and limited-label edge segmentation for triangular meshes.

The package is organized around a small set of layers:

- :mod:`meshcl.mesh` — OBJ i/o, edge topology, validation.
- :mod:`meshcl.features` — similarity-invariant per-edge descriptors.
- :mod:`meshcl.augment` — stochastic mesh augmentation (scale / shift / flip).
- :mod:`meshcl.layers`, :mod:`meshcl.pooling` — edge convolutions, group norm,
  edge-collapse pooling, and their exact adjoints.
- :mod:`meshcl.losses`, :mod:`meshcl.optim` — NT-Xent, cross-entropy, Adam.
- :mod:`meshcl.model`, :mod:`meshcl.training` — encoder / U-net assembly,
  contrastive pretraining, transfer, fine-tuning.
- :mod:`meshcl.experiment`, :mod:`meshcl.report` — label-fraction sweeps,
  CSV emission, and figures.
"""

from .augment import (
    AugmentationPolicy,
    anisotropic_scale,
    augment,
    flip_edges,
    jitter_policy,
    shift_vertices,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import (
    gen_synthetic_dataset,
    load_dataset,
    load_labels_file,
    load_mesh_dir,
    save_dataset,
    split_eval,
    synthesize_mesh,
)
from .experiment import (
    CellResult,
    ExperimentSpec,
    ResultsRow,
    ResultsTable,
    desk_spec,
    emit_results,
    run_label_fraction_experiment,
)
from .features import (
    FEATURE_NAMES,
    ChannelStats,
    extract_features,
    features_to_csv,
    fit_channel_stats,
    standardize_features,
)
from .gradcheck import grad_check
from .layers import (
    EdgeTensor,
    global_mean_encode,
    group_norm,
    mesh_conv,
    mesh_pool,
    mesh_unpool,
    projection_head,
)
from .losses import (
    LatentBatch,
    cross_entropy_edges,
    cross_entropy_edges_with_grad,
    edge_accuracy,
    nt_xent,
    nt_xent_with_grad,
)
from .mesh import (
    NO_EDGE,
    Mesh,
    MeshError,
    NonManifoldError,
    ObjFormatError,
    ValidationReport,
    build_edge_topology,
    load_obj,
    load_obj_path,
    save_obj,
    save_obj_path,
    validate_mesh,
)
from .model import (
    ArchitectureSpec,
    encoder_forward,
    init_params,
    pretrain_forward,
    unet_forward,
)
from .optim import AdamState, adam_step
from .pooling import CollapseRecord
from .rng import mix_seed
from .training import (
    Dataset,
    MetricsRecord,
    PretrainResult,
    TrainConfig,
    build_positive_pairs,
    evaluate_unet,
    finetune,
    metrics_to_csv,
    pretrain,
    transfer_and_assemble_unet,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "ArchitectureSpec",
    "AugmentationPolicy",
    "CellResult",
    "ChannelStats",
    "Checkpoint",
    "CollapseRecord",
    "Dataset",
    "EdgeTensor",
    "ExperimentSpec",
    "FEATURE_NAMES",
    "LatentBatch",
    "Mesh",
    "MeshError",
    "MetricsRecord",
    "NO_EDGE",
    "NonManifoldError",
    "ObjFormatError",
    "PretrainResult",
    "ResultsRow",
    "ResultsTable",
    "TrainConfig",
    "ValidationReport",
    "adam_step",
    "anisotropic_scale",
    "augment",
    "build_edge_topology",
    "build_positive_pairs",
    "cross_entropy_edges",
    "cross_entropy_edges_with_grad",
    "desk_spec",
    "edge_accuracy",
    "emit_results",
    "encoder_forward",
    "evaluate_unet",
    "extract_features",
    "features_to_csv",
    "finetune",
    "fit_channel_stats",
    "flip_edges",
    "gen_synthetic_dataset",
    "global_mean_encode",
    "grad_check",
    "group_norm",
    "init_params",
    "jitter_policy",
    "load_checkpoint",
    "load_dataset",
    "load_labels_file",
    "load_mesh_dir",
    "load_obj",
    "load_obj_path",
    "mesh_conv",
    "mesh_pool",
    "mesh_unpool",
    "metrics_to_csv",
    "mix_seed",
    "nt_xent",
    "nt_xent_with_grad",
    "pretrain",
    "pretrain_forward",
    "projection_head",
    "run_label_fraction_experiment",
    "save_checkpoint",
    "save_dataset",
    "save_obj",
    "save_obj_path",
    "shift_vertices",
    "split_eval",
    "standardize_features",
    "synthesize_mesh",
    "transfer_and_assemble_unet",
    "unet_forward",
    "validate_mesh",
]
