"""Subject uniqueness of embedding datasets from genuine/impostor KL divergence."""

from faceuniq.dataset import (
    DataFormatError,
    Dataset,
    EmbeddingRecord,
    GroupKey,
    SubjectMeta,
    load_binary,
    load_csv,
    load_embeddings,
    load_metadata,
    split_by_group,
    write_binary,
    write_csv,
    write_metadata,
)
from faceuniq.estimator import (
    DivergenceValue,
    EstimatorParams,
    default_params,
    kl_avg_norm,
    kl_subsampled,
    mean_norm,
)
from faceuniq.scoring import (
    EligibilityError,
    SubjectDivergence,
    UniquenessReport,
    dataset_uniqueness,
    dataset_uniqueness_min,
    sigmoid,
    subject_divergence,
    twin_dilution_check,
)
from faceuniq.synth import SynthSpec, generate, inject_twins

__version__ = "0.1.0"
