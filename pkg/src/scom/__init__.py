"""Train one concept-to-label model that answers for every concept subset,
pick good subsets greedily by predictive entropy, and measure how oracle
interventions on the selected concepts move accuracy."""

from .data import (
    ConceptDataset,
    ConceptGroup,
    ConceptSchema,
    SyntheticSpec,
    assign_splits,
    class_level_oracle,
    generate_synthetic,
    load_dataset,
    load_schema,
    save_dataset,
    save_schema,
    soft_oracle,
)
from .errors import (
    CheckpointError,
    ConstraintError,
    EstimatorError,
    IngestionError,
    InputError,
    OracleError,
    ScomError,
)
from .intervention import (
    InterventionPlan,
    SweepReport,
    apply_interventions,
    intervention_sweep,
)
from .masking import augment, augment_rows, mask_from_groups, sample_mask
from .model import (
    ConceptModel,
    Prediction,
    accuracy,
    ensure_compatible,
    evaluate,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)
from .nn import TrainConfig
from .selection import (
    SelectionRequest,
    SelectionTrace,
    backward_eliminate,
    exhaustive_best_subset,
    forward_select,
    load_trace,
    plugin_mi,
    random_select,
    save_trace,
    select,
)

__version__ = "0.1.0"

__all__ = [
    "ConceptDataset", "ConceptGroup", "ConceptSchema", "SyntheticSpec",
    "assign_splits", "class_level_oracle", "generate_synthetic", "load_dataset", "load_schema",
    "save_dataset", "save_schema", "soft_oracle",
    "CheckpointError", "ConstraintError", "EstimatorError", "IngestionError",
    "InputError", "OracleError", "ScomError",
    "InterventionPlan", "SweepReport", "apply_interventions", "intervention_sweep",
    "augment", "augment_rows", "mask_from_groups", "sample_mask",
    "ConceptModel", "Prediction", "evaluate", "load_checkpoint", "predict",
    "accuracy", "ensure_compatible", "save_checkpoint", "train",
    "TrainConfig",
    "SelectionRequest", "SelectionTrace", "backward_eliminate",
    "exhaustive_best_subset", "forward_select", "load_trace", "plugin_mi",
    "random_select", "save_trace", "select",
    "__version__",
]
