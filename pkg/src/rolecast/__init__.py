"""rolecast: classify social-media users as male-, female-, or brand-related.

Hand-crafted features from names, profiles, tweets, and profile images feed
three classifier channels whose probability outputs are stacked into a final
classifier.
"""

from .corpus import (
    Role,
    ROLE_ORDER,
    UserCorpus,
    UserRecord,
    load_dataset,
    save_dataset,
    stratified_folds,
)
from .errors import ConfigError, DataFormatError, ResourceError, RolecastError
from .evalreport import CVReport, accuracy, cross_validate, per_role_metrics, render_report
from .hybrid import (
    HybridConfig,
    HybridModel,
    load_hybrid,
    predict_role,
    save_hybrid,
    train_binary_variant,
    train_hybrid,
)
from .resources import ResourceBundle, load_resources
from .synth import default_synthetic_spec, generate_synthetic_corpus

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Role",
    "ROLE_ORDER",
    "UserCorpus",
    "UserRecord",
    "load_dataset",
    "save_dataset",
    "stratified_folds",
    "RolecastError",
    "DataFormatError",
    "ResourceError",
    "ConfigError",
    "CVReport",
    "accuracy",
    "cross_validate",
    "per_role_metrics",
    "render_report",
    "HybridConfig",
    "HybridModel",
    "train_hybrid",
    "train_binary_variant",
    "predict_role",
    "save_hybrid",
    "load_hybrid",
    "ResourceBundle",
    "load_resources",
    "default_synthetic_spec",
    "generate_synthetic_corpus",
]
