"""Reference bridge from object-index manifests to a feature-store model."""

from .apply import apply_manifest
from .feature_store import FeatureStore, FeatureStoreWriter, build_store_from_detections
from .runner import run_and_export
from .toy_model import ToyLinearSoftmaxModel

__version__ = "0.1.0"
