"""Keypoint bag-of-words descriptors and random-forest force regression on multi-modal flow fields."""

from .descriptors import describe_brisk, describe_orb, describe_sd, describe_sift, describe_surf
from .dictionary import Dictionary, assign, kmajority, kmeans_approx
from .encoding import GlobalDescriptor, encode_de, encode_md, encode_sd
from .errors import ConfigError, DataError, FlowdescError, FormatError, InputError
from .evaluation import EvalReport, evaluate, sweep_dictionary, sweep_training_size
from .fields import CHANNELS, FlowField, SampleRecord, crop_window, interpolate_grid, read_field, write_field
from .forest import Forest, ForestParams, fit, predict
from .keypoints import Keypoint, dedup_iou, dense_sample, detect_dog, detect_fast, detect_hessian
from .pipeline import PipelineConfig, run_pipeline
from .synth import SynthParams, synth_dataset, synth_field

__version__ = "0.1.0"

__all__ = [
    "CHANNELS", "ConfigError", "DataError", "Dictionary", "EvalReport", "FlowField", "FlowdescError", "Forest",
    "ForestParams", "FormatError", "GlobalDescriptor", "InputError", "Keypoint", "PipelineConfig", "SampleRecord",
    "SynthParams", "assign", "crop_window", "dedup_iou", "dense_sample", "describe_brisk", "describe_orb",
    "describe_sd", "describe_sift", "describe_surf", "detect_dog", "detect_fast", "detect_hessian", "encode_de",
    "encode_md", "encode_sd", "evaluate", "fit", "interpolate_grid", "kmajority", "kmeans_approx", "predict",
    "read_field", "run_pipeline", "sweep_dictionary", "sweep_training_size", "synth_dataset", "synth_field",
    "write_field",
]
