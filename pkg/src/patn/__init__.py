"""Privacy-preserving perturbation of streaming motion-sensor data.

Subpackage map:

- ``data``: ingestion, framing, windowing, synthetic corpora
- ``bounds``: per-channel imperceptibility budgets
- ``models``: attacker / activity classifier zoo
- ``generator``: the bounded future-directed perturbation network
- ``hato``: history-aware temporal-offset robustness loss
- ``trainer``: generator optimization loop
- ``baselines``: noise, universal, and gradient-sign comparison attacks
- ``evaluation``: privacy, fidelity, and utility metrics
- ``stream``: real-time simulator with causal regeneration
- ``export``: compact binary weight bundles
- ``cli``: end-to-end command-line pipeline
"""

__version__ = "0.1.0"

from .bounds import EpsilonBounds, bounds_from_dataset, project_linf
from .data import (
    FrameConfig,
    SensorSequence,
    WindowPair,
    load_motionsense,
    make_window_pairs,
    to_frames,
)
from .errors import PatnError
from .evaluation import (
    FidelityReport,
    PrivacyReport,
    UtilityReport,
    attack_success_rate,
    deploy_generator,
    equal_error_rate,
    evaluate_fidelity,
    evaluate_privacy,
    evaluate_utility,
    misalignment_eval,
    rank_auc,
)
from .export import export_generator, load_generator
from .generator import GeneratorHandle, PatnConfig, apply, generate, init_patn
from .hato import HatoConfig
from .models import ClassifierHandle, build_classifier, train_attacker, train_har
from .stream import StreamSimulator
from .trainer import TrainConfig, TrainReport, train_patn

__all__ = [
    "ClassifierHandle",
    "EpsilonBounds",
    "FidelityReport",
    "FrameConfig",
    "GeneratorHandle",
    "HatoConfig",
    "PatnConfig",
    "PatnError",
    "PrivacyReport",
    "SensorSequence",
    "StreamSimulator",
    "TrainConfig",
    "TrainReport",
    "UtilityReport",
    "WindowPair",
    "apply",
    "attack_success_rate",
    "bounds_from_dataset",
    "build_classifier",
    "deploy_generator",
    "equal_error_rate",
    "evaluate_fidelity",
    "evaluate_privacy",
    "evaluate_utility",
    "export_generator",
    "generate",
    "init_patn",
    "load_generator",
    "load_motionsense",
    "make_window_pairs",
    "misalignment_eval",
    "project_linf",
    "rank_auc",
    "to_frames",
    "train_attacker",
    "train_har",
    "train_patn",
    "__version__",
]
