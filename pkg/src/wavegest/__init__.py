"""Rhythmic gesture primitives in the frequency domain.

Demonstrations are projected onto complex Fourier bases, the weights are
modeled by a Gaussian over (offset, log-amplitude, phase), and new gestures
are obtained by sampling and conditioning that Gaussian.
"""
from .basis import ComplexWeights, build_basis, fit_weights, reconstruct
from .dataset_io import (Dataset, DemoFormatError, Demonstration, load_dataset,
                         load_demo, save_dataset, save_demo)
from .generator import GeneratorSpec, generate_dataset, load_generator_spec
from .kinematics import (KinematicChain, check_joint_limits, forward_kinematics,
                         load_chain, render_overlay)
from .model import (AmplitudeFloorWarning, ConditioningConstraint, GestureModel,
                    WeightIndexMap, align_phases, condition, fit_model,
                    from_logpolar, load_model, sample_model, save_model,
                    to_logpolar)
from .synthesis import (SynthesisRequest, sample_gesture, scale_amplitude,
                        shift_phase, spectrum_stats, synthesize, time_scale)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeFloorWarning", "ComplexWeights", "ConditioningConstraint",
    "Dataset", "DemoFormatError", "Demonstration", "GeneratorSpec",
    "GestureModel", "KinematicChain", "SynthesisRequest", "WeightIndexMap",
    "align_phases", "build_basis", "check_joint_limits", "condition",
    "fit_model", "fit_weights", "forward_kinematics", "from_logpolar",
    "generate_dataset", "load_chain", "load_dataset", "load_demo",
    "load_generator_spec", "load_model", "reconstruct", "render_overlay",
    "sample_gesture", "sample_model", "save_dataset", "save_demo",
    "save_model", "scale_amplitude", "shift_phase", "spectrum_stats",
    "synthesize", "time_scale", "to_logpolar",
]
