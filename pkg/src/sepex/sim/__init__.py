from .mixer import MixedScene, mix, mix_scene
from .rir import (
    calibrated_reflection_coefficient,
    image_method_rir,
    reflection_coefficient,
    rir_length,
    schroeder_t60,
)
from .scenario import (
    SPEED_OF_SOUND,
    RoomSpec,
    ScenarioSpec,
    critical_distance,
    evaluation_scenario,
    load_scenario,
    sample_scenario,
    save_scenario,
)

__all__ = [
    "MixedScene",
    "mix",
    "mix_scene",
    "calibrated_reflection_coefficient",
    "image_method_rir",
    "reflection_coefficient",
    "rir_length",
    "schroeder_t60",
    "SPEED_OF_SOUND",
    "RoomSpec",
    "ScenarioSpec",
    "critical_distance",
    "evaluation_scenario",
    "load_scenario",
    "sample_scenario",
    "save_scenario",
]
