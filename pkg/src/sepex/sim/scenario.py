"""Room and scene descriptions plus randomized scenario sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..rng import substream

__all__ = [
    "RoomSpec",
    "ScenarioSpec",
    "critical_distance",
    "sample_scenario",
    "evaluation_scenario",
    "save_scenario",
    "load_scenario",
]

SPEED_OF_SOUND = 343.0

# sampler bounds
ROOM_LENGTH_RANGE = (3.0, 15.0)
ROOM_WIDTH_RANGE = (3.0, 15.0)
ROOM_HEIGHT_RANGE = (2.0, 4.0)
WALL_CLEARANCE_RANGE = (1.0, 1.5)
MIC_SPACING = 0.2
SOURCE_MIC_HEIGHT = 1.2
DOA_INTERVAL_RANGE = (20.0, 160.0)
SOURCE_WALL_MARGIN = 0.1
MAX_REJECTIONS = 10_000


@dataclass(frozen=True)
class RoomSpec:
    """Shoebox room geometry and target reverberation time."""

    length: float
    width: float
    height: float
    rt60: float
    sample_rate: int = 16000

    def __post_init__(self) -> None:
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("room dimensions must be positive")
        if self.rt60 < 0:
            raise ValueError("rt60 must be nonnegative")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def dimensions(self) -> np.ndarray:
        return np.array([self.length, self.width, self.height])

    @property
    def volume(self) -> float:
        return self.length * self.width * self.height

    @property
    def surface(self) -> float:
        l, w, h = self.length, self.width, self.height
        return 2.0 * (l * w + l * h + w * h)


@dataclass(frozen=True)
class ScenarioSpec:
    """A room with microphone and source placements."""

    room: RoomSpec
    mic_positions: np.ndarray  # (n_mics, 3)
    source_positions: np.ndarray  # (n_sources, 3)
    seed: int = 0

    def __post_init__(self) -> None:
        mics = np.atleast_2d(np.asarray(self.mic_positions, dtype=np.float64))
        srcs = np.atleast_2d(np.asarray(self.source_positions, dtype=np.float64))
        dims = self.room.dimensions
        for name, pts in (("microphone", mics), ("source", srcs)):
            if pts.shape[1] != 3:
                raise ValueError(f"{name} positions must be 3-d points")
            if np.any(pts <= 0) or np.any(pts >= dims):
                raise ValueError(f"{name} positions must lie strictly inside the room")
        object.__setattr__(self, "mic_positions", mics)
        object.__setattr__(self, "source_positions", srcs)

    @property
    def n_mics(self) -> int:
        return self.mic_positions.shape[0]

    @property
    def n_sources(self) -> int:
        return self.source_positions.shape[0]


def critical_distance(volume: float, rt60: float) -> float:
    """Distance at which direct and reverberant energy are equal."""
    if rt60 <= 0:
        raise ValueError("rt60 must be positive")
    return 0.057 * np.sqrt(volume / rt60)


def sample_scenario(rt60: float, seed: int, n_sources: int = 2, sample_rate: int = 16000) -> ScenarioSpec:
    """Draw a random two-microphone scenario.

    Room dimensions are uniform over [3, 15] x [3, 15] x [2, 4] m; the
    0.2 m microphone pair keeps a sampled 1-1.5 m wall clearance; the
    sources sit on one side of the array at 1.2 m height, between 0.5 m
    and ``critical distance + 0.5 m`` from the array center, with an
    angular separation between 20 and 160 degrees.  Geometry is
    rejection-sampled; the same seed reproduces the same scenario.

    Raises:
        RuntimeError: if no geometry satisfies the constraints after
            10,000 rejections.
    """
    if not 0.1 <= rt60 <= 0.7:
        raise ValueError("rt60 must lie in [0.1, 0.7] for sampled scenarios")
    rng = substream(seed, "scenario")

    for _ in range(MAX_REJECTIONS):
        room = RoomSpec(
            length=rng.uniform(*ROOM_LENGTH_RANGE),
            width=rng.uniform(*ROOM_WIDTH_RANGE),
            height=rng.uniform(*ROOM_HEIGHT_RANGE),
            rt60=rt60,
            sample_rate=sample_rate,
        )
        clearance = rng.uniform(*WALL_CLEARANCE_RANGE)
        lo = np.array([clearance, clearance])
        hi = np.array([room.length - clearance, room.width - clearance])
        if np.any(hi <= lo):
            continue
        center = np.append(rng.uniform(lo, hi), SOURCE_MIC_HEIGHT)
        azimuth = rng.uniform(0.0, 2.0 * np.pi)
        axis = np.array([np.cos(azimuth), np.sin(azimuth), 0.0])
        normal = np.array([-np.sin(azimuth), np.cos(azimuth), 0.0])
        mics = np.stack([center - 0.5 * MIC_SPACING * axis, center + 0.5 * MIC_SPACING * axis])
        if np.any(mics[:, :2] < clearance) or np.any(
            mics[:, :2] > np.array([room.length, room.width]) - clearance
        ):
            continue

        r_c = critical_distance(room.volume, rt60)
        angles = np.sort(rng.uniform(0.0, np.pi, size=n_sources))
        interval = np.degrees(angles[-1] - angles[0])
        if not DOA_INTERVAL_RANGE[0] <= interval <= DOA_INTERVAL_RANGE[1]:
            continue
        distances = rng.uniform(0.5, r_c + 0.5, size=n_sources)
        sources = (
            center[None, :]
            + distances[:, None] * (np.cos(angles)[:, None] * axis + np.sin(angles)[:, None] * normal)
        )
        margin = SOURCE_WALL_MARGIN
        if np.any(sources < margin) or np.any(sources > room.dimensions - margin):
            continue
        return ScenarioSpec(room, mics, sources, seed=seed)

    raise RuntimeError(
        f"no feasible scenario after {MAX_REJECTIONS} rejections (rt60={rt60})"
    )


def evaluation_scenario(
    rt60: float,
    target_angle_deg: float,
    interferer_angle_deg: float,
    distance: float = 1.0,
    mic_spacing: float = 0.08,
    sample_rate: int = 16000,
) -> ScenarioSpec:
    """Fixed-room measurement-style scene for evaluation runs.

    A 6 x 6 x 2.4 m room with a two-microphone array at its center;
    sources at the given angles (degrees, 0 = array axis) and distance.
    Stands in for measured impulse-response sets recorded on a linear
    array at one meter.
    """
    room = RoomSpec(6.0, 6.0, 2.4, rt60, sample_rate)
    center = np.array([3.0, 3.0, SOURCE_MIC_HEIGHT])
    axis = np.array([1.0, 0.0, 0.0])
    normal = np.array([0.0, 1.0, 0.0])
    mics = np.stack([center - 0.5 * mic_spacing * axis, center + 0.5 * mic_spacing * axis])
    sources = []
    for angle in (target_angle_deg, interferer_angle_deg):
        rad = np.radians(angle)
        sources.append(center + distance * (np.cos(rad) * axis + np.sin(rad) * normal))
    return ScenarioSpec(room, mics, np.stack(sources))


def _scenario_dict(spec: ScenarioSpec) -> dict:
    return {
        "room": {
            "length": spec.room.length,
            "width": spec.room.width,
            "height": spec.room.height,
            "rt60": spec.room.rt60,
            "sample_rate": spec.room.sample_rate,
        },
        "mic_positions": spec.mic_positions.tolist(),
        "source_positions": spec.source_positions.tolist(),
        "seed": spec.seed,
    }


def save_scenario(path: str | Path, spec: ScenarioSpec) -> None:
    """Write a scenario as human-readable structured text."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_scenario_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path: str | Path) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    room = RoomSpec(**data["room"])
    return ScenarioSpec(
        room,
        np.asarray(data["mic_positions"]),
        np.asarray(data["source_positions"]),
        seed=int(data.get("seed", 0)),
    )
