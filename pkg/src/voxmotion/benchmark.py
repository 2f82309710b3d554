"""Seeded synthetic verification suites.

Each category (static scene, rigid tumble, revolute hinge, prismatic
slider) maps a seed to a randomized scene with known ground truth. The
runner generates the frames, classifies the sequence, and scores the
verdict against the category's expected label.

Scene conventions mirror how desk-scale interaction data is captured:
clouds are object-centered, tumbles rotate about an axis through the
object with a slight drift and speed modulation, hinge doors swing about
an edge, and sliders open toward the sensor (negative z with lateral
jitter). Region size is a quarter-odd of the cloud diagonal rather than
the live default fifth: at two thousand points per frame the regions
need corner and edge structure to register reliably, which real sensor
clouds get from their much higher density instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .classifier import ClassifierParams, SequenceVerdict, Verdict, classify_sequence
from .geometry import RigidTransform, aabb_diagonal
from .registration import IcpParams
from .synthetic import MotionSpec, PartSpec, SceneSpec, generate_sequence

CATEGORIES = ("static", "rigid", "revolute", "prismatic")

EXPECTED = {
    "static": Verdict.NONDETERMINISTIC,
    "rigid": Verdict.RIGID,
    "revolute": Verdict.ARTICULATED,
    "prismatic": Verdict.ARTICULATED,
}

_CATEGORY_ID = {category: i for i, category in enumerate(CATEGORIES)}


@dataclass(frozen=True)
class SuiteConfig:
    frame_count: int = 60
    noise_sigma: float = 0.002
    points_per_frame: int = 2000
    region_divisor: float = 2.0  # region edge = AABB diagonal / divisor
    min_region_pairs: int = 120  # drop sliver regions too small to register
    classifier: ClassifierParams = field(
        default_factory=lambda: ClassifierParams(zero_q_tol=0.02, zero_t_tol=0.015)
    )
    icp: IcpParams = field(default_factory=IcpParams)


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def scene_for(category: str, seed: int, config: SuiteConfig = SuiteConfig()) -> SceneSpec:
    """Deterministic randomized scene for one (category, seed) pair."""
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    rng = np.random.default_rng([_CATEGORY_ID[category], seed, 104729])
    n = config.points_per_frame

    if category in ("static", "rigid"):
        size = tuple(rng.uniform([0.36, 0.28, 0.18], [0.52, 0.4, 0.28]))
        box = PartSpec(shape="box", size=size, samples=n,
                       relief=rng.uniform(0.004, 0.006),
                       relief_wavelength=rng.uniform(0.06, 0.09))
        if category == "static":
            motion = MotionSpec(kind="static")
        else:
            # Tumble in place: axis through the object, slow drift, varying
            # speed. The rate band keeps every pair's rotation well above the
            # no-motion resolution yet slow enough for reliable local
            # correspondences at this sampling density.
            motion = MotionSpec(
                kind="rigid",
                axis_point=tuple(rng.uniform(-0.03, 0.03, 3)),
                axis_dir=tuple(_unit(rng)),
                radians_per_frame=math.radians(rng.uniform(0.8, 1.05)),
                velocity=tuple(0.0002 * _unit(rng)),
                rate_amplitude=math.radians(rng.uniform(0.25, 0.5)),
                rate_period=rng.uniform(13.0, 23.0),
                axis_drift_dir=tuple(_unit(rng)),
                axis_drift_radians_per_frame=math.radians(rng.uniform(0.8, 1.6)),
            )
        return SceneSpec(
            parts=(box,),
            motions=(motion,),
            frame_count=config.frame_count,
            noise_sigma=config.noise_sigma,
            seed=seed,
        )

    if category == "revolute":
        # Door pair: both panels upright (local xy mapped to world xz), sharing
        # the vertical hinge edge at x = 0; the door swings about that edge.
        width = rng.uniform(0.3, 0.42)
        height = rng.uniform(0.35, 0.5)
        upright = RigidTransform.from_axis_angle((1, 0, 0), math.radians(90.0))
        relief = rng.uniform(0.004, 0.006)
        wavelength = rng.uniform(0.06, 0.09)
        fixed = PartSpec(
            shape="panel", size=(width, height), samples=n // 2,
            pose=RigidTransform(upright.rotation, (-width / 2.0, 0.0, 0.0)),
            relief=relief, relief_wavelength=wavelength,
        )
        door = PartSpec(
            shape="panel", size=(width, height), samples=n - n // 2,
            pose=RigidTransform(upright.rotation, (width / 2.0, 0.0, 0.0)),
            relief=relief, relief_wavelength=wavelength,
        )
        swing = MotionSpec(
            kind="revolute",
            axis_point=(0.0, 0.0, 0.0),
            axis_dir=(0.0, 0.0, 1.0),
            radians_per_frame=math.radians(rng.uniform(1.6, 2.4)),
            rate_amplitude=math.radians(rng.uniform(1.5, 3.0)),
            rate_period=rng.uniform(13.0, 23.0),
        )
        return SceneSpec(
            parts=(fixed, door),
            motions=(MotionSpec(kind="static"), swing),
            frame_count=config.frame_count,
            noise_sigma=config.noise_sigma,
            seed=seed,
        )

    # Prismatic slider: a drawer-style part over a fixed base, opening toward
    # the sensor (negative z) with a random lateral tilt.
    base_size = tuple(rng.uniform([0.4, 0.3, 0.1], [0.52, 0.4, 0.14]))
    slider_size = tuple(rng.uniform([0.2, 0.16, 0.1], [0.28, 0.22, 0.14]))
    relief = rng.uniform(0.004, 0.006)
    wavelength = rng.uniform(0.06, 0.09)
    base = PartSpec(shape="box", size=base_size, samples=n // 2,
                    relief=relief, relief_wavelength=wavelength)
    slider = PartSpec(
        shape="box",
        size=slider_size,
        samples=n - n // 2,
        relief=relief, relief_wavelength=wavelength,
        pose=RigidTransform(
            np.array([1.0, 0.0, 0.0, 0.0]),
            (0.0, 0.0, -(base_size[2] / 2.0 + slider_size[2] / 2.0 + 0.01)),
        ),
    )
    direction = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -1.0])
    slide = MotionSpec(
        kind="prismatic",
        direction=tuple(direction / np.linalg.norm(direction)),
        metres_per_frame=rng.uniform(0.007, 0.0095),
    )
    return SceneSpec(
        parts=(base, slider),
        motions=(MotionSpec(kind="static"), slide),
        frame_count=config.frame_count,
        noise_sigma=config.noise_sigma,
        seed=seed,
    )


def run_sequence(spec: SceneSpec, config: SuiteConfig = SuiteConfig()) -> SequenceVerdict:
    """Generate and classify one scene."""
    frames, _ = generate_sequence(spec)
    params = config.classifier
    if params.region_size is None:
        params = replace(
            params, region_size=aabb_diagonal(frames[0]) / config.region_divisor
        )
    icp_params = config.icp
    if config.min_region_pairs > icp_params.min_pairs:
        icp_params = replace(icp_params, min_pairs=config.min_region_pairs)
    return classify_sequence(frames, params, icp_params)


@dataclass
class CategoryResult:
    category: str
    expected: Verdict
    verdicts: list[Verdict]
    probabilities: list[dict[str, float]]

    @property
    def accuracy(self) -> float:
        return sum(v == self.expected for v in self.verdicts) / len(self.verdicts)

    def mean_probability(self, label: str) -> float:
        return float(np.mean([p[label] for p in self.probabilities]))


def run_category(category: str, seeds, config: SuiteConfig = SuiteConfig()) -> CategoryResult:
    verdicts = []
    probabilities = []
    for seed in seeds:
        verdict = run_sequence(scene_for(category, seed, config), config)
        verdicts.append(verdict.label)
        probabilities.append(verdict.probabilities)
    return CategoryResult(
        category=category,
        expected=EXPECTED[category],
        verdicts=verdicts,
        probabilities=probabilities,
    )


def run_suite(seeds, config: SuiteConfig = SuiteConfig(), categories=CATEGORIES):
    return {category: run_category(category, seeds, config) for category in categories}
