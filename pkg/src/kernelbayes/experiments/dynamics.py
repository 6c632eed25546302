"""Toy rotating-state system used by the benchmark.

Hidden angle dynamics theta' = theta + step + xi (mod 2pi) with Gaussian
increment noise, observed through a radially modulated point on the circle:
obs = (1 + sin(8 theta)) (cos theta, sin theta) + noise. States are carried
as the 2D representation (cos theta, sin theta) everywhere downstream so the
angular wraparound never leaks into kernels or error metrics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..baselines import GaussianBelief, StateSpaceSpec
from ..errors import InputError
from ..filtering import SupervisionProvider, known_dynamics_provider
from ..rng import PortableRng

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ToyDynamicsConfig:
    length: int
    seed: int
    step: float = 0.4
    process_noise: float = 0.04
    observation_noise: float = 0.04
    theta1: float | None = None

    def __post_init__(self):
        if self.length < 1:
            raise InputError(f"length must be >= 1, got {self.length}")
        if not (self.process_noise >= 0 and self.observation_noise >= 0):
            raise InputError("noise variances must be nonnegative")


@dataclass(frozen=True)
class ToyTrajectory:
    thetas: np.ndarray
    states: np.ndarray
    observations: np.ndarray


def angles_to_states(thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    return np.column_stack([np.cos(thetas), np.sin(thetas)])


def noiseless_observation(thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    return (1.0 + np.sin(8.0 * thetas))[..., None] * angles_to_states(thetas)


def generate_toy(config: ToyDynamicsConfig) -> ToyTrajectory:
    """Sample a trajectory; identical seeds give identical trajectories.

    Draw order is fixed: theta1 (when not pinned), then all angle increments,
    then all observation noise.
    """
    rng = PortableRng(config.seed)
    if config.theta1 is None:
        theta1 = TWO_PI * float(rng.uniform())
    else:
        theta1 = float(config.theta1) % TWO_PI
    increments = config.step + np.sqrt(config.process_noise) * rng.normal(
        size=(config.length - 1,)
    ) if config.length > 1 else np.zeros(0)
    thetas = np.mod(theta1 + np.concatenate([[0.0], np.cumsum(increments)]), TWO_PI)
    noise = np.sqrt(config.observation_noise) * rng.normal(size=(config.length, 2))
    observations = noiseless_observation(thetas) + noise
    return ToyTrajectory(
        thetas=thetas, states=angles_to_states(thetas), observations=observations
    )


def toy_supervision(theta1: float, step_index: int, step: float = 0.4):
    """Noise-free rollout pair for a 1-based filter step.

    Returns (anchor observation, target state) at theta1 + step*(t-1) mod 2pi.
    """
    theta = (theta1 + step * (step_index - 1)) % TWO_PI
    return noiseless_observation(theta), angles_to_states(theta)


def toy_supervision_provider(theta1: float, step: float = 0.4) -> SupervisionProvider:
    return known_dynamics_provider(lambda t: toy_supervision(theta1, t, step))


def _rotation(step: float) -> np.ndarray:
    c, s = np.cos(step), np.sin(step)
    return np.array([[c, -s], [s, c]])


def toy_state_space(initial_theta: float, step: float = 0.4,
                    process_noise: float = 0.04, observation_noise: float = 0.04,
                    initial_var: float = 1e-6):
    """Nonlinear spec on the 2D state for the EKF/UKF baselines.

    The transition renormalizes onto the circle and rotates; the observation
    applies the radial modulation. Step functions predict before updating, so
    the initial mean is rolled back one step to land on the known first angle.
    """
    rot = _rotation(step)

    def transition(s):
        s = np.asarray(s, dtype=float)
        return rot @ (s / np.linalg.norm(s))

    def transition_jacobian(s):
        s = np.asarray(s, dtype=float)
        norm = np.linalg.norm(s)
        u = s / norm
        return rot @ (np.eye(2) - np.outer(u, u)) / norm

    def observation(s):
        s = np.asarray(s, dtype=float)
        theta = np.arctan2(s[1], s[0])
        return (1.0 + np.sin(8.0 * theta)) * (s / np.linalg.norm(s))

    def observation_jacobian(s):
        s = np.asarray(s, dtype=float)
        theta = np.arctan2(s[1], s[0])
        direction = np.array([np.cos(theta), np.sin(theta)])
        tangent = np.array([-np.sin(theta), np.cos(theta)])
        dg_dtheta = 8.0 * np.cos(8.0 * theta) * direction + (
            1.0 + np.sin(8.0 * theta)
        ) * tangent
        dtheta_ds = np.array([-s[1], s[0]]) / float(s @ s)
        return np.outer(dg_dtheta, dtheta_ds)

    initial = GaussianBelief(
        mean=angles_to_states(initial_theta - step),
        cov=initial_var * np.eye(2),
    )
    spec = StateSpaceSpec(
        transition=transition,
        observation=observation,
        process_cov=process_noise * np.eye(2),
        observation_cov=observation_noise * np.eye(2),
        transition_jacobian=transition_jacobian,
        observation_jacobian=observation_jacobian,
    )
    return spec, initial


def toy_linear_state_space(initial_theta: float, step: float = 0.4,
                           process_noise: float = 0.04,
                           observation_noise: float = 0.04,
                           initial_var: float = 1e-6):
    """Naive linear baseline: rotation transition, identity observation.

    The radial modulation is not linearizable globally, so the plain Kalman
    filter simply treats the observed point as a noisy state reading.
    """
    spec = StateSpaceSpec.linear(
        transition_matrix=_rotation(step),
        observation_matrix=np.eye(2),
        process_cov=process_noise * np.eye(2),
        observation_cov=observation_noise * np.eye(2),
    )
    initial = GaussianBelief(
        mean=angles_to_states(initial_theta - step),
        cov=initial_var * np.eye(2),
    )
    return spec, initial
