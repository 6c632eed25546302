"""Nonparametric state-space filtering with kernel posterior updates.

A KernelFilterModel is built once from a training trajectory of (state,
observation) pairs; the expensive Gram matrices and Cholesky factors are
cached on it. Filtering a test sequence then alternates:

* predict: push the current belief weights through the learned transition
  (two solves against the cached state-Gram factor),
* update: condition on the next observation via the thresholded ridge system
  over the active rows (pkbr), the supervision-augmented system (kregbayes),
  or the squared-regularization weighting (kbr baseline).

Beliefs are decoded to points by mean-shift fixed-point iteration on the
weighted kernel density; a degenerate denominator falls back to the best
supported training state.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .embedding import BetaWeights, Embedding
from .errors import (
    DecodeDegenerateError,
    DegenerateBeliefError,
    FilterStepError,
    InputError,
    KernelBayesError,
)
from .kernels import KernelSpec, as_point, as_points
from .linalg import solve_spd, spd_factor, spd_solve_factored
from .posterior import kbr_squared_weights

DECODE_TOL = 1e-8
DECODE_MAX_ITER = 200
DECODE_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelFilterModel:
    """Training trajectory plus cached Gram matrices and factors."""

    states: np.ndarray
    observations: np.ndarray
    kernel_x: KernelSpec
    kernel_y: KernelSpec
    lambda_t: float
    delta_t: float
    gram_y: np.ndarray
    gram_y_next: np.ndarray
    gram_x: np.ndarray
    factor_y: tuple
    factor_x: tuple

    @property
    def horizon(self) -> int:
        """Number of training transitions T; pairs (y_i, x_i) for i < T."""
        return self.states.shape[0] - 1

    def train_states(self) -> np.ndarray:
        return self.states[: self.horizon]

    def train_observations(self) -> np.ndarray:
        return self.observations[: self.horizon]


def build_filter_model(states, observations, kernel_x: KernelSpec,
                       kernel_y: KernelSpec, lambda_t: float,
                       delta_t: float | None = None) -> KernelFilterModel:
    """Cache the Gram systems for a training trajectory of length T+1.

    delta_t defaults to lambda_t / 2.
    """
    states = as_points(states)
    observations = as_points(observations)
    if states.shape[0] != observations.shape[0]:
        raise InputError(
            f"{states.shape[0]} states but {observations.shape[0]} observations"
        )
    if states.shape[0] < 2:
        raise InputError("training trajectory needs at least 2 steps")
    if not (lambda_t > 0 and np.isfinite(lambda_t)):
        raise InputError(f"lambda_t must be finite and > 0, got {lambda_t}")
    if delta_t is None:
        delta_t = lambda_t / 2.0
    if not (delta_t > 0 and np.isfinite(delta_t)):
        raise InputError(f"delta_t must be finite and > 0, got {delta_t}")
    horizon = states.shape[0] - 1
    train_y = states[:horizon]
    train_x = observations[:horizon]
    gram_y = kernel_y.gram(train_y, train_y).entries
    gram_y_next = kernel_y.gram(train_y, states[1:]).entries
    gram_x = kernel_x.gram(train_x, train_x).entries
    ridge = horizon * lambda_t
    factor_y = spd_factor(gram_y + ridge * np.eye(horizon))
    factor_x = spd_factor(gram_x + ridge * np.eye(horizon))
    return KernelFilterModel(
        states=states, observations=observations,
        kernel_x=kernel_x, kernel_y=kernel_y,
        lambda_t=float(lambda_t), delta_t=float(delta_t),
        gram_y=gram_y, gram_y_next=gram_y_next, gram_x=gram_x,
        factor_y=factor_y, factor_x=factor_x,
    )


@dataclass(frozen=True)
class FilterState:
    """Belief weights over the training states, plus an optional extra atom
    at a supervision target carried by the regularized update."""

    alpha: np.ndarray
    tilde_point: np.ndarray | None = None
    tilde_weight: float = 0.0


def belief_embedding(model: KernelFilterModel, state: FilterState) -> Embedding:
    points = model.train_states()
    weights = state.alpha
    if state.tilde_point is not None:
        points = np.concatenate([points, state.tilde_point[None, :]])
        weights = np.concatenate([weights, [state.tilde_weight]])
    return Embedding(points=points, weights=weights, kernel=model.kernel_y)


def init_state(model: KernelFilterModel, observation) -> FilterState:
    """Condition the training prior on the first observation."""
    x = as_point(observation)
    k_vec = model.kernel_x.gram(model.train_observations(), x[None, :]).entries[:, 0]
    alpha = spd_solve_factored(model.factor_x, k_vec)
    return FilterState(alpha=alpha)


def predict_weights(model: KernelFilterModel, state: FilterState) -> BetaWeights:
    """Push the belief through the learned transition.

    beta = S^{-1} G_+ S^{-1} v with S = G_Y + T*lambda_t*I, G_+ the one-step
    cross-Gram, and v the belief's Gram image (including the supervision atom
    when present).
    """
    v = model.gram_y @ state.alpha
    if state.tilde_point is not None:
        v = v + state.tilde_weight * model.kernel_y.gram(
            model.train_states(), state.tilde_point[None, :]
        ).entries[:, 0]
    a = spd_solve_factored(model.factor_y, v)
    u = model.gram_y_next @ a
    beta = spd_solve_factored(model.factor_y, u)
    return BetaWeights(raw=beta)


def update(model: KernelFilterModel, beta: BetaWeights, observation) -> FilterState:
    """Thresholded posterior update: ridge solve over the active rows only."""
    x = as_point(observation)
    active = beta.active
    if active.size == 0:
        raise DegenerateBeliefError("predicted belief has no active support")
    obs_train = model.train_observations()
    system = model.gram_x[np.ix_(active, active)] + model.delta_t * np.diag(
        1.0 / beta.thresholded[active]
    )
    rhs = model.kernel_x.gram(obs_train[active], x[None, :]).entries[:, 0]
    gamma = solve_spd(system, rhs)
    alpha = np.zeros(model.horizon)
    alpha[active] = gamma
    return FilterState(alpha=alpha)


def update_regularized(model: KernelFilterModel, beta: BetaWeights, observation,
                       supervision_anchor, supervision_target,
                       mu_t: float) -> FilterState:
    """Thresholded update augmented with one supervision pair.

    The supervision anchor joins the active observations with ridge entry
    delta_t / mu_t; the returned state carries the target as an extra atom.
    """
    x = as_point(observation)
    anchor = as_point(supervision_anchor)
    target = as_point(supervision_target)
    if not (mu_t > 0 and np.isfinite(mu_t)):
        raise InputError(f"mu_t must be finite and > 0, got {mu_t}")
    active = beta.active
    if active.size == 0:
        raise DegenerateBeliefError("predicted belief has no active support")
    obs_train = model.train_observations()
    m = active.size
    anchors = np.concatenate([obs_train[active], anchor[None, :]])
    system = model.kernel_x.gram(anchors, anchors).entries
    ridge = np.concatenate([
        model.delta_t / beta.thresholded[active],
        [model.delta_t / mu_t],
    ])
    system[np.diag_indices(m + 1)] += ridge
    rhs = model.kernel_x.gram(anchors, x[None, :]).entries[:, 0]
    gamma = solve_spd(system, rhs)
    alpha = np.zeros(model.horizon)
    alpha[active] = gamma[:m]
    return FilterState(alpha=alpha, tilde_point=target, tilde_weight=float(gamma[m]))


@dataclass(frozen=True)
class DecodeResult:
    point: np.ndarray
    converged: bool
    iterations: int


def decode(belief: Embedding, init) -> DecodeResult:
    """Mean-shift fixed point of the weighted kernel density.

    Iterates y <- sum_i w_i k(y_i, y) y_i / sum_i w_i k(y_i, y) until the step
    norm drops below 1e-8 or 200 iterations pass. A denominator magnitude
    below 1e-12 raises DecodeDegenerateError.
    """
    if belief.kernel.variant != "gaussian":
        raise InputError("decode requires a gaussian-kernel embedding")
    y = as_point(init)
    if y.shape[0] != belief.points.shape[1]:
        raise InputError(
            f"init dimension {y.shape[0]} != point dimension {belief.points.shape[1]}"
        )
    for iteration in range(1, DECODE_MAX_ITER + 1):
        k_vec = belief.kernel.gram(belief.points, y[None, :]).entries[:, 0]
        wk = belief.weights * k_vec
        denom = float(np.sum(wk))
        if abs(denom) < DECODE_DENOM_FLOOR:
            raise DecodeDegenerateError(
                f"mean-shift denominator {denom:.3e} below {DECODE_DENOM_FLOOR:.0e}"
            )
        y_next = (wk @ belief.points) / denom
        step = float(np.linalg.norm(y_next - y))
        y = y_next
        if step < DECODE_TOL:
            return DecodeResult(point=y, converged=True, iterations=iteration)
    return DecodeResult(point=y, converged=False, iterations=DECODE_MAX_ITER)


def best_point_fallback(belief: Embedding) -> np.ndarray:
    """Support point maximizing <phi(y_i), m>; decode fallback on degeneracy."""
    scores = belief.kernel.gram(belief.points, belief.points).entries @ belief.weights
    return belief.points[int(np.argmax(scores))].copy()


def _initial_guess(belief: Embedding) -> np.ndarray:
    w = np.maximum(belief.weights, 0.0)
    total = float(np.sum(w))
    if total <= 0.0:
        return best_point_fallback(belief)
    return (w @ belief.points) / total


# provider(step, observation, prev_estimate) -> (anchor_observation, target_state)
SupervisionProvider = Callable[[int, np.ndarray, np.ndarray | None], tuple]


def known_dynamics_provider(fn: Callable[[int], tuple]) -> SupervisionProvider:
    """Supervision from known dynamics: fn(step) -> (anchor, target)."""

    def provider(step, observation, prev_estimate):
        return fn(step)

    return provider


def nearest_in_set_provider(anchors, targets) -> SupervisionProvider:
    """Supervision from a fixed set: pick the pair whose anchor is nearest the
    current observation."""
    anchors = as_points(anchors)
    targets = as_points(targets)
    if anchors.shape[0] != targets.shape[0]:
        raise InputError("anchor and target counts differ")

    def provider(step, observation, prev_estimate):
        diff = anchors - np.asarray(observation, dtype=float)[None, :]
        idx = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
        return anchors[idx], targets[idx]

    return provider


MODES = ("pkbr", "kregbayes", "kbr")


@dataclass(frozen=True)
class FilterStepRecord:
    step: int
    decoded: np.ndarray
    converged: bool
    sum_beta_plus: float | None
    wall_us: float


@dataclass(frozen=True)
class FilterRun:
    mode: str
    records: list[FilterStepRecord]
    beliefs: list[Embedding] = field(default_factory=list)

    def decoded_points(self) -> np.ndarray:
        return np.array([r.decoded for r in self.records])


class FilterSession:
    """Incremental filtering: feed observations one at a time.

    The first observation conditions the training prior; every further one
    runs predict + the mode's update. Decode failures fall back to the best
    supported point; any other error is wrapped in a FilterStepError with the
    1-based step index, and the session state is left untouched so the caller
    may retry or abandon.
    """

    def __init__(self, model: KernelFilterModel, mode: str,
                 supervision: SupervisionProvider | None = None,
                 mu_t: float | None = None,
                 kbr_use_thresholded: bool = False):
        if mode not in MODES:
            raise InputError(f"unknown filter mode {mode!r}; expected one of {MODES}")
        if mode == "kregbayes":
            if supervision is None:
                raise InputError("kregbayes mode requires a supervision provider")
            if mu_t is None:
                raise InputError("kregbayes mode requires mu_t")
        self.model = model
        self.mode = mode
        self.supervision = supervision
        self.mu_t = mu_t
        self.kbr_use_thresholded = kbr_use_thresholded
        self.last_belief: Embedding | None = None
        self._state: FilterState | None = None
        self._prev_decoded: np.ndarray | None = None
        self._step = 0

    @property
    def step_count(self) -> int:
        return self._step

    def observe(self, observation) -> FilterStepRecord:
        x = as_point(observation)
        if x.shape[0] != self.model.observations.shape[1]:
            raise InputError(
                f"observation dimension {x.shape[0]} != "
                f"model dimension {self.model.observations.shape[1]}"
            )
        t = self._step + 1
        start = time.perf_counter_ns()
        try:
            if t == 1:
                state = init_state(self.model, x)
                sum_beta_plus = None
            else:
                beta = predict_weights(self.model, self._state)
                sum_beta_plus = float(np.sum(beta.thresholded))
                if self.mode == "pkbr":
                    state = update(self.model, beta, x)
                elif self.mode == "kregbayes":
                    anchor, target = self.supervision(t, x, self._prev_decoded)
                    state = update_regularized(
                        self.model, beta, x, anchor, target, self.mu_t
                    )
                else:
                    weights = beta.thresholded if self.kbr_use_thresholded else beta.raw
                    k_vec = self.model.kernel_x.gram(
                        self.model.train_observations(), x[None, :]
                    ).entries[:, 0]
                    alpha = kbr_squared_weights(
                        self.model.gram_x, k_vec, weights, self.model.delta_t
                    )
                    state = FilterState(alpha=alpha)
            belief = belief_embedding(self.model, state)
            init = self._prev_decoded if self._prev_decoded is not None \
                else _initial_guess(belief)
            try:
                result = decode(belief, init)
                decoded, converged = result.point, result.converged
            except DecodeDegenerateError:
                decoded, converged = best_point_fallback(belief), False
        except FilterStepError:
            raise
        except KernelBayesError as err:
            raise FilterStepError(t, self.mode, str(err)) from err
        wall_us = (time.perf_counter_ns() - start) / 1000.0
        self._state = state
        self._step = t
        self.last_belief = belief
        self._prev_decoded = decoded
        return FilterStepRecord(
            step=t, decoded=decoded, converged=converged,
            sum_beta_plus=sum_beta_plus, wall_us=wall_us,
        )


def run_filter(model: KernelFilterModel, observations, mode: str,
               supervision: SupervisionProvider | None = None,
               mu_t: float | None = None,
               kbr_use_thresholded: bool = False,
               keep_beliefs: bool = False) -> FilterRun:
    """Filter a whole test observation sequence and decode a state per step."""
    obs = as_points(observations)
    if obs.shape[1] != model.observations.shape[1]:
        raise InputError("test observations have the wrong dimension")
    session = FilterSession(
        model, mode, supervision=supervision, mu_t=mu_t,
        kbr_use_thresholded=kbr_use_thresholded,
    )
    records: list[FilterStepRecord] = []
    beliefs: list[Embedding] = []
    for row in obs:
        records.append(session.observe(row))
        if keep_beliefs:
            beliefs.append(session.last_belief)
    return FilterRun(mode=mode, records=records, beliefs=beliefs)
