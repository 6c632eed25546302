"""Benchmark runner: kernel filters vs parametric baselines on the toy system.

Each seed draws an independent train/test trajectory pair. Kernel algorithms
share one filter model per seed (Gram matrices and factors are reused), so
per-step wall times measure only each algorithm's own update work. BLAS is
pinned to one thread while timing.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from ..baselines import ekf_step, kf_step, ukf_step
from ..errors import KernelBayesError
from ..filtering import build_filter_model, run_filter
from ..kernels import gaussian, median_heuristic
from ..rng import derive_seed
from .config import ExperimentConfig, KERNEL_ALGORITHMS
from .dynamics import (
    ToyDynamicsConfig,
    generate_toy,
    toy_linear_state_space,
    toy_state_space,
    toy_supervision_provider,
)

_BASELINE_STEPS = {"kf": kf_step, "ekf": ekf_step, "ukf": ukf_step}


@dataclass(frozen=True)
class StepRow:
    seed: int
    algorithm: str
    step: int
    decoded: np.ndarray
    converged: bool
    sum_beta_plus: float | None
    wall_us: float
    sq_error: float


@dataclass(frozen=True)
class BenchmarkResult:
    config: ExperimentConfig
    rows: list[StepRow]
    per_step_mse: dict[str, np.ndarray]
    summary: dict[str, dict]
    model_build_ms: float

    def summary_doc(self) -> dict:
        return {
            "schema_version": 1,
            "config": self.config.model_dump(),
            "model_build_ms": self.model_build_ms,
            "algorithms": self.summary,
        }

    def rows_payload(self) -> list[dict]:
        return [
            {
                "seed": row.seed, "step": row.step, "mode": row.algorithm,
                "decoded": [float(v) for v in row.decoded],
                "converged": row.converged,
                "sum_beta_plus": row.sum_beta_plus,
                "wall_us": row.wall_us, "sq_error": row.sq_error,
            }
            for row in self.rows
        ]

    def per_step_payload(self) -> dict[str, list[float]]:
        return {a: [float(v) for v in vals] for a, vals in self.per_step_mse.items()}

    def payload(self) -> dict:
        return {
            "summary": self.summary_doc(),
            "per_step_mse": self.per_step_payload(),
            "rows": self.rows_payload(),
        }


def _resolve_bandwidth(cfg, points) -> float:
    if cfg.mode == "fixed":
        return cfg.value
    return median_heuristic(points)


def _run_baseline(algorithm: str, initial_theta: float, system_cfg, observations):
    if algorithm == "kf":
        spec, belief = toy_linear_state_space(
            initial_theta, step=system_cfg.step,
            process_noise=system_cfg.process_noise,
            observation_noise=system_cfg.observation_noise,
        )
    else:
        spec, belief = toy_state_space(
            initial_theta, step=system_cfg.step,
            process_noise=system_cfg.process_noise,
            observation_noise=system_cfg.observation_noise,
        )
    step_fn = _BASELINE_STEPS[algorithm]
    decoded = []
    walls = []
    for obs in observations:
        start = time.perf_counter_ns()
        belief = step_fn(belief, spec, obs)
        walls.append((time.perf_counter_ns() - start) / 1000.0)
        decoded.append(belief.mean)
    return np.array(decoded), np.array(walls)


def run_benchmark(config: ExperimentConfig) -> BenchmarkResult:
    rows: list[StepRow] = []
    walls = {algo: 0.0 for algo in config.algorithms}
    failures = {algo: 0 for algo in config.algorithms}
    completed_sq: dict[str, list[np.ndarray]] = {algo: [] for algo in config.algorithms}
    needs_model = any(a in KERNEL_ALGORITHMS for a in config.algorithms)
    build_ms = 0.0
    delta_t = config.resolved_delta_t()

    with threadpool_limits(limits=1):
        for seed in config.seeds:
            train = generate_toy(ToyDynamicsConfig(
                length=config.train_size + 1, seed=derive_seed(seed, 0),
                step=config.system.step, process_noise=config.system.process_noise,
                observation_noise=config.system.observation_noise,
            ))
            test = generate_toy(ToyDynamicsConfig(
                length=config.test_size, seed=derive_seed(seed, 1),
                step=config.system.step, process_noise=config.system.process_noise,
                observation_noise=config.system.observation_noise,
            ))
            model = None
            if needs_model:
                start = time.perf_counter_ns()
                model = build_filter_model(
                    train.states, train.observations,
                    kernel_x=gaussian(_resolve_bandwidth(
                        config.observation_bandwidth, train.observations)),
                    kernel_y=gaussian(_resolve_bandwidth(
                        config.state_bandwidth, train.states)),
                    lambda_t=config.lambda_t, delta_t=delta_t,
                )
                build_ms += (time.perf_counter_ns() - start) / 1e6

            for algorithm in config.algorithms:
                try:
                    if algorithm in KERNEL_ALGORITHMS:
                        run = run_filter(
                            model, test.observations, mode=algorithm,
                            supervision=toy_supervision_provider(
                                float(test.thetas[0]), step=config.system.step),
                            mu_t=config.mu_t,
                            kbr_use_thresholded=config.kbr_use_thresholded,
                        )
                        decoded = run.decoded_points()
                        step_walls = np.array([r.wall_us for r in run.records])
                        converged = [r.converged for r in run.records]
                        sums = [r.sum_beta_plus for r in run.records]
                    else:
                        decoded, step_walls = _run_baseline(
                            algorithm, float(test.thetas[0]), config.system,
                            test.observations,
                        )
                        converged = [True] * len(decoded)
                        sums = [None] * len(decoded)
                except KernelBayesError:
                    failures[algorithm] += 1
                    continue
                sq = np.sum((decoded - test.states) ** 2, axis=1)
                completed_sq[algorithm].append(sq)
                walls[algorithm] += float(step_walls.sum()) / 1000.0
                rows.extend(
                    StepRow(
                        seed=seed, algorithm=algorithm, step=t + 1,
                        decoded=decoded[t], converged=bool(converged[t]),
                        sum_beta_plus=sums[t], wall_us=float(step_walls[t]),
                        sq_error=float(sq[t]),
                    )
                    for t in range(len(decoded))
                )

    per_step_mse = {}
    summary = {}
    for algorithm in config.algorithms:
        runs = completed_sq[algorithm]
        if runs:
            per_step = np.mean(np.stack(runs), axis=0)
            total = float(np.mean(per_step))
        else:
            per_step = np.full(config.test_size, np.nan)
            total = float("nan")
        per_step_mse[algorithm] = per_step
        summary[algorithm] = {
            "total_mse": total,
            "wall_ms": walls[algorithm],
            "failures": failures[algorithm],
            "seeds_completed": len(runs),
        }
    return BenchmarkResult(
        config=config, rows=rows, per_step_mse=per_step_mse,
        summary=summary, model_build_ms=build_ms,
    )
