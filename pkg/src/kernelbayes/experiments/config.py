"""Validated experiment configuration documents.

Configs are strict: unknown fields are rejected, and every document carries a
schema_version so stored runs stay interpretable.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import InputError

ALGORITHMS = ("pkbr", "kregbayes", "kbr", "kf", "ekf", "ukf")
KERNEL_ALGORITHMS = ("pkbr", "kregbayes", "kbr")


class BandwidthConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["median", "fixed"] = "median"
    value: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.mode == "fixed" and self.value is None:
            raise ValueError("fixed bandwidth requires a value")
        if self.mode == "median" and self.value is not None:
            raise ValueError("median bandwidth takes no value")
        return self


class ToySystemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    step: float = 0.4
    process_noise: float = Field(default=0.04, gt=0)
    observation_noise: float = Field(default=0.04, gt=0)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    train_size: int = Field(default=1000, ge=2)
    test_size: int = Field(default=200, ge=1)
    seeds: list[int] = Field(default=[0], min_length=1)
    algorithms: list[Literal["pkbr", "kregbayes", "kbr", "kf", "ekf", "ukf"]] = Field(
        default=["pkbr", "kregbayes", "kbr", "kf", "ekf", "ukf"], min_length=1
    )
    lambda_t: float = Field(default=1e-6, gt=0)
    delta_t: float | None = Field(default=None, gt=0)
    mu_t: float = Field(default=1e-5, gt=0)
    state_bandwidth: BandwidthConfig = Field(default_factory=BandwidthConfig)
    observation_bandwidth: BandwidthConfig = Field(default_factory=BandwidthConfig)
    kbr_use_thresholded: bool = False
    system: ToySystemConfig = Field(default_factory=ToySystemConfig)

    @model_validator(mode="after")
    def _check(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError("algorithms must be distinct")
        return self

    def resolved_delta_t(self) -> float:
        return self.lambda_t / 2.0 if self.delta_t is None else self.delta_t


class OracleCheckConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    beta_sample_sizes: list[int] = Field(default=[100, 2000], min_length=2)
    beta_seeds: int = Field(default=20, ge=3)
    posterior_sample_sizes: list[int] = Field(default=[200, 1000, 5000], min_length=2)
    posterior_seeds: int = Field(default=20, ge=3)
    lambda_scale: float = Field(default=0.5, gt=0)
    include_negative_control: bool = True

    @model_validator(mode="after")
    def _check(self):
        for sizes in (self.beta_sample_sizes, self.posterior_sample_sizes):
            if sorted(sizes) != sizes or min(sizes) < 10:
                raise ValueError("sample sizes must be increasing and >= 10")
        return self


def _load(model_cls, source):
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise InputError(f"cannot read config {source}: {err}") from err
    else:
        doc = source
    try:
        return model_cls.model_validate(doc)
    except pydantic.ValidationError as err:
        raise InputError(f"invalid config: {err}") from err


def load_experiment_config(source) -> ExperimentConfig:
    """Parse an experiment config from a JSON path or a dict; strict fields."""
    return _load(ExperimentConfig, source)


def load_oracle_config(source) -> OracleCheckConfig:
    return _load(OracleCheckConfig, source)
