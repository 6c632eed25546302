"""Request/response models for the HTTP service.

Request bodies are strict (unknown fields rejected). Numeric payloads travel
as plain lists; conversion to numpy happens at the core-package boundary.
"""
from __future__ import annotations

from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field

from ..embedding import Embedding
from ..kernels import KernelSpec


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class KernelDoc(StrictModel):
    variant: Literal["gaussian", "linear"]
    bandwidth: float | None = None

    def to_spec(self) -> KernelSpec:
        return KernelSpec(variant=self.variant, bandwidth=self.bandwidth)


class EmbeddingDoc(StrictModel):
    points: list[list[float]]
    weights: list[float]
    kernel: KernelDoc

    def to_embedding(self) -> Embedding:
        return Embedding(
            points=self.points, weights=self.weights, kernel=self.kernel.to_spec()
        )

    @classmethod
    def from_embedding(cls, emb: Embedding) -> "EmbeddingDoc":
        doc = emb.to_dict()
        return cls(
            points=doc["points"], weights=doc["weights"],
            kernel=KernelDoc(**doc["kernel"]),
        )


class EvalRequest(StrictModel):
    kernel: KernelDoc
    a: list[float]
    b: list[float]


class GramRequest(StrictModel):
    kernel: KernelDoc
    left: list[list[float]]
    right: list[list[float]]


class MedianHeuristicRequest(StrictModel):
    points: list[list[float]]


class EmbeddingPairRequest(StrictModel):
    first: EmbeddingDoc
    second: EmbeddingDoc


class DecodeRequest(StrictModel):
    embedding: EmbeddingDoc
    init: list[float] | None = None


class DecodeResponse(StrictModel):
    point: list[float]
    converged: bool
    iterations: int


class DiagnosticsRequest(StrictModel):
    n: int = Field(default=500, ge=10)
    seed: int = 0
    lambda_scale: float = Field(default=1.0, gt=0)


class ToySupervisionDoc(StrictModel):
    kind: Literal["toy_rollout"] = "toy_rollout"
    theta1: float
    step: float = 0.4


class NearestSetSupervisionDoc(StrictModel):
    kind: Literal["nearest_in_set"] = "nearest_in_set"
    anchors: list[list[float]]
    targets: list[list[float]]


SupervisionDoc = Union[ToySupervisionDoc, NearestSetSupervisionDoc]


class CreateSessionRequest(StrictModel):
    states: list[list[float]]
    observations: list[list[float]]
    kernel_x: KernelDoc
    kernel_y: KernelDoc
    lambda_t: float = Field(gt=0)
    delta_t: float | None = Field(default=None, gt=0)
    mode: Literal["pkbr", "kregbayes", "kbr"]
    mu_t: float | None = Field(default=None, gt=0)
    kbr_use_thresholded: bool = False
    supervision: SupervisionDoc | None = Field(default=None, discriminator="kind")


class SessionInfo(StrictModel):
    session_id: str
    mode: str
    horizon: int
    step_count: int
    kernel_x: KernelDoc
    kernel_y: KernelDoc
    lambda_t: float
    delta_t: float


class ObserveRequest(StrictModel):
    observation: list[float]


class ObserveResponse(StrictModel):
    step: int
    decoded: list[float]
    converged: bool
    sum_beta_plus: float | None
    wall_us: float


class GenerateRequest(StrictModel):
    length: int = Field(ge=1)
    seed: int
    step: float = 0.4
    process_noise: float = Field(default=0.04, gt=0)
    observation_noise: float = Field(default=0.04, gt=0)
    theta1: float | None = None


class TrajectoryResponse(StrictModel):
    thetas: list[float]
    states: list[list[float]]
    observations: list[list[float]]
