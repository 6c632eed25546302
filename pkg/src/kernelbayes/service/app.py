"""HTTP service exposing the kernel inference primitives.

Pure compute: every endpoint takes data in and returns data out; the only
server-side state is the registry of live filter sessions. The CLI is a thin
client of this app (in-process by default).
"""
from __future__ import annotations

import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..embedding import compute_beta
from ..errors import (
    DegenerateBeliefError,
    FilterStepError,
    InputError,
    KernelBayesError,
    NumericError,
)
from ..filtering import (
    FilterSession,
    build_filter_model,
    decode,
    nearest_in_set_provider,
)
from ..kernels import gaussian, median_heuristic
from ..posterior import fit_threshold
from ..rng import PortableRng
from ..experiments import oracle
from ..experiments.benchmark import run_benchmark
from ..experiments.config import load_experiment_config, load_oracle_config
from ..experiments.dynamics import ToyDynamicsConfig, generate_toy, toy_supervision_provider
from . import schemas


def _session_registry(app: FastAPI) -> dict:
    return app.state.sessions


def create_app() -> FastAPI:
    app = FastAPI(title="kernelbayes", version=__version__)
    app.state.sessions = {}
    app.state.sessions_lock = threading.Lock()

    @app.exception_handler(InputError)
    async def _input_error(request: Request, exc: InputError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(DegenerateBeliefError)
    async def _degenerate(request: Request, exc: DegenerateBeliefError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(NumericError)
    async def _numeric(request: Request, exc: NumericError):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.exception_handler(FilterStepError)
    async def _filter_step(request: Request, exc: FilterStepError):
        status = 409 if isinstance(exc.__cause__, DegenerateBeliefError) else 500
        return JSONResponse(
            status_code=status,
            content={"detail": str(exc), "step": exc.step, "algorithm": exc.algorithm},
        )

    @app.exception_handler(KernelBayesError)
    async def _generic(request: Request, exc: KernelBayesError):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/kernels/eval")
    def kernel_eval(req: schemas.EvalRequest):
        return {"value": req.kernel.to_spec().eval(req.a, req.b)}

    @app.post("/kernels/gram")
    def kernel_gram(req: schemas.GramRequest):
        gm = req.kernel.to_spec().gram(req.left, req.right)
        return {"entries": gm.entries.tolist()}

    @app.post("/kernels/median-heuristic")
    def kernel_median(req: schemas.MedianHeuristicRequest):
        return {"bandwidth": median_heuristic(req.points)}

    @app.post("/embeddings/inner")
    def embeddings_inner(req: schemas.EmbeddingPairRequest):
        return {"value": req.first.to_embedding().inner(req.second.to_embedding())}

    @app.post("/embeddings/distance")
    def embeddings_distance(req: schemas.EmbeddingPairRequest):
        return {
            "value": req.first.to_embedding().rkhs_distance(req.second.to_embedding())
        }

    @app.post("/decode", response_model=schemas.DecodeResponse)
    def decode_endpoint(req: schemas.DecodeRequest):
        emb = req.embedding.to_embedding()
        if req.init is not None:
            init = np.asarray(req.init, dtype=float)
        else:
            w = np.maximum(emb.weights, 0.0)
            total = float(w.sum())
            if total <= 0.0:
                raise InputError("embedding has no positive mass; provide an init")
            init = (w @ emb.points) / total
        result = decode(emb, init)
        return schemas.DecodeResponse(
            point=result.point.tolist(), converged=result.converged,
            iterations=result.iterations,
        )

    @app.post("/posterior/diagnostics")
    def posterior_diagnostics(req: schemas.DiagnosticsRequest):
        """Fit the thresholded regressor on the discrete reference setup and
        return its metadata."""
        model = oracle.reference_discrete_model()
        rng = PortableRng((303, req.n, req.seed))
        y_idx, x_idx = oracle.sample_joint(model, req.n, rng)
        lam = req.lambda_scale * req.n ** -0.5
        kernel = gaussian(1.0)
        sample_y = model.y_states[y_idx]
        sample_x = model.x_states[x_idx]
        beta = compute_beta(
            kernel.gram(sample_y, sample_y),
            kernel.gram(sample_y, model.y_states),
            model.prior, lam,
        )
        regressor = fit_threshold(sample_x, sample_y, beta, kernel, kernel, lam)
        meta = regressor.metadata()
        meta["sum_beta_plus"] = float(beta.thresholded.sum())
        meta["negative_mass"] = beta.negative_mass
        return meta

    @app.post("/filter/sessions", response_model=schemas.SessionInfo)
    def create_session(req: schemas.CreateSessionRequest):
        model = build_filter_model(
            req.states, req.observations,
            kernel_x=req.kernel_x.to_spec(), kernel_y=req.kernel_y.to_spec(),
            lambda_t=req.lambda_t, delta_t=req.delta_t,
        )
        supervision = None
        if req.supervision is not None:
            if req.supervision.kind == "toy_rollout":
                supervision = toy_supervision_provider(
                    req.supervision.theta1, step=req.supervision.step
                )
            else:
                supervision = nearest_in_set_provider(
                    req.supervision.anchors, req.supervision.targets
                )
        session = FilterSession(
            model, req.mode, supervision=supervision, mu_t=req.mu_t,
            kbr_use_thresholded=req.kbr_use_thresholded,
        )
        session_id = uuid.uuid4().hex
        with app.state.sessions_lock:
            app.state.sessions[session_id] = (session, threading.Lock())
        return _session_info(session_id, session)

    def _get_session(session_id: str):
        with app.state.sessions_lock:
            entry = app.state.sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return entry

    def _session_info(session_id: str, session: FilterSession) -> schemas.SessionInfo:
        model = session.model
        return schemas.SessionInfo(
            session_id=session_id, mode=session.mode, horizon=model.horizon,
            step_count=session.step_count,
            kernel_x=schemas.KernelDoc(**model.kernel_x.to_dict()),
            kernel_y=schemas.KernelDoc(**model.kernel_y.to_dict()),
            lambda_t=model.lambda_t, delta_t=model.delta_t,
        )

    @app.post("/filter/sessions/{session_id}/observe",
              response_model=schemas.ObserveResponse)
    def observe(session_id: str, req: schemas.ObserveRequest):
        session, lock = _get_session(session_id)
        with lock:
            record = session.observe(req.observation)
        return schemas.ObserveResponse(
            step=record.step, decoded=record.decoded.tolist(),
            converged=record.converged, sum_beta_plus=record.sum_beta_plus,
            wall_us=record.wall_us,
        )

    @app.get("/filter/sessions/{session_id}", response_model=schemas.SessionInfo)
    def session_info(session_id: str):
        session, _ = _get_session(session_id)
        return _session_info(session_id, session)

    @app.delete("/filter/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        with app.state.sessions_lock:
            if app.state.sessions.pop(session_id, None) is None:
                raise HTTPException(status_code=404, detail=f"no session {session_id}")

    @app.post("/experiments/generate", response_model=schemas.TrajectoryResponse)
    def experiments_generate(req: schemas.GenerateRequest):
        trajectory = generate_toy(ToyDynamicsConfig(
            length=req.length, seed=req.seed, step=req.step,
            process_noise=req.process_noise,
            observation_noise=req.observation_noise, theta1=req.theta1,
        ))
        return schemas.TrajectoryResponse(
            thetas=trajectory.thetas.tolist(),
            states=trajectory.states.tolist(),
            observations=trajectory.observations.tolist(),
        )

    @app.post("/experiments/benchmark")
    def experiments_benchmark(config: dict):
        return run_benchmark(load_experiment_config(config)).payload()

    @app.post("/experiments/oracle-check")
    def experiments_oracle_check(config: dict):
        return oracle.run_oracle_check(load_oracle_config(config))

    return app


app = create_app()
