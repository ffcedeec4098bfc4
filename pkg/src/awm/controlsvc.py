"""HTTP control-loop service: a simulated production line per session, the
trained world model suggesting corrective actions cycle by cycle, and
endpoints for operator adjustments and (debug-gated) disturbance injection.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .checkpoint import CheckpointError
from .evalkit import pca_project
from .plantsim import (GRID_LEVELS, CORE_PARAMS, CurveModelConfig, MachineParams,
                       simulate_curve)
from .worldmodel import WorldModel, encode, encode_batch, load_model, predict_action


@dataclass
class PlantState:
    nominal: np.ndarray
    disturbance: np.ndarray
    reference_curve: np.ndarray
    reference_latent: np.ndarray
    cycle_counter: int = 0

    def effective_params(self) -> np.ndarray:
        return np.clip(self.nominal + self.disturbance, 0.0, 1.0)


@dataclass
class Session:
    id: str
    model: WorldModel
    seed: int
    config: CurveModelConfig
    state: PlantState
    pca_mean: np.ndarray
    pca_components: np.ndarray
    lock: threading.Lock = field(default_factory=threading.Lock)


class StartSessionBody(BaseModel):
    ckpt: str | None = None
    seed: int = 0


class AdjustBody(BaseModel):
    delta: list[float]


class DisturbBody(BaseModel):
    offset: list[float]


def _fit_pca_basis(model: WorldModel, config: CurveModelConfig):
    """Fit the 2D latent projection on a noise-free sweep of the grid."""
    sweep = [np.array(c) for c in itertools.product(GRID_LEVELS, repeat=3)]
    quiet = config.with_noise_disabled()
    curves = np.stack([simulate_curve(MachineParams(v, CORE_PARAMS), 0, config=quiet)
                       for v in sweep])
    latents = encode_batch(model, curves).data
    _, comps, _ = pca_project(latents, k=2)
    return latents.mean(axis=0), comps


def create_app(default_ckpt: str | None = None,
               debug_expose_disturbance: bool = False,
               config: CurveModelConfig | None = None) -> FastAPI:
    app = FastAPI(title="awm control service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    plant_config = config or CurveModelConfig()
    sessions: dict[str, Session] = {}
    counter = itertools.count(1)

    def get_session(session_id: str) -> Session:
        sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return sess

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def start_session(body: StartSessionBody):
        ckpt = body.ckpt or default_ckpt
        if ckpt is None:
            raise HTTPException(status_code=400, detail="no checkpoint configured")
        try:
            model = load_model(ckpt)
        except (OSError, CheckpointError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"checkpoint load failed: {exc}")
        nominal = np.full(3, 0.5)
        reference = simulate_curve(MachineParams(nominal, CORE_PARAMS), 0,
                                   config=plant_config.with_noise_disabled())
        state = PlantState(nominal=nominal, disturbance=np.zeros(3),
                           reference_curve=reference,
                           reference_latent=encode(model, reference))
        mean, comps = _fit_pca_basis(model, plant_config)
        session_id = f"s{next(counter)}"
        sessions[session_id] = Session(id=session_id, model=model, seed=body.seed,
                                       config=plant_config, state=state,
                                       pca_mean=mean, pca_components=comps)
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}/state")
    def session_state(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            payload = {
                "nominal_params": sess.state.nominal.tolist(),
                "reference_curve": sess.state.reference_curve.tolist(),
                "cycle_counter": sess.state.cycle_counter,
            }
            if debug_expose_disturbance:
                payload["disturbance"] = sess.state.disturbance.tolist()
            return payload

    @app.post("/sessions/{session_id}/cycle")
    def step_cycle(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            st = sess.state
            params = MachineParams(st.effective_params(), CORE_PARAMS)
            noise_seed = int(np.random.SeedSequence(
                entropy=sess.seed, spawn_key=(st.cycle_counter,)).generate_state(1)[0])
            observed = simulate_curve(params, noise_seed, config=sess.config)
            z_y = encode(sess.model, observed)
            z_x = st.reference_latent
            a_hat = predict_action(sess.model, z_x, z_y)
            point = (z_y - sess.pca_mean) @ sess.pca_components.T
            cycle_id = st.cycle_counter
            st.cycle_counter += 1
            return {
                "cycle_id": cycle_id,
                "observed_curve": observed.tolist(),
                "suggested_action": (-a_hat).tolist(),  # undo the detected deviation
                "latent_point_2d": point.tolist(),
                "deviation_score": float(np.linalg.norm(z_y - z_x)),
            }

    @app.post("/sessions/{session_id}/adjust")
    def adjust(session_id: str, body: AdjustBody):
        sess = get_session(session_id)
        if len(body.delta) != 3:
            raise HTTPException(status_code=422, detail="delta must have 3 components")
        with sess.lock:
            sess.state.nominal = np.clip(sess.state.nominal + np.asarray(body.delta), 0.0, 1.0)
            return {"nominal_params": sess.state.nominal.tolist()}

    @app.post("/sessions/{session_id}/disturb")
    def disturb(session_id: str, body: DisturbBody):
        sess = get_session(session_id)
        if len(body.offset) != 3:
            raise HTTPException(status_code=422, detail="offset must have 3 components")
        with sess.lock:
            sess.state.disturbance = np.asarray(body.offset, dtype=np.float64)
            if debug_expose_disturbance:
                return {"disturbance": sess.state.disturbance.tolist()}
            return {}

    @app.post("/sessions/{session_id}/reset")
    def reset(session_id: str):
        sess = get_session(session_id)
        with sess.lock:
            sess.state.disturbance = np.zeros(3)
            return {}

    return app


def main(argv=None) -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="serve the control loop")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--ckpt", required=True)
    parser.add_argument("--debug-expose-disturbance", action="store_true")
    args = parser.parse_args(argv)
    app = create_app(default_ckpt=args.ckpt,
                     debug_expose_disturbance=args.debug_expose_disturbance)
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
