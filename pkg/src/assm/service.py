"""HTTP service exposing anatomical models to the interactive explorer.

Requests are pure functions of the loaded model files and the request
body: set parameters are conditioning values in physical units, unset ones
follow the model's conditional expectation.  Responses carry the generated
mesh as flat float arrays plus both parameter readouts (model-space, which
the explorer displays, and the geometric recipe re-measurement when the
model's topology has a built-in recipe).
"""

from __future__ import annotations

from functools import lru_cache
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import AssmError
from .mapping import (
    AnatModel,
    generate_from_physical,
    read_params,
    sweep,
    variability,
)
from .ssm import devectorize


class GenerateRequest(BaseModel):
    params: dict[str, float] = {}


def _descriptor(model_id: str, model: AnatModel) -> dict[str, Any]:
    v = variability(model)
    return {
        "id": model_id,
        "kind": model.kind,
        "labels": list(model.labels),
        "stats": model.stats.to_dict(),
        "variability": {
            "fractions": {c: float(v.normalized[j]) for j, c in enumerate(model.labels)},
            "order": list(v.sorted_labels()),
        },
    }


def create_app(models: dict[str, AnatModel], std_clamp: float = 4.0) -> FastAPI:
    """Build the service over a fixed registry of loaded models."""
    app = FastAPI(title="assm model service")
    # the explorer is served from a separate static origin during development
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    registry = dict(models)

    def get_model(model_id: str) -> AnatModel:
        model = registry.get(model_id)
        if model is None:
            raise HTTPException(404, f"unknown model {model_id!r}")
        return model

    @app.get("/models")
    def list_models():
        return [_descriptor(mid, m) for mid, m in sorted(registry.items())]

    @app.post("/models/{model_id}/generate")
    def generate(model_id: str, request: GenerateRequest):
        model = get_model(model_id)
        unknown = [c for c in request.params if c not in model.labels]
        if unknown:
            raise HTTPException(422, f"unknown labels {unknown}; model has {list(model.labels)}")
        try:
            shape, beta_std = generate_from_physical(model, request.params)
        except AssmError as exc:
            raise HTTPException(422, str(exc)) from exc
        if std_clamp and float(np.abs(beta_std).max()) > std_clamp:
            raise HTTPException(
                422,
                f"requested parameters leave the modeled range "
                f"(|standardized| > {std_clamp}); loosen --clamp to force",
            )
        mesh = devectorize(shape, model.base.faces, model.base.topology_id)
        readout_std = read_params(model, shape)
        readout_phys = model.stats.destandardize(readout_std)
        payload = {
            "mesh": {
                "vertices": [float(v) for v in mesh.vertices.reshape(-1)],
                "faces": [int(i) for i in mesh.faces.reshape(-1)],
            },
            "measurements": {
                c: {"value": float(readout_phys[j]),
                    "unit": model.stats.units.get(c, "")}
                for j, c in enumerate(model.labels)
            },
            "beta_std": {c: float(beta_std[j]) for j, c in enumerate(model.labels)},
            "recipe_measurements": _recipe_measurements(model, mesh),
        }
        return payload

    @app.get("/models/{model_id}/sweep")
    def sweep_endpoint(model_id: str, param: str, steps: int = 13):
        model = get_model(model_id)
        if param not in model.labels:
            raise HTTPException(422, f"unknown label {param!r}; model has {list(model.labels)}")
        if not 2 <= steps <= 201:
            raise HTTPException(422, "steps must be in [2, 201]")
        result = sweep(model, param, steps=steps)
        return {
            "param": param,
            "labels": list(result.labels),
            "t_values": [float(t) for t in result.t_values],
            "readout_std": [[float(v) for v in row] for row in result.readout_std],
            "readout_physical": [[float(v) for v in row] for row in result.readout_raw],
            "slopes": {c: float(s) for c, s in zip(result.labels, result.slopes)},
        }

    return app


@lru_cache(maxsize=4)
def _fixture_recipe(topology_id: str):
    from .fixtures import FEMUR_TOPOLOGY, SCAPULA_TOPOLOGY, make_femur, make_scapula
    from .morphometry import FEMUR_RECIPE, SCAPULA_RECIPE

    if topology_id == FEMUR_TOPOLOGY:
        return FEMUR_RECIPE, make_femur()[1]
    if topology_id == SCAPULA_TOPOLOGY:
        return SCAPULA_RECIPE, make_scapula()[1]
    return None


def _recipe_measurements(model: AnatModel, mesh) -> dict[str, float] | None:
    """Geometric re-measurement when the topology ships fixture landmarks."""
    from .morphometry import measure_mesh

    found = _fixture_recipe(mesh.topology_id)
    if found is None:
        return None
    recipe, landmarks = found
    try:
        mv = measure_mesh(recipe, landmarks, mesh)
    except AssmError:
        return None
    return {c: float(v) for c, v in mv.values.items()}
