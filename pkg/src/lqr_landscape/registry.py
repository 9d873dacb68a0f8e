"""Built-in LQR instances and JSON instance loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import PlantError
from .lti_model import Plant


@dataclass(frozen=True)
class Instance:
    name: str
    plant: Plant
    B1: np.ndarray | None = None
    x0: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"name": self.name, "params": dict(self.params), **self.plant.to_dict()}
        if self.B1 is not None:
            out["B1"] = np.asarray(self.B1).tolist()
        if self.x0 is not None:
            out["x0"] = np.asarray(self.x0).tolist()
        return out


def single_integrator(**_) -> Instance:
    """``dx/dt = u/2`` with unit weights; ``J(-k) = k + 1/k``."""
    return Instance("single-integrator", Plant(0.0, 0.5, 1.0, 1.0, 1.0), x0=np.array([1.0]))


def example_3_1(a: float = 0.1, **_) -> Instance:
    """Stable symmetric ``A`` with a rank-one ``W``; the optimal gain is not unique."""
    A = np.array([[-1.0, a], [a, -1.0]])
    B = np.array([[1.0], [1.0]])
    W = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return Instance("example-3-1", Plant(A, B, np.eye(2), 1.0, W), params={"a": a})


def example_4_3(a: float = 0.1, **_) -> Instance:
    """Controllable pair with ``W = B B'``; gradient dominance holds despite singular ``W``."""
    A = np.array([[-10.0, a], [a, -1.0]])
    B = np.array([[1.0], [1.0]])
    return Instance("example-4-3", Plant(A, B, np.eye(2), 1.0, B @ B.T), B1=B, params={"a": a})


def example_5_1(**_) -> Instance:
    """Single integrator ``dx/dt = u`` from ``x0 = 1``."""
    return Instance("example-5-1", Plant(0.0, 1.0, 1.0, 1.0, 1.0), x0=np.array([1.0]))


BUILTINS = {
    "single-integrator": single_integrator,
    "example-3-1": example_3_1,
    "example-4-3": example_4_3,
    "example-5-1": example_5_1,
}


def builtin(name: str, **params) -> Instance:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise PlantError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**{k: v for k, v in params.items() if v is not None})


def load_instance(path) -> Instance:
    """Read ``{"A", "B", "Q", "R", "W"}`` plus optional ``"x0"``, ``"B1"``, ``"name"`` from JSON."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PlantError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise PlantError("instance JSON must be an object")
    missing = [k for k in ("A", "B", "Q", "R", "W") if k not in data]
    if missing:
        raise PlantError(f"instance is missing {missing}")
    try:
        plant = Plant(*(data[k] for k in ("A", "B", "Q", "R", "W")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, PlantError):
            raise
        raise PlantError(f"invalid instance data: {exc}") from None
    x0 = np.asarray(data["x0"], dtype=float) if "x0" in data else None
    B1 = np.asarray(data["B1"], dtype=float) if "B1" in data else None
    return Instance(data.get("name", str(path)), plant, B1=B1, x0=x0)
