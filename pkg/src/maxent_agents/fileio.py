"""Experiment configuration and result files.

Everything on disk is JSON written by a small canonical emitter: keys keep
their insertion order, numeric fields are printed with 17 significant
digits (which round-trips IEEE doubles exactly), and files end with a
newline.  Given the same inputs and seeds, output files are therefore
byte-identical across runs and platforms with the same floating-point
environment.

Counts files have the fixed schema {k, n, counts: [...], seed,
theta_true (optional)}.  Sweep tables are comma-separated with a header
row.  The constraint can also be given as command-line shorthand,
"f=1,0,-2;F=0".
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .engine import ConstraintSpec, GridEngine, McEngine, default_engine
from .multinomial import AgentView, CountVector
from .network import AgentNetwork, build_network
from .simplex import ThetaPoint


def _format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    s = format(float(x), ".17g")
    if not any(c in s for c in ".e"):
        s += ".0"
    return s


def dumps_canonical(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON emitter; floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True or obj is False:
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{inner}{json.dumps(str(k))}: {dumps_canonical(v, indent + 1)}"
            for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps_canonical(v) for v in obj) + "]"
        items = ",\n".join(f"{inner}{dumps_canonical(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_payload(path: str | Path, payload: Mapping[str, Any]) -> None:
    Path(path).write_text(dumps_canonical(payload) + "\n", encoding="utf-8", newline="\n")


def read_payload(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def parse_constraint_shorthand(text: str) -> ConstraintSpec | None:
    """Parse "f=1,0,-2;F=0" into a ConstraintSpec ("none" disables it)."""
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    f_part = target_part = None
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, _, value = chunk.partition("=")
        key = key.strip()
        if key == "f":
            f_part = [float(v) for v in value.split(",") if v.strip()]
        elif key == "F":
            target_part = float(value)
        else:
            raise ValueError(f"unknown constraint field {key!r} in {text!r}")
    if f_part is None or target_part is None:
        raise ValueError(f"constraint shorthand needs both f=... and F=..., got {text!r}")
    return ConstraintSpec.of(f_part, target_part)


@dataclass(frozen=True)
class EngineSettings:
    """Grid resolution or Monte-Carlo sample count/seed."""

    grid: int | None = None
    mc_samples: int | None = None
    mc_seed: int = 0

    def build(self, k: int):
        if self.grid is not None and self.mc_samples is not None:
            raise ValueError("choose either a grid resolution or mc_samples, not both")
        if self.grid is not None:
            return GridEngine(k, self.grid)
        if self.mc_samples is not None:
            return McEngine(k, self.mc_samples, self.mc_seed)
        return default_engine(k)

    def to_payload(self) -> dict:
        if self.grid is not None:
            return {"grid": self.grid}
        if self.mc_samples is not None:
            return {"mc_samples": self.mc_samples, "mc_seed": self.mc_seed}
        return {}

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any] | None) -> "EngineSettings":
        if not payload:
            return cls()
        return cls(
            grid=int(payload["grid"]) if "grid" in payload else None,
            mc_samples=int(payload["mc_samples"]) if "mc_samples" in payload else None,
            mc_seed=int(payload.get("mc_seed", 0)),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs: die, prior, constraint, network, engine."""

    k: int
    n: int
    seed: int
    prior: tuple[float, ...]
    constraint: ConstraintSpec | None = None
    theta_true: tuple[float, ...] | None = None
    network: dict | None = None
    round: int = 0
    engine: EngineSettings = EngineSettings()

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if len(self.prior) != self.k:
            raise ValueError(f"prior has {len(self.prior)} parameters, expected {self.k}")
        if self.constraint is not None and self.constraint.k != self.k:
            raise ValueError(f"constraint f has length {self.constraint.k}, expected {self.k}")
        if self.theta_true is not None:
            ThetaPoint.of(self.theta_true)
            if len(self.theta_true) != self.k:
                raise ValueError("theta_true has wrong dimension")
        if self.round < 0:
            raise ValueError("round must be >= 0")

    def build_engine(self):
        return self.engine.build(self.k)

    def build_network(self) -> AgentNetwork:
        if not self.network:
            return build_network("complete", k=self.k)
        spec = dict(self.network)
        preset = spec.pop("preset", "explicit" if "edges" in spec else None)
        if preset is None:
            raise ValueError("network section needs a preset or an edge list")
        kwargs: dict[str, Any] = {}
        if preset == "complete":
            kwargs["k"] = int(spec.get("k", self.k))
        elif preset == "triangle-lattice":
            kwargs["rows"] = int(spec["rows"])
            kwargs["cols"] = int(spec["cols"])
        elif preset == "explicit":
            kwargs["k"] = int(spec.get("k", self.k))
            kwargs["edges"] = [(int(a), int(b)) for a, b in spec.get("edges", [])]
        return build_network(preset, **kwargs)

    def to_payload(self) -> dict:
        payload: dict[str, Any] = {
            "k": self.k,
            "n": self.n,
            "seed": self.seed,
            "prior": [float(v) for v in self.prior],
        }
        payload["constraint"] = (
            {"f": [float(v) for v in self.constraint.f], "F": float(self.constraint.F)}
            if self.constraint is not None
            else None
        )
        payload["theta_true"] = (
            [float(v) for v in self.theta_true] if self.theta_true is not None else None
        )
        payload["network"] = self.network
        payload["round"] = self.round
        payload["engine"] = self.engine.to_payload()
        return payload

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "ExperimentConfig":
        constraint = None
        if payload.get("constraint") is not None:
            c = payload["constraint"]
            constraint = ConstraintSpec.of(c["f"], c["F"])
        theta_true = (
            tuple(float(v) for v in payload["theta_true"])
            if payload.get("theta_true") is not None
            else None
        )
        return cls(
            k=int(payload["k"]),
            n=int(payload["n"]),
            seed=int(payload.get("seed", 0)),
            prior=tuple(float(v) for v in payload.get("prior", [1.0] * int(payload["k"]))),
            constraint=constraint,
            theta_true=theta_true,
            network=dict(payload["network"]) if payload.get("network") else None,
            round=int(payload.get("round", 0)),
            engine=EngineSettings.from_payload(payload.get("engine")),
        )


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_payload(read_payload(path))


def save_config(path: str | Path, config: ExperimentConfig) -> None:
    write_payload(path, config.to_payload())


def write_counts(path: str | Path, counts: CountVector, seed: int,
                 theta_true: Sequence[float] | None = None) -> None:
    payload: dict[str, Any] = {
        "k": counts.k,
        "n": counts.n,
        "counts": list(counts.counts),
        "seed": seed,
    }
    if theta_true is not None:
        payload["theta_true"] = [float(v) for v in theta_true]
    write_payload(path, payload)


def read_counts(path: str | Path) -> CountVector:
    payload = read_payload(path)
    counts = CountVector.of(payload["counts"])
    if counts.k != int(payload["k"]):
        raise ValueError(f"counts file k={payload['k']} does not match {counts.k} entries")
    if counts.n != int(payload["n"]):
        raise ValueError(f"counts file n={payload['n']} but counts sum to {counts.n}")
    return counts


def view_to_payload(view: AgentView) -> dict:
    return {"k": view.k, "n": view.n, "visible": [[s, c] for s, c in view.visible]}


def view_from_payload(payload: Mapping[str, Any]) -> AgentView:
    return AgentView.from_mapping(
        int(payload["k"]), int(payload["n"]),
        {int(s): int(c) for s, c in payload["visible"]},
    )


def write_sweep_csv(path: str | Path, rows: Sequence[Mapping[str, float]]) -> None:
    lines = ["beta,log_zeta,expected_f,s_me"]
    for row in rows:
        lines.append(
            ",".join(
                _format_float(row[col]) for col in ("beta", "log_zeta", "expected_f", "s_me")
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
