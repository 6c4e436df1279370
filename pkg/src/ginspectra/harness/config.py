"""Experiment configuration: JSON schema, validation and content hash."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..csr_stats import DEFAULT_BINS_R, DEFAULT_BINS_THETA, DEFAULT_GRID
from ..ensembles import CROSSOVER_MODELS, CrossoverSpec
from ..errors import ValidationError
from ..spin_ops import MODEL_PARAMS, PARAM_NAMES, Disorder, ParamSource, SpinChainSpec

REFERENCES = ("none", "poisson", "ginue", "both")
TOP_LEVEL_KEYS = {"model", "L", "N", "params", "alpha", "ensemble_size", "master_seed",
                  "bins", "outputs", "reference", "workers", "disorder"}
BIN_KEYS = {"r", "theta", "grid"}


@dataclass(frozen=True)
class Bins:
    r: int = DEFAULT_BINS_R
    theta: int = DEFAULT_BINS_THETA
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        for name in ("r", "theta", "grid"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ValidationError(f"bins.{name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    target: SpinChainSpec | CrossoverSpec
    ensemble_size: int
    master_seed: int = 0
    bins: Bins = field(default_factory=Bins)
    outputs: Path | None = None
    reference: str = "none"
    workers: int | str = 1

    def __post_init__(self):
        if not isinstance(self.target, (SpinChainSpec, CrossoverSpec)):
            raise ValidationError("target must be a SpinChainSpec or a CrossoverSpec")
        n = self.ensemble_size
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ValidationError(f"ensemble_size must be a positive integer, got {n!r}")
        s = self.master_seed
        if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2**64:
            raise ValidationError(f"master_seed must be an unsigned 64-bit integer, got {s!r}")
        if self.reference not in REFERENCES:
            raise ValidationError(f"reference must be one of {REFERENCES}, got {self.reference!r}")
        w = self.workers
        if w != "auto" and (isinstance(w, bool) or not isinstance(w, int) or w < 1):
            raise ValidationError(f"workers must be a positive integer or 'auto', got {w!r}")
        if self.outputs is not None:
            object.__setattr__(self, "outputs", Path(self.outputs))

    @property
    def model(self) -> str:
        return self.target.model

    def resolved_workers(self) -> int:
        return max(1, os.cpu_count() or 1) if self.workers == "auto" else int(self.workers)

    def to_dict(self) -> dict:
        d: dict = {"model": self.model}
        t = self.target
        if isinstance(t, SpinChainSpec):
            d["L"] = t.L
            d["params"] = {name: t.source(name).to_json()
                           for name in PARAM_NAMES if t.source(name) is not None}
            d["disorder"] = t.disorder.value
        else:
            d["N"] = t.N
            d["alpha"] = t.alpha
        d.update(ensemble_size=self.ensemble_size, master_seed=self.master_seed,
                 bins={"r": self.bins.r, "theta": self.bins.theta, "grid": self.bins.grid},
                 reference=self.reference, workers=self.workers,
                 outputs=str(self.outputs) if self.outputs is not None else None)
        return d

    def content_dict(self) -> dict:
        """Everything that determines the numerical results (no paths, no worker count)."""
        d = self.to_dict()
        del d["outputs"], d["workers"]
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.content_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ValidationError("config must be a JSON object")
        unknown = set(raw) - TOP_LEVEL_KEYS
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        model = raw.get("model")
        if model in MODEL_PARAMS:
            for bad in ("N", "alpha"):
                if bad in raw:
                    raise ValidationError(f"key {bad!r} does not apply to spin-chain model {model}")
            if "L" not in raw:
                raise ValidationError(f"spin-chain model {model} needs 'L'")
            params = raw.get("params", {})
            if not isinstance(params, dict):
                raise ValidationError("'params' must be an object")
            extra = set(params) - set(PARAM_NAMES)
            if extra:
                raise ValidationError(f"unknown params: {sorted(extra)}")
            sources = {k: ParamSource.parse(v) for k, v in params.items()}
            try:
                disorder = Disorder(raw.get("disorder", "site"))
            except ValueError:
                raise ValidationError(f"disorder must be 'site' or 'uniform', got {raw.get('disorder')!r}") from None
            target = SpinChainSpec(model, raw["L"], gamma=sources.get("gamma"), lam=sources.get("lambda"),
                                   lambda1=sources.get("lambda1"), disorder=disorder)
        elif model in CROSSOVER_MODELS:
            for bad in ("L", "params", "disorder"):
                if bad in raw:
                    raise ValidationError(f"key {bad!r} does not apply to matrix model {model}")
            for req in ("N", "alpha"):
                if req not in raw:
                    raise ValidationError(f"matrix model {model} needs {req!r}")
            target = CrossoverSpec(model, raw["alpha"], raw["N"])
        else:
            raise ValidationError(f"unknown model {model!r}")

        bins_raw = raw.get("bins", {})
        if not isinstance(bins_raw, dict):
            raise ValidationError("'bins' must be an object")
        extra = set(bins_raw) - BIN_KEYS
        if extra:
            raise ValidationError(f"unknown bins keys: {sorted(extra)}")
        if "ensemble_size" not in raw:
            raise ValidationError("config needs 'ensemble_size'")
        return cls(target=target, ensemble_size=raw["ensemble_size"],
                   master_seed=raw.get("master_seed", 0), bins=Bins(**bins_raw),
                   outputs=raw.get("outputs"), reference=raw.get("reference", "none"),
                   workers=raw.get("workers", 1))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc
    cfg = ExperimentConfig.from_dict(raw)
    if cfg.outputs is not None and not cfg.outputs.is_absolute():
        cfg = ExperimentConfig(cfg.target, cfg.ensemble_size, cfg.master_seed, cfg.bins,
                               path.parent / cfg.outputs, cfg.reference, cfg.workers)
    return cfg
