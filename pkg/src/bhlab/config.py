"""Run configuration: JSON loading, defaults, flag overrides and validation."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ValidationError
from .fock import DEFAULT_DIM_CAP, truncated_dim
from .lattice import LatticeSpec
from .model import HoppingSpec

DEFAULTS: dict = {
    "model": {
        "d": 1,
        "N": [2, 3, 4],
        "hopping": {"nearest_neighbor": -0.5, "onsite": 0.0},
        "U": [0.5, 1.0, 2.0],
        "mu": [-1.0, 0.0, 1.0],
        "lambda": [0.05, 0.2, 1.0],
        "beta": [0.5, 1.0, 2.0],
    },
    "cutoff": {"policy": "fixed", "M": [4, 6], "tol": 1e-6, "start": 2, "max_M": 40},
    "checks": {
        "relative_bounds": {"samples": 100, "K": [1, 2, 5]},
        "sector_norms": {"max_m": 6},
        "density_band": {"gate": 1e-8},
    },
    "scans": {
        "condensation": {
            "d": [1, 2],
            "N": {"1": [2, 3, 4], "2": [2, 3]},
            "lambda": [0.5, 0.2, 0.1, 0.05],
            "U": 1.0, "mu": 0.0, "beta": 1.0, "t": -0.5,
            "tol": 1e-6, "max_M": 40, "cap": 3003,
        },
        "density": {
            "U": 1.0, "beta": 1.0, "mu0": 0.0, "d": 1, "N": 2, "t": -0.5, "M": 8,
            "fractions": [0.5, 0.25], "mu_grid": [-1.0, 0.0, 1.0], "lambda": 0.5,
        },
        "convergence": {
            "d": 1, "N": 2, "t": -0.5, "U": 1.0, "mu": 0.0, "lambda": 0.5, "beta": 1.0,
            "M": [2, 3, 4, 5, 6, 7, 8, 9, 10],
        },
        "ksum": {"d": 1, "N": [8, 16, 32, 64], "M2": 1.0, "alpha": 1.0},
    },
    "seed": 20240601,
    "cap": DEFAULT_DIM_CAP,
    "jobs": 1,
    "out": "bhl_out",
}


# blocks replaced as a whole rather than merged key by key
ATOMIC = {"hopping", "N"}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key not in ATOMIC:
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def parse_hopping(lattice: LatticeSpec, raw: dict) -> HoppingSpec:
    """``{"nearest_neighbor": t, "onsite": x}`` or
    ``{"terms": {"1": [re, im], "0,1": [re, im], ...}}``."""
    if not isinstance(raw, dict):
        raise ValidationError("hopping must be an object")
    if "nearest_neighbor" in raw and "terms" in raw:
        raise ValidationError("hopping takes either 'nearest_neighbor' or 'terms', not both")
    if "nearest_neighbor" in raw:
        return HoppingSpec.nearest_neighbor(lattice, float(raw["nearest_neighbor"]),
                                            float(raw.get("onsite", 0.0)))
    if "terms" in raw:
        amps = {}
        for key, val in raw["terms"].items():
            try:
                z = tuple(int(p) for p in str(key).split(","))
            except ValueError as exc:
                raise ValidationError(f"bad displacement key {key!r}") from exc
            if len(z) != lattice.d:
                raise ValidationError(f"displacement {key!r} has wrong dimension")
            re, im = (val, 0.0) if isinstance(val, (int, float)) else val
            amps[z] = complex(float(re), float(im))
        return HoppingSpec(lattice, amps)
    raise ValidationError("hopping needs 'nearest_neighbor' or 'terms'")


@dataclass
class RunConfig:
    """Resolved configuration; ``raw`` keeps the merged JSON tree."""

    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @property
    def d(self) -> int:
        return int(self.raw["model"]["d"])

    @property
    def N_list(self) -> list[int]:
        return [int(n) for n in _as_list(self.raw["model"]["N"])]

    @property
    def M_list(self) -> list[int]:
        return [int(m) for m in _as_list(self.raw["cutoff"]["M"])]

    def grid(self, name: str) -> list[float]:
        return [float(v) for v in _as_list(self.raw["model"][name])]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def cap(self) -> int:
        return int(self.raw["cap"])

    @property
    def jobs(self) -> int:
        return int(self.raw["jobs"])

    @property
    def out(self) -> Path:
        return Path(self.raw["out"])

    def check(self, name: str) -> dict:
        return self.raw["checks"][name]

    def scan(self, kind: str) -> dict:
        return self.raw["scans"][kind]

    def lattice(self, N: int) -> LatticeSpec:
        return LatticeSpec(self.d, N)

    def hopping(self, N: int) -> HoppingSpec:
        return parse_hopping(self.lattice(N), self.raw["model"]["hopping"])

    def hash(self) -> str:
        """sha256 of the canonical JSON, excluding output location and job count."""
        tree = {k: v for k, v in self.raw.items() if k not in ("out", "jobs")}
        blob = json.dumps(tree, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> "RunConfig":
        m = self.raw["model"]
        if self.d not in (1, 2, 3):
            raise ValidationError(f"d must be 1, 2 or 3, got {self.d}")
        for N in self.N_list:
            self.lattice(N)
            self.hopping(N)
        for name in ("U", "beta"):
            vals = self.grid(name)
            if not vals or any(not v > 0 for v in vals):
                raise ValidationError(f"{name} must be > 0, got {m[name]}")
        self.grid("mu"), self.grid("lambda")
        if not isinstance(self.raw["seed"], int) or self.raw["seed"] < 0:
            raise ValidationError("seed must be an unsigned integer")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")
        cut = self.raw["cutoff"]
        if cut.get("policy") not in ("fixed", "adaptive"):
            raise ValidationError("cutoff policy must be 'fixed' or 'adaptive'")
        if any(M < 2 for M in self.M_list):
            raise ValidationError("cutoffs must be >= 2")
        if cut["policy"] == "fixed":
            # projection identities work on the buffered cutoff M + 2
            for N in self.N_list:
                need = truncated_dim(N ** self.d, max(self.M_list) + 2)
                if need > self.cap:
                    raise ValidationError(
                        f"cap {self.cap} below implied dimension {need} (N={N})")
        rb = self.check("relative_bounds")
        if int(rb["samples"]) < 1 or any(int(K) < 1 for K in rb["K"]):
            raise ValidationError("relative bounds need samples >= 1 and K >= 1")
        return self


def default_config_path():
    return resources.files("bhlab") / "data" / "default_config.json"


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file, then ``overrides`` (flag values; ``None`` ignored)."""
    tree = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config root must be an object")
        tree = _merge(tree, data)
    for key, val in (overrides or {}).items():
        if val is not None:
            tree[key] = val
    try:
        return RunConfig(tree).validate()
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed config: {exc!r}") from exc
