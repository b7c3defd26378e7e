"""Harness configuration: dataclass defaults plus JSON overrides.

The JSON schema (all keys optional):

    {
      "kmax": 5,
      "tolerance_factor": 3.0,
      "nodes_1d": 2000,
      "seed": 0,
      "jobs": 1,
      "families": {
        "rectangle":        {"eps": [0.2, 0.1, 0.05, 0.025, 0.02]},
        "right-triangle":   {"eps": [...]},
        "isoceles-triangle":{"eps": [...]},
        "stadium":          {"eps": [...]},
        "ellipse":          {"eps": [...]},
        "random-hull":      {"eps": [0.1, 0.05], "seeds": [1, 2, 3]},
        "square":           {}
      },
      "mu1_eps_grid": [0.02, 0.01, 0.005],
      "mu1_families": ["right-triangle", "stadium"],
      "dn_rho1": 0.25,
      "dn_count": 10
    }

Omitting "families" selects the default corpus.  Unknown keys are
rejected so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ThinspecError
from .families import DomainFamily, DEFAULT_FAMILIES

_KNOWN_KEYS = {
    "kmax",
    "tolerance_factor",
    "nodes_1d",
    "seed",
    "jobs",
    "families",
    "mu1_eps_grid",
    "mu1_families",
    "dn_rho1",
    "dn_count",
}


@dataclass
class HarnessConfig:
    kmax: int = 5
    tolerance_factor: float = 3.0
    nodes_1d: int = 2000
    seed: int = 0
    jobs: int = 1
    families: tuple[DomainFamily, ...] = DEFAULT_FAMILIES
    mu1_eps_grid: tuple[float, ...] = (0.02, 0.01, 0.005)
    mu1_families: tuple[str, ...] = ("right-triangle", "stadium")
    dn_rho1: float = 0.25
    dn_count: int = 10

    def describe(self) -> dict:
        return {
            "kmax": self.kmax,
            "tolerance_factor": self.tolerance_factor,
            "nodes_1d": self.nodes_1d,
            "seed": self.seed,
            "jobs": self.jobs,
            "families": [
                {
                    "kind": f.kind,
                    "eps": list(f.eps_values),
                    "seeds": list(f.seeds),
                }
                for f in self.families
            ],
            "mu1_eps_grid": list(self.mu1_eps_grid),
            "mu1_families": list(self.mu1_families),
            "dn_rho1": self.dn_rho1,
            "dn_count": self.dn_count,
        }


def _parse_families(spec: dict) -> tuple[DomainFamily, ...]:
    out = []
    for kind, body in spec.items():
        if not isinstance(body, dict):
            raise ThinspecError(f"family {kind!r} must map to an object")
        eps = tuple(float(e) for e in body.get("eps", ()))
        seeds = tuple(int(s) for s in body.get("seeds", ()))
        extra = set(body) - {"eps", "seeds"}
        if extra:
            raise ThinspecError(f"family {kind!r} has unknown keys {sorted(extra)}")
        out.append(DomainFamily(kind, eps, seeds))
    return tuple(out)


def load_config(path=None, seed: int | None = None, jobs: int | None = None) -> HarnessConfig:
    cfg = HarnessConfig()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ThinspecError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ThinspecError("config root must be a JSON object")
        unknown = set(data) - _KNOWN_KEYS
        if unknown:
            raise ThinspecError(f"unknown config keys: {sorted(unknown)}")
        if "families" in data:
            cfg.families = _parse_families(data["families"])
        for key in ("kmax", "nodes_1d", "seed", "jobs", "dn_count"):
            if key in data:
                setattr(cfg, key, int(data[key]))
        for key in ("tolerance_factor", "dn_rho1"):
            if key in data:
                setattr(cfg, key, float(data[key]))
        if "mu1_eps_grid" in data:
            cfg.mu1_eps_grid = tuple(float(e) for e in data["mu1_eps_grid"])
        if "mu1_families" in data:
            cfg.mu1_families = tuple(str(f) for f in data["mu1_families"])
    if seed is not None:
        cfg.seed = seed
    if jobs is not None:
        cfg.jobs = jobs
    if cfg.kmax < 1 or cfg.kmax > 20:
        raise ThinspecError("kmax must lie in [1, 20]")
    if cfg.nodes_1d < 200:
        raise ThinspecError("nodes_1d must be >= 200")
    if cfg.jobs < 1:
        raise ThinspecError("jobs must be >= 1")
    return cfg
