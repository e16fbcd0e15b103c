"""Estimation settings and the flat ``key=value`` configuration format."""
import math
from dataclasses import dataclass, fields, replace

import numpy as np


@dataclass(frozen=True)
class EstimationConfig:
    grid_points: int = 199
    alpha_lo: float = 0.005
    alpha_hi: float = 0.995
    beta_var_tol: float = 1e-10
    iter_cap_factor: float = 5.0
    bandwidth: float | None = None  # None selects cross-validation
    bootstrap_reps: int = 500
    bootstrap_level: float = 0.90
    quadrature_points: int = 512
    seed: int = 0
    isotonize_lambda: bool = False
    tau_mode: str = "normalize"
    bandwidth_rule: str = "common"  # or "separate"

    def __post_init__(self):
        if not 0 < self.alpha_lo < self.alpha_hi < 1:
            raise ValueError("need 0 < alpha_lo < alpha_hi < 1")
        if not self.beta_var_tol > 0:
            raise ValueError("beta_var_tol must be positive")
        if self.grid_points < 3:
            raise ValueError("grid_points must be at least 3")
        if self.quadrature_points < 1:
            raise ValueError("quadrature_points must be positive")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 0 < self.bootstrap_level < 1:
            raise ValueError("bootstrap_level must lie in (0, 1)")
        if self.tau_mode not in ("normalize", "crossing", "given"):
            raise ValueError(f"unknown tau_mode {self.tau_mode!r}")
        if self.bandwidth_rule not in ("common", "separate"):
            raise ValueError(f"unknown bandwidth_rule {self.bandwidth_rule!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def alpha_grid(self):
        return np.linspace(self.alpha_lo, self.alpha_hi, self.grid_points)

    def iteration_cap(self, n):
        """Largest admissible number of iterations, ``ceil(factor * ln n)``."""
        return max(1, math.ceil(self.iter_cap_factor * math.log(n)))

    def updated(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


def _parse_value(name, text, kind):
    text = text.strip()
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "optfloat":
        return None if text.lower() in ("", "none", "cv", "cross_validation") else float(text)
    return text


_KINDS = {
    "grid_points": "int", "alpha_lo": "float", "alpha_hi": "float", "beta_var_tol": "float",
    "iter_cap_factor": "float", "bandwidth": "optfloat", "bootstrap_reps": "int",
    "bootstrap_level": "float", "quadrature_points": "int", "seed": "int",
    "isotonize_lambda": "bool", "tau_mode": "str", "bandwidth_rule": "str",
}


def read_config_file(path):
    """Parse a flat ``key=value`` file into a dict of raw strings.

    Blank lines and lines starting with ``#`` are skipped.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def config_from_mapping(raw, base=None):
    """Build an :class:`EstimationConfig` from raw strings, ignoring other keys."""
    base = base or EstimationConfig()
    values = {}
    for f in fields(EstimationConfig):
        if f.name in raw:
            values[f.name] = _parse_value(f.name, raw[f.name], _KINDS[f.name])
    return replace(base, **values)
