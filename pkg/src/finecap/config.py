"""Run configuration: defaults < ``key = value`` file < command-line flags."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import MalformedInput

SCHEMA_VERSION = "1.0"


@dataclass
class Config:
    # None means "use the calibrated value"; the resolved numbers are echoed
    C_I: float | None = None
    C_maz: float | None = None
    N_1: int = 2
    N_2: int = 19
    c_n: float | None = None
    stencil: str | None = None
    seed: int = 0
    tol_capacity_rel: float = 0.05
    tol_boundary_rel: float = 0.15
    tol_lip_upper: float = 1.2
    tol_cantor_lip: float = 0.05
    tol_pv: float = 1e-9
    tol_coarea_rel: float = 1e-12
    overflow_cap: float = 1e8
    sources: dict = field(default_factory=dict)

    def besicovitch(self, n: int) -> int:
        try:
            return {1: self.N_1, 2: self.N_2}[n]
        except KeyError:
            raise ValueError(f"no Besicovitch constant configured for n = {n}") from None

    def resolved(self, dim: int = 2) -> dict:
        """Every constant with its value in effect for dimension ``dim``."""
        from .capacity import calibrated_isoperimetric_constant, calibrated_mazya_constant, cn_constant

        cal_I = calibrated_isoperimetric_constant(dim)
        C_I = self.C_I if self.C_I is not None else max(1.0, cal_I)
        C_maz = self.C_maz if self.C_maz is not None else calibrated_mazya_constant(dim)
        out = {k: getattr(self, k) for k in _KEYS}
        out.update({
            "dim": dim,
            "C_I": C_I,
            "C_I_calibrated": cal_I,
            "C_maz": C_maz,
            "c_n": self.c_n if self.c_n is not None else cn_constant(dim, C_I),
            "N_n": self.besicovitch(dim) if dim in (1, 2) else None,
            "sources": dict(sorted(self.sources.items())),
        })
        return out


_KEYS = [f.name for f in fields(Config) if f.name != "sources"]
_TYPES = {"C_I": float, "C_maz": float, "c_n": float, "N_1": int, "N_2": int, "stencil": str, "seed": int}


def _convert(key: str, raw: str):
    typ = _TYPES.get(key, float)
    if raw.lower() in ("none", "") and key in ("C_I", "C_maz", "c_n", "stencil"):
        return None
    try:
        val = typ(raw)
    except ValueError:
        raise MalformedInput(f"bad value for {key}: {raw!r}") from None
    if typ is float and math.isnan(val):
        raise MalformedInput(f"bad value for {key}: {raw!r}")
    return val


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedInput(f"config line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise MalformedInput(f"config line {lineno}: unknown key {key!r}")
        out[key] = _convert(key, raw)
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> Config:
    """Defaults, then the file, then non-None ``overrides`` (command-line flags)."""
    cfg = Config()
    src = {k: "default" for k in _KEYS}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise MalformedInput(f"cannot read config {path}: {exc}") from None
        for k, v in parse_config_text(text).items():
            setattr(cfg, k, v)
            src[k] = "file"
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k not in _KEYS:
            raise MalformedInput(f"unknown setting {k!r}")
        setattr(cfg, k, v)
        src[k] = "flag"
    cfg.sources = src
    if cfg.stencil not in (None, "l1-4", "cc-8"):
        raise MalformedInput(f"unknown stencil {cfg.stencil!r}")
    return cfg


def replace(cfg: Config, **kw) -> Config:
    return dataclasses.replace(cfg, **kw)
