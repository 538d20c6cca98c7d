"""Scenario configuration: JSON documents describing one verification run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ConfigError
from ..regularity import CharFunction
from ..symbols import FourierSymbol, exp_lacunary, lacunary_series, tridiagonal
from ..traces import AnalyticFunctionSpec, ContourSpec

SYMBOL_KINDS = ("laurent", "tridiagonal", "exp_lacunary", "lacunary", "factors")
DEFAULT_SCHEDULE = (8, 16, 32, 64, 128, 256, 512)
DEFAULT_CHECKS = ("hankel", "trunc", "traceF")


def _matrix(x, N: int) -> np.ndarray:
    arr = np.asarray(x if x is not None else 0.0, dtype=float)
    if arr.ndim == 0:
        arr = arr * np.eye(1) if N == 1 else np.full((N, N), float(arr))
    if arr.shape != (N, N):
        raise ConfigError(f"coefficient block has shape {arr.shape}, expected {(N, N)}")
    return arr


def coefficients_from_records(records: list[dict], block_size: int | None = None) -> FourierSymbol:
    """Symbol from [{k, re, im}] records; re/im are scalars or N x N nested lists."""
    if not isinstance(records, list):
        raise ConfigError("coefficient list must be a JSON array")
    if block_size is None:
        block_size = 1
        for r in records:
            shape = np.shape(r.get("re", 0))
            if len(shape) == 2:
                block_size = shape[0]
                break
    co = {}
    for r in records:
        try:
            k = int(r["k"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad coefficient record {r!r}") from exc
        val = _matrix(r.get("re"), block_size) + 1j * _matrix(r.get("im"), block_size)
        co[k] = co.get(k, 0) + val
    if not co:
        co = {0: np.zeros((block_size, block_size))}
    return FourierSymbol.from_dict(co, block_size=block_size)


def records_from_symbol(a: FourierSymbol, tol: float = 0.0) -> list[dict]:
    out = []
    for k, v in a.as_dict(tol).items():
        out.append({"k": k, "re": v.real.tolist() if not a.is_scalar else float(v[0, 0].real),
                    "im": v.imag.tolist() if not a.is_scalar else float(v[0, 0].imag)})
    return out


@dataclass
class SymbolSpec:
    kind: str
    params: dict

    def build(self) -> tuple[FourierSymbol, Any]:
        """(symbol, fixture factors or None)."""
        p = self.params
        try:
            if self.kind == "laurent":
                return coefficients_from_records(p["coeffs"], p.get("block_size")), None
            if self.kind == "tridiagonal":
                return tridiagonal(float(p["alpha"]), float(p["beta"])), None
            if self.kind == "exp_lacunary":
                return exp_lacunary(float(p["gamma"]), int(p["levels"]), float(p.get("amplitude", 0.5)),
                                    p.get("band"), float(p.get("tol", 1e-15))), None
            if self.kind == "lacunary":
                return lacunary_series(float(p["gamma"]), int(p["levels"]),
                                       float(p.get("amplitude", 1.0))), None
            if self.kind == "factors":
                facs = {name: coefficients_from_records(p[name], p.get("block_size"))
                        for name in ("u_minus", "u_plus", "v_plus", "v_minus")}
                return None, facs
        except KeyError as exc:
            raise ConfigError(f"symbol of kind {self.kind!r} is missing {exc}") from exc
        raise ConfigError(f"unknown symbol kind {self.kind!r}")

    def to_record(self) -> dict:
        return {"kind": self.kind, **self.params}


@dataclass
class ScenarioConfig:
    name: str
    symbol: SymbolSpec
    omega: CharFunction
    psi: CharFunction
    m: int = 1
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    M: int = 256
    method: str = "auto"
    contour: ContourSpec | None = None
    f: AnalyticFunctionSpec | None = None
    trend_threshold: float = 0.3
    window: int = 3
    checks: tuple[str, ...] = DEFAULT_CHECKS
    hankel_range: tuple[int, int] = (8, 128)
    outputs: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        s = list(self.schedule)
        if any(n < 0 for n in s) or any(b <= a for a, b in zip(s, s[1:])):
            raise ConfigError("schedule must be strictly increasing and nonnegative")
        if self.M < 128:
            raise ConfigError("truncation M must be >= 128")
        if self.method not in ("auto", "series", "truncation"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.window < 1:
            raise ConfigError("window must be positive")
        bad = set(self.checks) - set(DEFAULT_CHECKS)
        if bad:
            raise ConfigError(f"unknown checks {sorted(bad)}")
        if self.symbol.kind not in SYMBOL_KINDS:
            raise ConfigError(f"unknown symbol kind {self.symbol.kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        try:
            sym = dict(d["symbol"])
            kind = sym.pop("kind")
            omega = CharFunction.from_record(d.get("omega", {"gamma": 0.5}))
            psi = CharFunction.from_record(d.get("psi", d.get("omega", {"gamma": 0.5})))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"missing config field {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        sched = d.get("schedule", list(DEFAULT_SCHEDULE))
        if isinstance(sched, dict):
            try:
                start, stop, factor = int(sched["start"]), int(sched["stop"]), int(sched.get("factor", 2))
            except (KeyError, ValueError) as exc:
                raise ConfigError("geometric schedule needs start/stop/factor") from exc
            if start < 1 or factor < 2:
                raise ConfigError("geometric schedule needs start >= 1 and factor >= 2")
            sched, n = [], start
            while n <= stop:
                sched.append(n)
                n *= factor
        thr = d.get("thresholds", {})
        try:
            return cls(
                name=str(d.get("name", "scenario")),
                symbol=SymbolSpec(kind, sym),
                omega=omega, psi=psi,
                m=int(d.get("m", 1)),
                schedule=tuple(int(n) for n in sched),
                M=int(d.get("M", 256)),
                method=str(d.get("method", "auto")),
                contour=ContourSpec.from_record(d["contour"]) if d.get("contour") else None,
                f=AnalyticFunctionSpec.from_record(d["f"]) if d.get("f") else None,
                trend_threshold=float(thr.get("trend", 0.3)),
                window=int(thr.get("window", 3)),
                checks=tuple(d.get("checks", DEFAULT_CHECKS)),
                hankel_range=tuple(d.get("hankel_range", (8, 128))),
                outputs=dict(d.get("outputs", {})),
                workers=int(d.get("workers", 1)),
            )
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "symbol": self.symbol.to_record(),
            "omega": self.omega.to_record(),
            "psi": self.psi.to_record(),
            "m": self.m,
            "schedule": list(self.schedule),
            "M": self.M,
            "method": self.method,
            "contour": self.contour.to_record() if self.contour else None,
            "f": self.f.to_record() if self.f else None,
            "thresholds": {"trend": self.trend_threshold, "window": self.window},
            "checks": list(self.checks),
            "hankel_range": list(self.hankel_range),
            "outputs": self.outputs,
        }
