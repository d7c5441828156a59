"""Snapshots, run configuration and atomic file output.

Snapshot layout (little-endian)::

    magic  4s   b"SPB1"
    N1..N3 3*u32
    L1..L3 3*f64
    nu     f64
    t      f64
    data   N1*N2*N3*3 complex128, index order (k1, k2, k3, component), k3 fastest
"""
from __future__ import annotations

import json
import math
import os
import struct
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forcing import VARIANTS, ForcingModel
from .lattice import Lattice, SpectralField

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "MAGIC",
    "OUTPUT_ENV",
    "ConfigError",
    "CorruptInputError",
    "write_snapshot",
    "read_snapshot",
    "snapshot_bytes",
    "atomic_write_bytes",
    "atomic_write_text",
    "RunConfig",
    "load_config",
    "derive_seed",
]

MAGIC = b"SPB1"
_HEADER = struct.Struct("<4s3I3d2d")
OUTPUT_ENV = "KOLMOBOUNDS_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid run configuration; raised before any computation."""


class CorruptInputError(IOError):
    """A snapshot or trajectory on disk is missing, truncated or malformed."""


def snapshot_bytes(f: SpectralField, nu: float) -> bytes:
    lat = f.lattice
    head = _HEADER.pack(MAGIC, *lat.shape, *lat.lengths, float(nu), float(f.t))
    body = np.ascontiguousarray(np.moveaxis(f.coeffs, 0, -1), dtype="<c16").tobytes()
    return head + body


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_snapshot(path, f: SpectralField, nu: float) -> None:
    atomic_write_bytes(path, snapshot_bytes(f, nu))


def read_snapshot(path) -> tuple[SpectralField, float]:
    """Return (field, nu); raises CorruptInputError on any structural problem."""
    path = Path(path)
    if not path.is_file():
        raise CorruptInputError(f"snapshot {path} does not exist")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise CorruptInputError(f"snapshot {path} is shorter than its header")
    magic, n1, n2, n3, l1, l2, l3, nu, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptInputError(f"snapshot {path} has bad magic {magic!r}")
    count = n1 * n2 * n3 * 3
    if len(raw) != _HEADER.size + 16 * count:
        raise CorruptInputError(
            f"snapshot {path} holds {len(raw) - _HEADER.size} data bytes, expected {16 * count}"
        )
    try:
        lat = Lattice((n1, n2, n3), (l1, l2, l3))
    except ValueError as exc:
        raise CorruptInputError(f"snapshot {path}: {exc}") from exc
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(n1, n2, n3, 3)
    return SpectralField(lat, np.moveaxis(data, -1, 0), t), nu


# -- configuration --------------------------------------------------------------


def derive_seed(seed: int, stream: int) -> int:
    """Independent child seed ``stream`` of the run seed."""
    return int(np.random.SeedSequence([int(seed), int(stream)]).generate_state(1)[0])


@dataclass
class RunConfig:
    """Validated run description; see ``load_config`` for the file layout."""

    shape: tuple[int, int, int] = (32, 32, 32)
    lengths: tuple[float, float, float] = (2 * math.pi,) * 3
    nu: float = 0.1
    dt: float = 0.01
    t_end: float = 1.0
    checkpoint_every: int = 10
    seed: int = 0
    initial: dict = field(default_factory=lambda: {"kind": "beltrami"})
    forcing: dict = field(default_factory=lambda: {"variant": "zero"})
    spectrum_a: float | None = None
    bounds: dict = field(default_factory=dict)
    behavior: dict = field(default_factory=dict)
    filters: dict = field(default_factory=dict)
    output_dir: str = "runs/out"
    cfl_safety: float | None = 0.5
    base_dir: str = "."

    def __post_init__(self):
        self.shape = tuple(int(n) for n in self.shape)
        self.lengths = tuple(float(x) for x in self.lengths)
        self.validate()

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.shape, self.lengths)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def validate(self) -> None:
        def positive(name, v):
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")

        positive("nu", self.nu)
        positive("dt", self.dt)
        positive("t_end", self.t_end)
        if abs(self.t_end / self.dt - round(self.t_end / self.dt)) > 1e-9:
            raise ConfigError("t_end must be an integer multiple of dt")
        if int(self.checkpoint_every) < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        try:
            self.lattice
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        kind = self.initial.get("kind", "beltrami")
        if kind not in ("beltrami", "random", "snapshot"):
            raise ConfigError(f"unknown initial condition kind {kind!r}")
        if kind == "snapshot":
            p = self.resolve(self.initial.get("path", ""))
            if not p.is_file():
                raise ConfigError(f"initial snapshot {p} does not exist")
        if kind == "random":
            for key in ("energy",):
                if key in self.initial:
                    v = self.initial[key]
                    if not (isinstance(v, (int, float)) and v >= 0):
                        raise ConfigError(f"initial.{key} must be nonnegative")
        variant = self.forcing.get("variant", "zero")
        if variant not in VARIANTS:
            raise ConfigError(f"unknown forcing variant {variant!r}")
        try:
            self.forcing_model(1.0)
        except ValueError as exc:
            raise ConfigError(f"forcing: {exc}") from exc
        if self.spectrum_a is not None:
            positive("spectrum.a", self.spectrum_a)
        C0 = self.bounds.get("C0", 1.0)
        positive("bounds.C0", C0)
        eps = self.bounds.get("eps", "measured")
        if not (eps in ("measured", "max") or (isinstance(eps, (int, float)) and eps > 0)):
            raise ConfigError("bounds.eps must be a positive number, 'measured' or 'max'")
        if self.bounds.get("slack", 2.0) < 1:
            raise ConfigError("bounds.slack must be >= 1")

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def forcing_model(self, R1_bound: float | None) -> ForcingModel:
        """ForcingModel for this run; ``R1_bound`` sets the clip when bound enforcement is on."""
        fc = dict(self.forcing)
        variant = fc.get("variant", "zero")
        clip = None
        if fc.get("enforce_bound", False):
            r1 = fc.get("bound_R1", R1_bound)
            if r1 is None:
                raise ValueError("bound enforcement needs an R1 value")
            clip = self.nu * float(r1)
        return ForcingModel(
            variant=variant,
            band=tuple(fc.get("band", (1.0, 2.5))),
            amplitude=float(fc.get("amplitude", 0.0)),
            seed=int(fc["seed"]) if "seed" in fc else derive_seed(self.seed, 1),
            correlation_time=float(fc.get("correlation_time", 1.0)),
            omega=float(fc.get("omega", 1.0)),
            sample_dt=float(fc.get("sample_dt", self.dt)),
            clip=clip,
        )

    def initial_seed(self) -> int:
        return int(self.initial["seed"]) if "seed" in self.initial else derive_seed(self.seed, 0)

    def output_path(self) -> Path:
        env = os.environ.get(OUTPUT_ENV)
        return Path(env) if env else self.resolve(self.output_dir)

    def to_dict(self) -> dict:
        """Config in the file layout, so ``config_from_dict(cfg.to_dict())`` round-trips."""
        d = {
            "lattice": {"shape": list(self.shape), "lengths": list(self.lengths)},
            "nu": self.nu,
            "dt": self.dt,
            "t_end": self.t_end,
            "checkpoint_every": self.checkpoint_every,
            "seed": self.seed,
            "initial": dict(self.initial),
            "forcing": dict(self.forcing),
            "bounds": dict(self.bounds),
            "behavior": dict(self.behavior),
            "filters": dict(self.filters),
            "output_dir": self.output_dir,
            "cfl_safety": self.cfl_safety,
        }
        if self.spectrum_a is not None:
            d["spectrum"] = {"a": self.spectrum_a}
        return d


_TOP_KEYS = {"lattice", "nu", "dt", "t_end", "checkpoint_every", "seed", "initial", "forcing",
             "spectrum", "bounds", "behavior", "filters", "output_dir", "cfl_safety"}


def config_from_dict(d: dict, base_dir=".") -> RunConfig:
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    lat = d.get("lattice", {})
    if "n" in lat:
        shape = (int(lat["n"]),) * 3
    else:
        shape = tuple(lat.get("shape", (32, 32, 32)))
    if "length" in lat:
        lengths = (float(lat["length"]),) * 3
    else:
        lengths = tuple(lat.get("lengths", (2 * math.pi,) * 3))
    try:
        return RunConfig(
            shape=shape,
            lengths=lengths,
            nu=d.get("nu", 0.1),
            dt=d.get("dt", 0.01),
            t_end=d.get("t_end", 1.0),
            checkpoint_every=int(d.get("checkpoint_every", 10)),
            seed=int(d.get("seed", 0)),
            initial=dict(d.get("initial", {"kind": "beltrami"})),
            forcing=dict(d.get("forcing", {"variant": "zero"})),
            spectrum_a=d.get("spectrum", {}).get("a"),
            bounds=dict(d.get("bounds", {})),
            behavior=dict(d.get("behavior", {})),
            filters=dict(d.get("filters", {})),
            output_dir=str(d.get("output_dir", "runs/out")),
            cfl_safety=d.get("cfl_safety", 0.5) or None,
            base_dir=str(base_dir),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    """Read a TOML (``.toml``) or JSON run configuration."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    try:
        if path.suffix == ".toml":
            d = tomllib.loads(text)
        else:
            d = json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(d, base_dir=path.parent)
