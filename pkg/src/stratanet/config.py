"""Pipeline configuration: JSON round trip and a content hash."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import FilterSpec, parse_timestamp, format_timestamp
from .model import EventKind, InputError, Level

__all__ = ["BootstrapConfig", "ErgmConfig", "FilterConfig", "PathsConfig", "PipelineConfig", "SbmConfig"]

STAGES = ("ingest", "activity", "burstiness", "mixing", "density", "overlap", "backbone",
          "collapse", "bootstrap", "sbm", "rmi", "ergm")


@dataclass
class PathsConfig:
    events: list[str] = field(default_factory=list)
    roster: str = ""
    keywords: str | None = None
    out_dir: str = "out"


@dataclass
class FilterConfig:
    window: list[str] | None = None
    kinds: list[str] = field(default_factory=lambda: ["retweet"])
    roster_only: bool = True


@dataclass
class BootstrapConfig:
    n: int = 300
    fix_size_to: str | None = None


@dataclass
class SbmConfig:
    n_sweeps: int = 10_000
    greedy_fraction: float = 0.8
    rmi_samples: int = 10


@dataclass
class ErgmConfig:
    width_threshold: float = 10.0


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    levels: list[str] = field(default_factory=lambda: [lvl.value for lvl in Level])
    alpha: float = 0.1
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    sbm: SbmConfig = field(default_factory=SbmConfig)
    ergm: ErgmConfig = field(default_factory=ErgmConfig)
    seed: int = 0
    timezone: str = "Europe/Helsinki"
    modules: dict[str, bool] = field(default_factory=lambda: {s: True for s in STAGES})

    def __post_init__(self):
        self.validate()

    # -- validation -----------------------------------------------------
    def validate(self) -> None:
        for lvl in self.levels:
            Level.parse(lvl)
        self.levels = [Level.parse(lvl).value for lvl in self.levels]
        if self.bootstrap.fix_size_to is not None:
            self.bootstrap.fix_size_to = Level.parse(self.bootstrap.fix_size_to).value
        if not 0 < self.alpha <= 1:
            raise InputError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.bootstrap.n < 1:
            raise InputError("bootstrap.n must be positive")
        if self.sbm.n_sweeps < 1:
            raise InputError("sbm.n_sweeps must be positive")
        for k in self.filter.kinds:
            EventKind.parse(k)
        unknown = set(self.modules) - set(STAGES)
        if unknown:
            raise InputError(f"unknown module toggles: {sorted(unknown)}")
        if isinstance(self.paths.events, str):
            self.paths.events = [self.paths.events]
        self.filter_spec()

    @property
    def level_enums(self) -> list[Level]:
        return [Level.parse(v) for v in self.levels]

    def enabled(self, stage: str) -> bool:
        return self.modules.get(stage, True)

    def filter_spec(self, keywords=(), kinds=None) -> FilterSpec:
        window = None
        if self.filter.window is not None:
            if len(self.filter.window) != 2:
                raise InputError("filter.window needs a start and an end")
            window = tuple(parse_timestamp(t) for t in self.filter.window)
        chosen = self.filter.kinds if kinds is None else kinds
        return FilterSpec(tuple(keywords), window, frozenset(EventKind.parse(k) for k in chosen),
                          self.filter.roster_only)

    # -- serialization --------------------------------------------------
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        sub = {"paths": PathsConfig, "filter": FilterConfig, "bootstrap": BootstrapConfig,
               "sbm": SbmConfig, "ergm": ErgmConfig}
        kwargs = {}
        for key, value in data.items():
            if key in sub:
                names = {f.name for f in dataclasses.fields(sub[key])}
                bad = set(value) - names
                if bad:
                    raise InputError(f"unknown keys in {key}: {sorted(bad)}")
                kwargs[key] = sub[key](**value)
            elif key == "modules":
                kwargs[key] = {**{s: True for s in STAGES}, **value}
            else:
                kwargs[key] = value
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> PipelineConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> PipelineConfig:
        path = Path(path)
        if not path.is_file():
            raise InputError(f"missing config file: {path}")
        cfg = cls.from_json(path.read_text(encoding="utf-8"))
        # relative input paths are read relative to the config file
        base = path.parent
        cfg.paths.events = [str(base / p) for p in cfg.paths.events]
        cfg.paths.roster = str(base / cfg.paths.roster) if cfg.paths.roster else ""
        if cfg.paths.keywords:
            cfg.paths.keywords = str(base / cfg.paths.keywords)
        cfg.paths.out_dir = str(base / cfg.paths.out_dir)
        return cfg

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    def config_hash(self) -> str:
        """Hash of every analysis-relevant field.

        Input and output locations are excluded (moving the data does not
        change the analysis). So are the level list and module toggles:
        they choose which reports are produced, and every per-level result
        is independent of which other levels run. Input contents are not
        hashed.
        """
        data = self.to_dict()
        for key in ("paths", "levels", "modules"):
            data.pop(key)
        if self.filter.window is not None:
            data["filter"]["window"] = [format_timestamp(parse_timestamp(t)) for t in self.filter.window]
        data["filter"]["kinds"] = sorted(EventKind.parse(k).value for k in self.filter.kinds)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
