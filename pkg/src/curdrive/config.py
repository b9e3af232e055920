"""Experiment configuration: dataclasses, the ``paper``/``desk`` profiles and TOML loading.

A config file is sectioned key/value TOML; every section is optional and
overrides the chosen profile::

    [experiment]   total_episodes, eval_every, eval_episodes_per_point, smoothing,
                   seed, seeds, output_dir, checkpoint_every
    [curriculum]   variant, switch_episode, traffic_max, traffic_ramp_episodes
    [env]          any EnvConfig field
    [track]        any TrackSpec field
    [rewards]      any RewardParams field
    [ppo]          any PpoHyper field
    [observation]  mode ("bypass" | "vae"), vae_checkpoint, sampled, z_dim, plus RasterConfig fields
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .curriculum import AgentVariant
from .observation import RasterConfig
from .ppo import PpoHyper
from .rewards import RewardParams
from .sim import EnvConfig
from .track import TrackSpec


@dataclass(frozen=True)
class ExperimentConfig:
    variant: AgentVariant = field(default_factory=AgentVariant)
    env: EnvConfig = field(default_factory=EnvConfig)
    track: TrackSpec = field(default_factory=TrackSpec)
    rewards: RewardParams = field(default_factory=RewardParams)
    ppo: PpoHyper = field(default_factory=PpoHyper)
    raster: RasterConfig = field(default_factory=RasterConfig)
    observation_mode: str = "bypass"
    vae_checkpoint: str | None = None
    sampled_latents: bool = False
    z_dim: int = 64
    eval_every: int = 10
    eval_episodes_per_point: int = 1
    smoothing: float = 0.999
    seed: int = 0
    seeds: tuple = (0,)
    output_dir: str = "runs/default"
    checkpoint_every: int = 500

    def __post_init__(self):
        if self.eval_every < 1 or self.eval_episodes_per_point < 1:
            raise ValueError("eval_every and eval_episodes_per_point must be >= 1")
        if not (0.0 <= self.smoothing < 1.0):
            raise ValueError("smoothing must be in [0, 1)")
        if self.observation_mode not in ("bypass", "vae"):
            raise ValueError(f"unknown observation mode {self.observation_mode!r}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def total_episodes(self) -> int:
        return self.variant.total_episodes

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def paper_profile(kind: str = "CuRLA") -> ExperimentConfig:
    """3500 episodes, switch at 1500, traffic ramp to 6 over 1000 episodes, VAE observations."""
    variant = AgentVariant(kind, switch_episode=1500, total_episodes=3500, traffic_max=6,
                           traffic_ramp_episodes=1000)
    return ExperimentConfig(variant=variant, observation_mode="vae")


def desk_profile(kind: str = "CuRLA") -> ExperimentConfig:
    """Short profile that finishes in minutes on one core (bypass observations)."""
    variant = AgentVariant(kind, switch_episode=150, total_episodes=400, traffic_max=4,
                           traffic_ramp_episodes=100)
    return ExperimentConfig(variant=variant, observation_mode="bypass")


PROFILES = {"paper": paper_profile, "desk": desk_profile}

_SECTION_TYPES = {
    "env": EnvConfig,
    "track": TrackSpec,
    "rewards": RewardParams,
    "ppo": PpoHyper,
}


def _checked(cls, values: dict, section: str) -> dict:
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    return values


def apply_overrides(config: ExperimentConfig, data: dict) -> ExperimentConfig:
    """Apply a parsed TOML mapping on top of ``config``."""
    unknown = set(data) - {"experiment", "curriculum", "observation", *_SECTION_TYPES}
    if unknown:
        raise ValueError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    changes = {}
    for section, cls in _SECTION_TYPES.items():
        if section in data:
            changes[section] = replace(getattr(config, section), **_checked(cls, data[section], section))

    exp = dict(data.get("experiment", {}))
    cur = dict(data.get("curriculum", {}))
    variant_changes = {}
    if "total_episodes" in exp:
        variant_changes["total_episodes"] = exp.pop("total_episodes")
    if "variant" in cur:
        variant_changes["kind"] = cur.pop("variant")
    variant_changes.update(_checked(AgentVariant, cur, "curriculum"))
    if variant_changes:
        changes["variant"] = replace(config.variant, **variant_changes)

    obs = dict(data.get("observation", {}))
    renames = {"mode": "observation_mode", "sampled": "sampled_latents"}
    for key in ("mode", "vae_checkpoint", "sampled", "z_dim"):
        if key in obs:
            changes[renames.get(key, key)] = obs.pop(key)
    if obs:
        changes["raster"] = replace(config.raster, **_checked(RasterConfig, obs, "observation"))

    exp_fields = {"eval_every", "eval_episodes_per_point", "smoothing", "seed", "seeds", "output_dir",
                  "checkpoint_every"}
    bad = set(exp) - exp_fields
    if bad:
        raise ValueError(f"unknown key(s) in [experiment]: {', '.join(sorted(bad))}")
    changes.update(exp)
    return replace(config, **changes)


def load_config(path, profile: str = "desk", variant: str | None = None) -> ExperimentConfig:
    try:
        base = PROFILES[profile]()
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}") from None
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    config = apply_overrides(base, data)
    if variant is not None:
        config = replace(config, variant=replace(config.variant, kind=variant))
    return config


def config_from_dict(data: dict) -> ExperimentConfig:
    """Inverse of :meth:`ExperimentConfig.to_dict` (used to reload a run's saved config)."""
    d = dict(data)
    d["variant"] = AgentVariant(**d["variant"])
    d["env"] = EnvConfig(**d["env"])
    d["track"] = TrackSpec(**d["track"])
    d["rewards"] = RewardParams(**d["rewards"])
    d["ppo"] = PpoHyper(**d["ppo"])
    d["raster"] = RasterConfig(**d["raster"])
    return ExperimentConfig(**d)


def save_config(config: ExperimentConfig, path):
    Path(path).write_text(config.to_json() + "\n")


def read_config_json(path) -> ExperimentConfig:
    return config_from_dict(json.loads(Path(path).read_text()))
