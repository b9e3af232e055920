"""Training / evaluation driver and metric bookkeeping."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import curriculum
from .checkpoint import load_policy, load_vae, save_policy
from .config import ExperimentConfig, save_config
from .observation import build_observation, observation_size, rasterize
from .ppo import GaussianPolicy, RolloutBuffer, ValueFunction, make_adam_states, ppo_update
from .sim import KMH_PER_MS, DrivingEnv
from .track import build_track

log = logging.getLogger(__name__)

TRAIN = "train"
EVAL = "eval"
TRAIN_STREAM = 0
EVAL_STREAM = 1


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    phase: str
    distance_pct: float
    avg_speed_kmh: float
    episodic_reward: float
    collision_count: int
    termination_reason: str
    traffic_count: int
    steps: int


RECORD_FIELDS = [f.name for f in fields(EpisodeRecord)]
UPDATE_FIELDS = ["episode", "update", "total", "policy_term", "value_term", "entropy_term",
                 "mean_ratio", "clip_fraction"]


def smooth(series, factor: float = 0.999) -> np.ndarray:
    """Exponential moving average seeded with the first value."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("cannot smooth an empty series")
    if not (0.0 <= factor < 1.0):
        raise ValueError("smoothing factor must be in [0, 1)")
    y = np.empty_like(x)
    y[0] = x[0]
    for t in range(1, len(x)):
        y[t] = factor * y[t - 1] + (1.0 - factor) * x[t]
    return y


class Agent:
    """Policy, value function and the observation pipeline for one run."""

    def __init__(self, config: ExperimentConfig, policy: GaussianPolicy, value_fn: ValueFunction, vae=None):
        self.config = config
        self.policy = policy
        self.value_fn = value_fn
        self.vae = vae

    @classmethod
    def fresh(cls, config: ExperimentConfig, rng: np.random.Generator) -> "Agent":
        vae = _load_vae_for(config)
        obs_dim = observation_size(config.observation_mode, vae.z_dim if vae else config.z_dim)
        hyper = config.ppo
        policy = GaussianPolicy(obs_dim, 2, hyper.hidden_sizes, hyper.init_std, rng=rng)
        value_fn = ValueFunction(obs_dim, hyper.hidden_sizes, rng=rng)
        return cls(config, policy, value_fn, vae)

    @classmethod
    def from_checkpoint(cls, path, config: ExperimentConfig) -> "Agent":
        policy, value_fn = load_policy(path)
        vae = _load_vae_for(config)
        expected = observation_size(config.observation_mode, vae.z_dim if vae else config.z_dim)
        if policy.obs_dim != expected:
            raise ValueError(
                f"checkpoint expects {policy.obs_dim}-dim observations but the config produces {expected}"
            )
        return cls(config, policy, value_fn, vae)

    def observe(self, env: DrivingEnv, rng=None, sampled=False) -> np.ndarray:
        return build_observation(env.snapshot(), self.vae, sampled=sampled, rng=rng,
                                 raster=self.config.raster, params=self.config.rewards)


def _load_vae_for(config: ExperimentConfig):
    if config.observation_mode != "vae":
        return None
    if not config.vae_checkpoint or not Path(config.vae_checkpoint).is_file():
        raise FileNotFoundError(f"VAE checkpoint not found: {config.vae_checkpoint!r}")
    return load_vae(config.vae_checkpoint)


def _score(config: ExperimentConfig, episode: int, outcome) -> float:
    ri = outcome.reward_inputs
    # the off-center terminal step reports d > d_max; it scores as fully off-center
    d = min(ri.d, config.rewards.d_max)
    return curriculum.reward_for_step(config.variant, episode, ri.alpha, d, ri.v, ri.collision_intensity,
                                      config.rewards)


def run_episode(agent: Agent, env: DrivingEnv, episode: int, traffic_count: int, phase: str,
                rng: np.random.Generator | None = None, learner=None, score_episode: int | None = None
                ) -> EpisodeRecord:
    """Roll out one episode. Training episodes sample actions and feed ``learner``;
    evaluation episodes act with ``tanh(mean)``.

    ``episode`` picks the traffic layout; ``score_episode`` (default: the same)
    picks the curriculum stage used for reward gating.
    """
    config = agent.config
    score_episode = episode if score_episode is None else score_episode
    stream = TRAIN_STREAM if phase == TRAIN else EVAL_STREAM
    env.reset(traffic_count, episode_index=episode, stream=stream)
    sampled = phase == TRAIN and config.sampled_latents
    obs = agent.observe(env, rng, sampled)
    total_reward = 0.0
    collisions = 0
    steps = 0
    while True:
        if phase == TRAIN:
            action, u, logp = agent.policy.sample(obs, rng)
        else:
            action = agent.policy.deterministic_action(obs)
        out = env.step(action)
        reward = _score(config, score_episode, out)
        total_reward += reward
        collisions += out.info["new_contacts"]
        steps += 1
        next_obs = agent.observe(env, rng, sampled)
        if learner is not None:
            learner.push(obs, u, logp, reward, out.terminated, next_obs, episode)
        obs = next_obs
        if out.terminated:
            break
    dist = out.info["cumulative_distance"]
    sim_time = out.info["episode_time"]
    return EpisodeRecord(
        episode=episode,
        phase=phase,
        distance_pct=out.info["lap_fraction"] * 100.0,
        avg_speed_kmh=dist / sim_time * KMH_PER_MS if sim_time > 0 else 0.0,
        episodic_reward=total_reward,
        collision_count=collisions,
        termination_reason=out.termination_reason,
        traffic_count=traffic_count,
        steps=steps,
    )


class Learner:
    """Collects transitions into the rollout buffer and runs PPO when it fills."""

    def __init__(self, agent: Agent, rng: np.random.Generator):
        hyper = agent.config.ppo
        self.agent = agent
        self.rng = rng
        self.buffer = RolloutBuffer(hyper.horizon, agent.policy.obs_dim, agent.policy.action_dim)
        self.adam_states = make_adam_states(agent.policy, agent.value_fn)
        self.updates: list[dict] = []

    def push(self, obs, u, logp, reward, done, next_obs, episode):
        value = self.agent.value_fn(obs)
        self.buffer.add(obs, u, logp, reward, value, done)
        if self.buffer.full:
            self.buffer.bootstrap_value = 0.0 if done else self.agent.value_fn(next_obs)
            stats = ppo_update(self.agent.policy, self.agent.value_fn, self.buffer, self.agent.config.ppo,
                               self.adam_states, self.rng)
            self.updates.append({"episode": episode, "update": len(self.updates), **stats})
            self.buffer.clear()


def _mean_record(records: list[EpisodeRecord]) -> EpisodeRecord:
    if len(records) == 1:
        return records[0]
    first = records[0]
    return replace(
        first,
        distance_pct=float(np.mean([r.distance_pct for r in records])),
        avg_speed_kmh=float(np.mean([r.avg_speed_kmh for r in records])),
        episodic_reward=float(np.mean([r.episodic_reward for r in records])),
        collision_count=int(round(np.mean([r.collision_count for r in records]))),
        steps=int(round(np.mean([r.steps for r in records]))),
    )


def evaluate_point(agent: Agent, env: DrivingEnv, episode: int, traffic_count: int, n: int) -> EpisodeRecord:
    """Deterministic evaluation; ``n`` episodes use layout indices ``episode*n .. episode*n+n-1``."""
    recs = [run_episode(agent, env, episode * n + k, traffic_count, EVAL, score_episode=episode)
            for k in range(n)]
    return replace(_mean_record(recs), episode=episode)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([_fmt(v) for v in astuple(r)])


def read_records(path) -> list[EpisodeRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_FIELDS:
            raise ValueError(f"{path}: expected columns {RECORD_FIELDS}, got {reader.fieldnames}")
        for row in reader:
            try:
                out.append(EpisodeRecord(
                    episode=int(row["episode"]),
                    phase=row["phase"],
                    distance_pct=float(row["distance_pct"]),
                    avg_speed_kmh=float(row["avg_speed_kmh"]),
                    episodic_reward=float(row["episodic_reward"]),
                    collision_count=int(row["collision_count"]),
                    termination_reason=row["termination_reason"],
                    traffic_count=int(row["traffic_count"]),
                    steps=int(row["steps"]),
                ))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: malformed row {row}: {exc}") from None
    return out


def _write_updates(path, updates):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(UPDATE_FIELDS)
        for u in updates:
            w.writerow([_fmt(u[k]) for k in UPDATE_FIELDS])


@dataclass
class RunResult:
    out_dir: Path
    records: list
    records_csv: Path
    final_checkpoint: Path


def run_training(config: ExperimentConfig, progress_every: int = 0) -> RunResult:
    """Train one agent variant for ``config.total_episodes`` episodes with periodic evaluation.

    Writes ``records.csv``, ``updates.csv``, ``config.json``, ``summary.json``,
    ``checkpoints/epNNNNN.bin`` and ``final.bin`` under ``config.output_dir``.
    """
    out = Path(config.output_dir)
    try:
        (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    save_config(config, out / "config.json")

    seeds = np.random.SeedSequence(config.seed).spawn(2)
    init_rng = np.random.default_rng(seeds[0])
    rng = np.random.default_rng(seeds[1])
    track = build_track(config.track)
    env = DrivingEnv(replace(config.env, rng_seed=config.seed), track)
    agent = Agent.fresh(config, init_rng)
    learner = Learner(agent, rng)
    variant = config.variant

    records = []
    for ep in range(config.total_episodes):
        traffic = curriculum.traffic_count_for_episode(variant, ep)
        rec = run_episode(agent, env, ep, traffic, TRAIN, rng, learner)
        records.append(rec)
        if ep % config.eval_every == 0:
            records.append(evaluate_point(agent, env, ep, traffic, config.eval_episodes_per_point))
        if config.checkpoint_every and (ep + 1) % config.checkpoint_every == 0:
            save_policy(out / "checkpoints" / f"ep{ep + 1:05d}.bin", agent.policy, agent.value_fn)
        if progress_every and (ep + 1) % progress_every == 0:
            log.info("%s seed=%d ep=%d dist=%.1f%% speed=%.1f km/h reward=%.1f", variant.kind, config.seed,
                     ep, rec.distance_pct, rec.avg_speed_kmh, rec.episodic_reward)

    final = out / "final.bin"
    save_policy(final, agent.policy, agent.value_fn)
    write_records(out / "records.csv", records)
    _write_updates(out / "updates.csv", learner.updates)
    train = [r for r in records if r.phase == TRAIN]
    tail = train[-100:]
    summary = {
        "variant": variant.kind,
        "seed": config.seed,
        "episodes": config.total_episodes,
        "updates": len(learner.updates),
        "final100_avg_speed_kmh": float(np.mean([r.avg_speed_kmh for r in tail])),
        "final100_distance_pct": float(np.mean([r.distance_pct for r in tail])),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunResult(out, records, out / "records.csv", final)


def run_eval(checkpoint, config: ExperimentConfig, episodes: int, traffic_count: int | None = None
             ) -> list[EpisodeRecord]:
    """Deterministic-action episodes from a saved policy; no learning.

    Rewards are scored with the curriculum stage of the last training episode.
    """
    agent = Agent.from_checkpoint(checkpoint, config)
    env = DrivingEnv(replace(config.env, rng_seed=config.seed), build_track(config.track))
    traffic = config.env.traffic_count if traffic_count is None else traffic_count
    last = config.total_episodes - 1
    return [run_episode(agent, env, ep, traffic, EVAL, score_episode=last) for ep in range(episodes)]


def random_policy_checkpoint(config: ExperimentConfig, path, seed: int | None = None):
    """Save an untrained policy initialised exactly as ``run_training`` would."""
    seed = config.seed if seed is None else seed
    init_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
    agent = Agent.fresh(config, init_rng)
    save_policy(path, agent.policy, agent.value_fn)
    return path


def _train_job(config: ExperimentConfig) -> str:
    return str(run_training(config).records_csv)


def run_batch(configs, max_workers: int | None = None, combined_csv=None) -> list[Path]:
    """Run independent configs in worker processes; optionally concatenate their CSVs."""
    configs = list(configs)
    if max_workers == 1:
        paths = [_train_job(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            paths = list(pool.map(_train_job, configs))
    if combined_csv is not None:
        with open(combined_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["variant", "seed", *RECORD_FIELDS])
            for cfg, p in zip(configs, paths):
                for r in read_records(p):
                    w.writerow([cfg.variant.kind, cfg.seed, *(_fmt(v) for v in astuple(r))])
    return [Path(p) for p in paths]


# --------------------------------------------------------------------------- scripted driver


def scripted_action(env: DrivingEnv, target_speed: float, lateral_target: float = 0.0):
    """Proportional lane follower: steer toward ``lateral_target`` (m, left positive) and hold
    ``target_speed`` (km/h)."""
    cfg = env.config
    proj = env.projection
    track = env.track
    i = int(np.searchsorted(track.arc_s, proj.nearest_s, side="right")) - 1
    curvature = track.heading_delta[i] / track.seg_len[i]
    delta = math.atan(cfg.wheelbase * curvature) - 0.25 * (proj.signed_offset - lateral_target) - 1.2 * env.alpha
    steer = float(np.clip(delta / cfg.delta_max, -1.0, 1.0))
    throttle = float(np.clip((target_speed - env.state.speed * KMH_PER_MS) / 10.0, -1.0, 1.0))
    return np.array([steer, throttle])


def collect_frames(config: ExperimentConfig, count: int, seed: int = 0, stride: int = 5,
                   max_steps: int = 600) -> np.ndarray:
    """Rasters seen by a scripted driver with randomised speed, weaving and traffic."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    env = DrivingEnv(replace(config.env, rng_seed=seed), build_track(config.track))
    frames = []
    episode = 0
    max_traffic = max(config.variant.traffic_max, 0)
    while len(frames) < count:
        traffic = int(rng.integers(0, max_traffic + 1))
        env.reset(traffic, episode_index=episode, stream=2)
        target = rng.uniform(10.0, 60.0)
        amp = rng.uniform(0.0, 1.5)
        period = rng.uniform(4.0, 12.0)
        for k in range(max_steps):
            lateral = amp * math.sin(2.0 * math.pi * k * env.config.dt / period)
            out = env.step(scripted_action(env, target, lateral))
            if k % stride == 0:
                frames.append(rasterize(env.snapshot(), config.raster))
                if len(frames) == count:
                    break
            if out.terminated:
                break
        episode += 1
    return np.stack(frames)
