"""Simulation orchestrator: advances the field, the agents, their
communication, rewards, learning, plasticity, and the curriculum in a
fixed deterministic order, and streams run traces to CSV."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .agents import (
    OBS_DIM,
    AgentState,
    apply_action,
    observe,
    sample_action,
    spawn_positions,
    update_health,
)
from .comms import compute_activation, hebbian_update, random_connections, total_input, transmit
from .config import EngineConfig, config_to_dict
from .curriculum import difficulty_to_scenario, drift_injury, target
from .field import (
    SecretionProfile,
    gradient_value_at,
    secretion_at,
    step_field,
    value_at,
    zero_field,
)
from .learning import (
    Batch,
    compute_advantages,
    critic_step,
    init_critic,
    max_value_estimate,
    policy_entropy,
    policy_gradient_step,
)
from .policy import init_policy
from .reward import ExternalRewardConfig, combine, chem_term, external_reward, robust_term, sync_term

VISITATION_BINS = 20

TRACE_FILES = (
    "field.csv",
    "agents.csv",
    "rewards.csv",
    "weights.csv",
    "learning.csv",
    "curriculum.csv",
    "secretion.csv",
    "visitation.csv",
)


def fmt(x) -> str:
    """Canonical float formatting: 9 significant digits."""
    return format(float(x), ".9g")


@dataclass
class StepRecord:
    """Everything observable about one engine step (immutable once built)."""

    step: int
    time: float
    episode: int
    target_value: float
    x_inj: float
    field_values: np.ndarray
    clamp_count: int
    positions: np.ndarray  # (N,) after movement
    actions: np.ndarray  # (N, 3) executed values
    raw_actions: np.ndarray  # (N, 3) pre-clamp values
    activations: np.ndarray  # (N,)
    observations: np.ndarray  # (N, OBS_DIM)
    joint_observations: np.ndarray  # (N * OBS_DIM,)
    reward_breakdowns: list
    reward_totals: np.ndarray  # (N,)
    health: np.ndarray  # (N, 5)
    weight_stats: tuple  # (mean, std, min, max) over off-diagonal weights
    total_secretion: float
    entropy_mean: float
    critic_loss: float
    max_q: float
    action_stds: np.ndarray  # (N,)


class Engine:
    """Deterministic stepper for one configured run.

    All randomness derives from the master seed through named sub-streams
    (initialization, field noise, per-agent policy sampling, per-agent
    action noise, per-agent observation noise), so disabling one noise
    source never perturbs the others.
    """

    def __init__(self, config: EngineConfig):
        self.config = config
        n = config.num_agents

        root = np.random.SeedSequence(config.seed)
        children = root.spawn(2 + 3 * n)
        self._init_rng = np.random.default_rng(children[0])
        self._field_rng = np.random.default_rng(children[1])
        self._policy_rngs = [np.random.default_rng(c) for c in children[2 : 2 + n]]
        self._zeta_rngs = [np.random.default_rng(c) for c in children[2 + n : 2 + 2 * n]]
        self._obs_rngs = [np.random.default_rng(c) for c in children[2 + 2 * n : 2 + 3 * n]]

        self.field_params = config.field
        self.field = zero_field(self.field_params)
        self.connections = random_connections(
            n, self._init_rng, config.hebbian.learning_rate, config.hebbian.decay
        )
        self.schedule = config.schedule()
        self.scenario_cfg = config.scenario_config()
        self.target_value = target(self.schedule, 0)
        self.scenario = difficulty_to_scenario(self.target_value, self.schedule, self.scenario_cfg)
        self.x_inj = self.scenario.injury_position
        self.wound_center = self.scenario.injury_position

        positions = spawn_positions(n, config.spawn_min, config.spawn_max)
        # only the concentration-valued observation components (local
        # concentration and the ATP readout) carry the field's magnitude;
        # gradients and the remaining health metrics stay order-one
        obs_scale = np.ones(OBS_DIM)
        obs_scale[[0, 2]] = config.learning.policy_input_scale
        self.agents: List[AgentState] = [
            AgentState(
                id=k,
                position=float(positions[k]),
                policy=init_policy(
                    OBS_DIM,
                    config.actions,
                    self._init_rng,
                    weight_scale=config.learning.policy_weight_scale,
                    std_fraction=config.learning.policy_std_fraction,
                    input_scale=obs_scale,
                ),
            )
            for k in range(n)
        ]
        for agent in self.agents:
            update_health(agent, self.field, self.field_params, np.zeros(n))

        critic_scale = np.ones(OBS_DIM)
        critic_scale[[0, 2]] = config.learning.critic_input_scale
        self.critic = init_critic(
            n * OBS_DIM,
            self._init_rng,
            hidden=config.learning.critic_hidden,
            lr=config.learning.critic_lr,
            discount=config.learning.discount,
            input_scale=np.tile(critic_scale, n),
            output_scale=config.learning.critic_output_scale,
            num_heads=n,
        )

        self._external_cfg = ExternalRewardConfig(
            domain_length=config.field.grid_max - config.field.grid_min,
            secretion_bonus=config.reward.secretion_bonus,
            proximity_width=config.reward.proximity_width,
            inflammation_weight=config.reward.inflammation_weight,
        )

        window = config.reward.variance_window
        self._activation_windows = [deque(maxlen=window) for _ in range(n)]
        self._action_windows = [deque(maxlen=window) for _ in range(n)]
        self._pending_agent_sources = np.zeros(config.field.num_cells)
        self._episode_tuples: list = []
        self._last_critic_loss = 0.0
        self._last_max_q = 0.0
        self.step_index = 0

    # ------------------------------------------------------------------
    # stepping

    def step(self) -> StepRecord:
        """Advance the engine one tick through the eight ordered sub-steps."""
        cfg = self.config
        if self.step_index >= cfg.total_steps:
            raise ValueError(f"run is complete ({cfg.total_steps} steps)")
        n = cfg.num_agents
        params = self.field_params
        pos_grid = params.positions()

        # (1) solve the field with the sources pending from the last step
        wound = SecretionProfile(
            peak_rate=cfg.secretion.peak_rate, center=self.wound_center, width=cfg.secretion.width
        )
        sources = secretion_at(wound, pos_grid) + self._pending_agent_sources
        params_eff = replace(params, noise=self.scenario.field_noise)
        self.field = step_field(self.field, params_eff, sources, self._field_rng)

        # (2) observe and sample an action per agent, in id order
        observations = np.empty((n, OBS_DIM))
        raw_actions = np.empty((n, 3))
        actions = []
        for k, agent in enumerate(self.agents):
            obs = observe(agent, self.field, params, cfg.noise, self._obs_rngs[k])
            action, raw = sample_action(
                agent, obs, cfg.actions, cfg.noise,
                self._policy_rngs[k], noise_rng=self._zeta_rngs[k],
            )
            observations[k] = obs
            raw_actions[k] = raw
            actions.append(action)

        # (3) neural transmission and membrane-potential update
        prev_activations = np.array([a.activation for a in self.agents])
        gains = np.array([a.amplify_gain for a in actions])
        signals = transmit(self.connections, prev_activations, gains)
        chem = np.array([value_at(self.field, params, a.position) for a in self.agents])
        activations = np.asarray(compute_activation(total_input(signals, chem)))
        for agent, a in zip(self.agents, activations):
            agent.activation = float(a)

        # (4) shaped rewards
        c_inj = value_at(self.field, params, self.x_inj)
        breakdowns = []
        for k, agent in enumerate(self.agents):
            r_ext = external_reward(
                agent.position, actions[k].secrete_rate, self.x_inj,
                self._external_cfg, agent.health.oxidative_stress,
            )
            r_chem = chem_term(float(chem[k]), c_inj)
            peers = [self.agents[q].activation for q in range(n) if q != k]
            r_sync = sync_term(agent.activation, peers)
            self._activation_windows[k].append(agent.activation)
            r_robust = robust_term(list(self._activation_windows[k]))
            breakdowns.append(combine(r_ext, r_chem, r_sync, r_robust, cfg.reward.coefficients))
        reward_totals = np.array([b.total for b in breakdowns])

        # (5) accumulate the learning batch; update at episode boundaries
        joint = observations.reshape(-1)
        self._episode_tuples.append((observations.copy(), raw_actions.copy(), reward_totals.copy(), joint.copy()))
        if cfg.learning.per_step_updates or len(self._episode_tuples) >= cfg.learning.episode_length:
            self._apply_updates()

        # (6) Hebbian plasticity on the fresh activations
        self.connections = hebbian_update(self.connections, activations)

        # (7) curriculum update and injury-site adjustment for the next tick
        record_target = self.target_value
        record_x_inj = self.x_inj
        next_target = target(self.schedule, self.step_index + 1)
        next_scenario = difficulty_to_scenario(next_target, self.schedule, self.scenario_cfg)
        grad_at_inj = gradient_value_at(self.field, params, self.x_inj)
        self.wound_center = next_scenario.injury_position
        # the marker stays inside the difficulty corridor: agent secretion
        # plumes can flip the local gradient sign, but the injury-distance
        # knob bounds where the injury may sit
        corridor_lo = min(self.scenario_cfg.injury_near, self.scenario_cfg.injury_far)
        corridor_hi = max(self.scenario_cfg.injury_near, self.scenario_cfg.injury_far)
        self.x_inj = drift_injury(
            self.x_inj, grad_at_inj, self.wound_center, next_scenario,
            params.dt, corridor_lo, corridor_hi,
        )
        self.target_value = next_target
        self.scenario = next_scenario

        # (8) execute actions: movement, secretion deposits, health refresh
        pending = np.zeros(params.num_cells)
        for k, agent in enumerate(self.agents):
            pending = pending + apply_action(agent, actions[k], params, cfg.secretion.width)
        self._pending_agent_sources = pending
        all_acts = np.array([a.activation for a in self.agents])
        for agent in self.agents:
            update_health(agent, self.field, params, all_acts)

        total_secretion = 0.0
        for a in actions:
            total_secretion += a.secrete_rate
        action_stds = np.empty(n)
        for k in range(n):
            self._action_windows[k].append(actions[k].as_array())
            win = self._action_windows[k]
            action_stds[k] = float(np.std(np.concatenate(win))) if len(win) >= 2 else 0.0

        w = self.connections.weights
        off_diag = w[~np.eye(n, dtype=bool)] if n > 1 else np.zeros(1)
        entropy_mean = 0.0
        for agent in self.agents:
            entropy_mean += policy_entropy(agent.policy)
        entropy_mean /= n

        record = StepRecord(
            step=self.step_index,
            time=self.field.time,
            episode=self.step_index // cfg.learning.episode_length,
            target_value=record_target,
            x_inj=record_x_inj,
            field_values=self.field.values.copy(),
            clamp_count=self.field.clamp_count,
            positions=np.array([a.position for a in self.agents]),
            actions=np.array([a.as_array() for a in actions]),
            raw_actions=raw_actions,
            activations=all_acts,
            observations=observations,
            joint_observations=joint,
            reward_breakdowns=breakdowns,
            reward_totals=reward_totals,
            health=np.array([a.health.as_array() for a in self.agents]),
            weight_stats=(
                float(off_diag.mean()),
                float(off_diag.std()),
                float(off_diag.min()),
                float(off_diag.max()),
            ),
            total_secretion=total_secretion,
            entropy_mean=entropy_mean,
            critic_loss=self._last_critic_loss,
            max_q=self._last_max_q,
            action_stds=action_stds,
        )
        self.step_index += 1
        return record

    def _apply_updates(self):
        cfg = self.config
        batch = self._tuples_to_batch(self._episode_tuples)
        advantages = compute_advantages(self.critic, batch)
        self._last_max_q = max_value_estimate(self.critic, batch)
        for k, agent in enumerate(self.agents):
            agent.policy = policy_gradient_step(
                agent.policy,
                batch.observations[k],
                batch.actions[k],
                advantages[k],
                cfg.actions,
                cfg.entropy,
                cfg.learning.policy_lr,
            )
        for _ in range(cfg.learning.critic_epochs):
            self.critic, self._last_critic_loss = critic_step(self.critic, batch)
        self._episode_tuples = []

    def _tuples_to_batch(self, tuples) -> Batch:
        obs = np.stack([t[0] for t in tuples], axis=1)  # (N, T, obs)
        acts = np.stack([t[1] for t in tuples], axis=1)
        rewards = np.stack([t[2] for t in tuples], axis=1)
        joint = np.stack([t[3] for t in tuples], axis=0)  # (T, N*obs)
        next_obs = np.concatenate([obs[:, 1:], obs[:, -1:]], axis=1)
        return Batch(
            observations=obs,
            actions=acts,
            rewards=rewards,
            next_observations=next_obs,
            joint_observations=joint,
        )

    def collect_batch(self, horizon: int) -> Batch:
        """Step the engine `horizon` times and return the recorded tuples."""
        collected = []
        for _ in range(horizon):
            r = self.step()
            collected.append((r.observations, r.raw_actions, r.reward_totals, r.joint_observations))
        return self._tuples_to_batch(collected)

    # ------------------------------------------------------------------
    # full runs with trace output

    def run(self, out_dir) -> dict:
        """Execute the whole run, streaming every trace to out_dir.

        Returns a summary dict with row counts per file. An I/O failure
        leaves a partial-output marker in the manifest.
        """
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cfg = self.config
        pos_grid = self.field_params.positions()
        bin_edges = np.linspace(cfg.field.grid_min, cfg.field.grid_max, VISITATION_BINS + 1)
        bin_centers = 0.5 * (bin_edges[:-1] + bin_edges[1:])

        rows = {name: 0 for name in TRACE_FILES}
        handles = {}
        status = "complete"
        error_note = ""
        try:
            for name in TRACE_FILES:
                handles[name] = open(out / name, "w")
            handles["field.csv"].write("time," + ",".join(fmt(x) for x in pos_grid) + "\n")
            handles["agents.csv"].write(
                "step,agent_id,position,activation,secrete_rate,move_delta,amplify_gain,"
                "atp,injury_gradient,secretion_rate,neural_coherence,oxidative_stress\n"
            )
            handles["rewards.csv"].write("step,agent_id,r_ext,r_chem,r_sync,r_robust,total\n")
            handles["weights.csv"].write("step,w_mean,w_std,w_min,w_max\n")
            handles["learning.csv"].write(
                "episode,mean_reward,policy_entropy,critic_loss,max_q_proxy,"
                + ",".join(f"action_std_{k}" for k in range(cfg.num_agents))
                + "\n"
            )
            handles["curriculum.csv"].write("step,target,x_inj\n")
            handles["secretion.csv"].write("step,total_secretion\n")
            handles["visitation.csv"].write(
                "step," + ",".join(fmt(c) for c in bin_centers) + "\n"
            )

            for _ in range(cfg.total_steps):
                rec = self.step()
                self._write_record(handles, rows, rec, bin_edges)

            for name in TRACE_FILES:
                handles[name].close()
            handles = {}

            self._write_final_field(out, pos_grid)
            self._write_final_policies(out)
        except OSError as exc:
            status = "partial"
            error_note = str(exc)
            for h in handles.values():
                try:
                    h.close()
                except OSError:
                    pass
        self._write_manifest(out, rows, status, error_note)
        if status != "complete":
            raise RuntimeError(f"run produced partial output: {error_note}")
        return {"out_dir": str(out), "rows": rows, "status": status}

    def _write_record(self, handles, rows, rec: StepRecord, bin_edges):
        s = rec.step
        handles["field.csv"].write(
            fmt(rec.time) + "," + ",".join(fmt(v) for v in rec.field_values) + "\n"
        )
        rows["field.csv"] += 1
        for k in range(self.config.num_agents):
            act = rec.actions[k]
            h = rec.health[k]
            handles["agents.csv"].write(
                f"{s},{k},{fmt(rec.positions[k])},{fmt(rec.activations[k])},"
                f"{fmt(act[0])},{fmt(act[1])},{fmt(act[2])},"
                f"{fmt(h[0])},{fmt(h[1])},{fmt(h[2])},{fmt(h[3])},{fmt(h[4])}\n"
            )
            rows["agents.csv"] += 1
            b = rec.reward_breakdowns[k]
            handles["rewards.csv"].write(
                f"{s},{k},{fmt(b.external)},{fmt(b.chem)},{fmt(b.sync)},"
                f"{fmt(b.robust)},{fmt(b.total)}\n"
            )
            rows["rewards.csv"] += 1
        wm, ws, wlo, whi = rec.weight_stats
        handles["weights.csv"].write(f"{s},{fmt(wm)},{fmt(ws)},{fmt(wlo)},{fmt(whi)}\n")
        rows["weights.csv"] += 1
        handles["learning.csv"].write(
            f"{rec.episode},{fmt(rec.reward_totals.mean())},{fmt(rec.entropy_mean)},"
            f"{fmt(rec.critic_loss)},{fmt(rec.max_q)},"
            + ",".join(fmt(v) for v in rec.action_stds)
            + "\n"
        )
        rows["learning.csv"] += 1
        handles["curriculum.csv"].write(
            f"{s},{fmt(rec.target_value)},{fmt(rec.x_inj)}\n"
        )
        rows["curriculum.csv"] += 1
        handles["secretion.csv"].write(f"{s},{fmt(rec.total_secretion)}\n")
        rows["secretion.csv"] += 1
        counts, _ = np.histogram(rec.positions, bins=bin_edges)
        handles["visitation.csv"].write(
            f"{s}," + ",".join(str(int(c)) for c in counts) + "\n"
        )
        rows["visitation.csv"] += 1

    def _write_final_field(self, out: Path, pos_grid):
        with open(out / "final_field.csv", "w") as fh:
            fh.write("time," + ",".join(fmt(x) for x in pos_grid) + "\n")
            fh.write(fmt(self.field.time) + "," + ",".join(fmt(v) for v in self.field.values) + "\n")

    def _write_final_policies(self, out: Path):
        payload = {}
        for agent in self.agents:
            payload[f"agent_{agent.id}"] = {
                "weights": [[float(fmt(v)) for v in row] for row in agent.policy.weights],
                "bias": [float(fmt(v)) for v in agent.policy.bias],
                "log_std": [float(fmt(v)) for v in agent.policy.log_std],
            }
        with open(out / "final_policies.json", "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")

    def _write_manifest(self, out: Path, rows, status, error_note):
        lines = [
            "tissuesim run manifest",
            f"version: {__version__}",
            f"seed: {self.config.seed}",
            f"status: {status}" + (f" ({error_note})" if error_note else ""),
            "config: " + json.dumps(config_to_dict(self.config), sort_keys=True),
            "rows:",
        ]
        lines += [f"  {name}: {rows[name]}" for name in TRACE_FILES]
        (out / "manifest.txt").write_text("\n".join(lines) + "\n")


def run_experiment(config: EngineConfig, out_dir) -> dict:
    """Build an engine for the config and run it to completion."""
    return Engine(config).run(out_dir)
