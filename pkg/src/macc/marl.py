"""MARL formulation (states, rewards) and the MADDPG trainer.

Each worker is an agent. Its state is [d_i, d_-i, v_i, v_-i, v_m]
(dimension 3N+2): own distance to the master, the other workers'
distances, own velocity, the others' velocities, and the master's
velocity.  The action is the load l_i in [0, p], handled internally in
normalized [0, 1] form.  All agents share one reward
r = -T_j - c 1[sum(l) < p].

Training follows MADDPG: per agent an actor, a centralized critic over the
joint state and action, and Polyak-averaged target copies of both.
Critics descend the TD error against r + gamma Q'(s', pi'(s')); actors
ascend the critic through the chain rule.  Exploration adds Gaussian noise
to the pre-scaling action, with the noise level decaying linearly over
training.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import simcore
from .envmodels import distance
from .nets import Mlp, make_optimizer

HIDDEN = (64, 64, 64)


def state_dim(n_workers):
    return 3 * n_workers + 2


def build_state(world, agent):
    """Raw (unnormalized) state vector of one agent, dimension 3N+2."""
    n = world.n_workers
    if not 0 <= agent < n:
        raise ValueError(f"agent index {agent} out of range [0, {n})")
    dists = [distance(k, world.master) for k, _ in world.workers]
    s = [dists[agent]]
    s.extend(dists[i] for i in range(n) if i != agent)
    s.extend(world.workers[agent][0].velocity)
    for i in range(n):
        if i != agent:
            s.extend(world.workers[i][0].velocity)
    s.extend(world.master.velocity)
    return np.array(s)


def state_scales(scenario):
    """Fixed normalization scales (distance, velocity) from the scenario ranges."""
    half = 0.5 * (scenario.pos_range[1] - scenario.pos_range[0])
    dist_scale = half * math.sqrt(2.0)
    vel_scale = max(abs(scenario.vel_range[0]), abs(scenario.vel_range[1]))
    return (dist_scale if dist_scale > 0 else 1.0, vel_scale if vel_scale > 0 else 1.0)


def normalize_states(states, n_workers, scales):
    """Scale raw states for the networks: distances and velocities to O(1)."""
    out = np.asarray(states, dtype=np.float64).copy()
    d_scale, v_scale = scales
    out[..., :n_workers] /= d_scale
    out[..., n_workers:] /= v_scale
    return out


def reward(t_complete, alloc, p, c=200.0, boundary="lt"):
    """Shared reward -T_j - c when the allocation misses the decodability bar.

    boundary "lt" penalizes sum(l) < p (the constraint-consistent reading);
    "le" penalizes sum(l) <= p (the literal formula).
    """
    total = alloc.total if hasattr(alloc, "total") else int(sum(alloc))
    if boundary == "lt":
        short = total < p
    elif boundary == "le":
        short = total <= p
    else:
        raise ValueError(f"boundary must be 'lt' or 'le', got '{boundary}'")
    return -float(t_complete) - (float(c) if short else 0.0)


@dataclass
class AgentNets:
    actor: Mlp
    critic: Mlp
    target_actor: Mlp
    target_critic: Mlp
    actor_opt: object
    critic_opt: object


def make_agents(n_workers, rng, lr=0.01, optimizer="adam", hidden=HIDDEN):
    """Fresh actor/critic pairs with target copies initialized equal."""
    sdim = state_dim(n_workers)
    agents = []
    for i in range(n_workers):
        arng = rng.substream("agent", i)
        actor = Mlp(sdim, hidden, 1, "sigmoid", arng.substream("actor"))
        critic = Mlp(n_workers * sdim + n_workers, hidden, 1, "linear", arng.substream("critic"))
        agents.append(
            AgentNets(
                actor=actor,
                critic=critic,
                target_actor=actor.clone(),
                target_critic=critic.clone(),
                actor_opt=make_optimizer(optimizer, actor.params(), lr),
                critic_opt=make_optimizer(optimizer, critic.params(), lr),
            )
        )
    return agents


def actor_forward(nets, s):
    """Deterministic policy output in (0, 1)."""
    return nets.actor.forward(s)


def _critic_input(states, actions):
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    if states.ndim == 2:  # single joint sample (N, D)
        return np.concatenate([states.reshape(-1), actions])
    flat = states.reshape(states.shape[0], -1)
    return np.concatenate([flat, actions], axis=1)


def critic_forward(nets, states, actions):
    """Q(s, a) over the joint state and normalized joint action."""
    out = nets.critic.forward(_critic_input(states, actions))
    return out[..., 0]


def td_target(agents, i, batch, gamma):
    """Bootstrap targets r + gamma Q'_i(s', pi'(s')) from the target networks."""
    ns = batch["next_states"]
    next_actions = np.column_stack(
        [agents[k].target_actor.forward(ns[:, k, :])[:, 0] for k in range(len(agents))]
    )
    q_next = agents[i].target_critic.forward(_critic_input(ns, next_actions))[:, 0]
    return batch["rewards"] + gamma * (1.0 - batch["dones"]) * q_next


def critic_update(agents, i, batch, gamma):
    """One descent step on the mean squared TD error; returns the pre-step loss."""
    nets = agents[i]
    y = td_target(agents, i, batch, gamma)
    x = _critic_input(batch["states"], batch["actions"])
    q, cache = nets.critic.forward_cache(x)
    err = q[:, 0] - y
    loss = float(np.mean(err * err))
    grad_q = (2.0 / err.shape[0]) * err[:, None]
    grads, _ = nets.critic.backward(cache, grad_q)
    nets.critic_opt.step(nets.critic.params(), grads)
    return loss


def actor_update(agents, i, batch):
    """One ascent step on mean Q_i(s, a) with a_i replayed through the actor.

    The gradient is the chain composition d pi / d theta times d Q / d a_i;
    other agents' actions come from the batch.  Returns the pre-step mean Q.
    """
    nets = agents[i]
    s_i = batch["states"][:, i, :]
    a_i, a_cache = nets.actor.forward_cache(s_i)
    actions = batch["actions"].copy()
    actions[:, i] = a_i[:, 0]
    x = _critic_input(batch["states"], actions)
    q, q_cache = nets.critic.forward_cache(x)
    n_batch = q.shape[0]
    _, grad_x = nets.critic.backward(q_cache, np.full((n_batch, 1), 1.0 / n_batch))
    sdim = batch["states"].shape[1] * batch["states"].shape[2]
    grad_a = grad_x[:, sdim + i]
    grads, _ = nets.actor.backward(a_cache, grad_a[:, None])
    nets.actor_opt.step(nets.actor.params(), [-g for g in grads])
    return float(q.mean())


def polyak_update(nets, tau):
    """Targets track the primaries: theta' <- tau theta' + (1 - tau) theta."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    for target, primary in (
        (nets.target_actor, nets.actor),
        (nets.target_critic, nets.critic),
    ):
        for tp, pp in zip(target.params(), primary.params()):
            tp *= tau
            tp += (1.0 - tau) * pp


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform with-replacement sampling."""

    def __init__(self, capacity, n_workers, sdim):
        self.capacity = int(capacity)
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.states = np.zeros((self.capacity, n_workers, sdim))
        self.actions = np.zeros((self.capacity, n_workers))
        self.rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, n_workers, sdim))
        self.dones = np.zeros(self.capacity)
        self.size = 0
        self.cursor = 0

    def push(self, s, a, r, s_next, done):
        c = self.cursor
        self.states[c] = s
        self.actions[c] = a
        self.rewards[c] = r
        self.next_states[c] = s_next
        self.dones[c] = 1.0 if done else 0.0
        self.cursor = (c + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n, rng):
        if self.size < 1:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.gen.integers(0, self.size, size=n)
        return {
            "states": self.states[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_states": self.next_states[idx],
            "dones": self.dones[idx],
        }


def make_policy(agents, scenario):
    """Actor callables over normalized states, ready for policy_alloc."""
    return [
        (lambda s, _a=nets.actor: float(_a.forward(s)[0]))
        for nets in agents
    ]


def policy_allocator(agents, scenario, noise_rng=None, noise_std=0.0):
    """Allocator closure for run_episode: states -> actor loads.

    With noise_rng set, exploration noise is added to each pre-scaling
    action and the result clipped back to [0, 1].
    """
    scales = state_scales(scenario)
    n = scenario.n_workers
    p = scenario.p_rows

    def allocate(world, task_index):
        raw = np.stack([build_state(world, i) for i in range(n)])
        norm = normalize_states(raw, n, scales)
        acts = np.array([float(agents[i].actor.forward(norm[i])[0]) for i in range(n)])
        if noise_rng is not None and noise_std > 0:
            acts = acts + noise_rng.gen.normal(0.0, noise_std, n)
            acts = np.clip(acts, 0.0, 1.0)
        return [int(round(p * a)) for a in acts]

    return allocate


def train(scenario, cfg, rng, progress=None):
    """MADDPG training loop; returns (agents, learning curve).

    Per iteration: collect episodes with the current actors plus
    exploration noise, store per-task transitions, then for each agent draw
    an independent mini-batch and apply critic_update, actor_update and
    polyak_update.  The curve holds one mean total episode reward per
    iteration (rewards are shared, so averaging over agents is the
    identity).

    Actors stay frozen for the first cfg.warmup_iterations iterations while
    the critics learn the feasibility cliff.  The reward has a local
    optimum at the all-zero allocation (inside the infeasible region,
    doing less work finishes sooner), and an actor driven by an untrained
    critic reliably walks into it and saturates there; releasing the actor
    only after the critics have seen both sides of the cliff avoids that
    trap.
    """
    n = scenario.n_workers
    sdim = state_dim(n)
    scales = state_scales(scenario)
    agents = make_agents(
        n, rng.substream("init"), lr=cfg.learning_rate, optimizer=cfg.optimizer
    )
    buffer = ReplayBuffer(cfg.replay_capacity, n, sdim)
    curve = []
    episode_counter = 0

    for it in range(cfg.max_iterations):
        if cfg.max_iterations > 1:
            frac = it / (cfg.max_iterations - 1)
        else:
            frac = 0.0
        noise_std = cfg.noise_start + (cfg.noise_end - cfg.noise_start) * frac

        totals = []
        for _ in range(cfg.episodes_per_iteration):
            g = episode_counter
            episode_counter += 1
            allocator = policy_allocator(
                agents, scenario, noise_rng=rng.substream("noise", g), noise_std=noise_std
            )
            rec = simcore.run_episode(
                scenario,
                allocator,
                rng.substream("episode", g),
                penalty=cfg.penalty,
                penalty_boundary=cfg.penalty_boundary,
            )
            k = scenario.k_tasks
            norm_states = normalize_states(np.stack(rec.states), n, scales)
            norm_actions = np.array(rec.actions, dtype=np.float64) / scenario.p_rows
            for j in range(k):
                done = j == k - 1
                s_next = norm_states[j + 1] if not done else np.zeros_like(norm_states[j])
                buffer.push(norm_states[j], norm_actions[j], rec.rewards[j], s_next, done)
            totals.append(sum(rec.rewards))
        curve.append(float(np.mean(totals)))

        if buffer.size >= cfg.minibatch:
            for i in range(n):
                batch = buffer.sample(cfg.minibatch, rng.substream("batch", it, i))
                critic_update(agents, i, batch, cfg.gamma)
                if it >= cfg.warmup_iterations:
                    actor_update(agents, i, batch)
            for i in range(n):
                polyak_update(agents[i], cfg.tau)

        if progress is not None:
            progress(it, curve[-1])

    return agents, curve


def _mlp_to_dict(mlp):
    return {
        "dims": list(mlp.dims),
        "out_act": mlp.out_act,
        "weights": [w.tolist() for w in mlp.weights],
        "biases": [b.tolist() for b in mlp.biases],
    }


def _mlp_from_dict(d):
    mlp = object.__new__(Mlp)
    mlp.dims = [int(v) for v in d["dims"]]
    mlp.out_act = d["out_act"]
    mlp.weights = [np.array(w, dtype=np.float64) for w in d["weights"]]
    mlp.biases = [np.array(b, dtype=np.float64) for b in d["biases"]]
    return mlp


def save_checkpoint(path, agents, scenario):
    """Write all four networks of every agent as a versioned JSON container.

    Optimizer state is not persisted; a resumed run restarts its moments.
    """
    payload = {
        "format": "macc-checkpoint-1",
        "n_workers": len(agents),
        "scenario": scenario.name,
        "p_rows": scenario.p_rows,
        "agents": [
            {
                "actor": _mlp_to_dict(a.actor),
                "critic": _mlp_to_dict(a.critic),
                "target_actor": _mlp_to_dict(a.target_actor),
                "target_critic": _mlp_to_dict(a.target_critic),
            }
            for a in agents
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))


def load_checkpoint(path, lr=0.01, optimizer="adam"):
    """Rebuild AgentNets from a checkpoint file."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "macc-checkpoint-1":
        raise ValueError(f"unrecognized checkpoint format in {path}")
    agents = []
    for blob in payload["agents"]:
        actor = _mlp_from_dict(blob["actor"])
        critic = _mlp_from_dict(blob["critic"])
        agents.append(
            AgentNets(
                actor=actor,
                critic=critic,
                target_actor=_mlp_from_dict(blob["target_actor"]),
                target_critic=_mlp_from_dict(blob["target_critic"]),
                actor_opt=make_optimizer(optimizer, actor.params(), lr),
                critic_opt=make_optimizer(optimizer, critic.params(), lr),
            )
        )
    return agents
