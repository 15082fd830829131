import json
import math

import numpy as np
import pytest

from macc import marl
from macc.config import ScenarioConfig, TrainConfig
from macc.envmodels import ComputeProfile, KinematicState
from macc.marl import (
    ReplayBuffer,
    actor_update,
    build_state,
    critic_forward,
    critic_update,
    load_checkpoint,
    make_agents,
    normalize_states,
    policy_allocator,
    polyak_update,
    reward,
    save_checkpoint,
    state_dim,
    state_scales,
    td_target,
    train,
)
from macc.numerics import RngStream
from macc.simcore import WorldState, sample_world

TINY = ScenarioConfig(name="tiny", n_workers=2, p_rows=8, m_cols=6, k_tasks=2,
                      beta_range=(1.0e3, 2.0e3), batch_size=3)


def two_worker_world():
    master = KinematicState(position=(0.0, 0.0), velocity=(0.5, -0.5))
    w0 = (KinematicState(position=(3.0, 4.0), velocity=(1.0, 2.0)),
          ComputeProfile(alpha=1e-3, beta=1e3))
    w1 = (KinematicState(position=(6.0, 8.0), velocity=(-1.0, 0.0)),
          ComputeProfile(alpha=1e-3, beta=1e3))
    return WorldState(master=master, workers=(w0, w1), clock=0.0)


class TestStates:
    def test_layout_own_entries_first(self):
        world = two_worker_world()
        s0 = build_state(world, 0)
        s1 = build_state(world, 1)
        np.testing.assert_allclose(s0, [5.0, 10.0, 1.0, 2.0, -1.0, 0.0, 0.5, -0.5])
        np.testing.assert_allclose(s1, [10.0, 5.0, -1.0, 0.0, 1.0, 2.0, 0.5, -0.5])
        assert len(s0) == state_dim(2)

    def test_agent_index_checked(self):
        with pytest.raises(ValueError):
            build_state(two_worker_world(), 2)

    def test_scales_from_ranges(self):
        d_scale, v_scale = state_scales(TINY)
        assert d_scale == pytest.approx(100.0 * math.sqrt(2.0))
        assert v_scale == 10.0

    def test_normalization_splits_columns(self):
        world = two_worker_world()
        raw = np.stack([build_state(world, i) for i in range(2)])
        norm = normalize_states(raw, 2, (2.0, 4.0))
        np.testing.assert_allclose(norm[0, :2], raw[0, :2] / 2.0)
        np.testing.assert_allclose(norm[0, 2:], raw[0, 2:] / 4.0)
        assert raw[0, 0] == 5.0  # input untouched


class TestReward:
    def test_feasible_is_negative_time(self):
        assert reward(3.5, [4, 4], 8) == -3.5

    def test_short_allocation_penalized(self):
        assert reward(3.5, [4, 3], 8) == -203.5

    def test_boundary_lt_spares_exact_cover(self):
        assert reward(1.0, [4, 4], 8, boundary="lt") == -1.0
        assert reward(1.0, [4, 4], 8, boundary="le") == -201.0

    def test_custom_penalty(self):
        assert reward(1.0, [0, 0], 8, c=7.0) == -8.0

    def test_bad_boundary(self):
        with pytest.raises(ValueError):
            reward(1.0, [4, 4], 8, boundary="leq")


class TestAgents:
    def test_network_shapes(self):
        agents = make_agents(3, RngStream(0))
        sdim = state_dim(3)
        for nets in agents:
            assert nets.actor.dims == [sdim, 64, 64, 64, 1]
            assert nets.critic.dims == [3 * sdim + 3, 64, 64, 64, 1]
            assert nets.actor.out_act == "sigmoid"
            assert nets.critic.out_act == "linear"

    def test_targets_start_equal_and_detached(self):
        agents = make_agents(2, RngStream(0), hidden=(4,))
        nets = agents[0]
        for tp, pp in zip(nets.target_actor.params(), nets.actor.params()):
            np.testing.assert_array_equal(tp, pp)
        nets.actor.weights[0][0, 0] += 1.0
        assert nets.target_actor.weights[0][0, 0] != nets.actor.weights[0][0, 0]

    def test_agents_differ_but_seeding_reproduces(self):
        a = make_agents(2, RngStream(5), hidden=(4,))
        b = make_agents(2, RngStream(5), hidden=(4,))
        assert not np.array_equal(a[0].actor.weights[0], a[1].actor.weights[0])
        np.testing.assert_array_equal(a[1].critic.weights[0], b[1].critic.weights[0])

    def test_critic_forward_single_matches_batch(self):
        agents = make_agents(2, RngStream(1), hidden=(4,))
        states = RngStream(2).gen.normal(0, 1, (5, 2, state_dim(2)))
        actions = RngStream(3).gen.random((5, 2))
        batch_q = critic_forward(agents[0], states, actions)
        singles = [float(critic_forward(agents[0], states[k], actions[k])) for k in range(5)]
        np.testing.assert_allclose(batch_q, singles, rtol=1e-14)


def sum_critic(nets):
    """Overwrite the critic so Q(x) exactly equals sum(x)."""
    in_dim = nets.critic.in_dim
    nets.critic.set_params([np.ones((in_dim, 1)), np.array([100.0]),
                            np.array([[1.0]]), np.array([-100.0])])


def constant_half_actor(mlp):
    """Zero every layer: ReLU(0) hidden, sigmoid(0) = 0.5 out."""
    mlp.set_params([np.zeros_like(q) for q in mlp.params()])


def make_batch(n, sdim, size, seed):
    gen = RngStream(seed).gen
    return {
        "states": gen.normal(0, 1, (size, n, sdim)),
        "actions": gen.random((size, n)),
        "rewards": gen.normal(0, 1, size),
        "next_states": gen.normal(0, 1, (size, n, sdim)),
        "dones": (gen.random(size) < 0.3).astype(float),
    }


class TestTdTarget:
    def test_hand_computed_bootstrap(self):
        agents = make_agents(2, RngStream(0), hidden=(1,))
        for nets in agents:
            constant_half_actor(nets.target_actor)
        target = agents[0]
        target.target_critic.set_params([np.ones((18, 1)), np.array([100.0]),
                                         np.array([[1.0]]), np.array([-100.0])])
        batch = {
            "next_states": np.ones((2, 2, 8)),
            "rewards": np.array([1.0, 2.0]),
            "dones": np.array([0.0, 1.0]),
        }
        # Q'(s', a') = 16 ones + two 0.5 actions = 17
        y = td_target(agents, 0, batch, gamma=0.95)
        np.testing.assert_allclose(y, [1.0 + 0.95 * 17.0, 2.0], rtol=1e-12)

    def test_gamma_zero_returns_rewards(self):
        agents = make_agents(2, RngStream(0), hidden=(4,))
        batch = make_batch(2, 8, 6, seed=9)
        np.testing.assert_allclose(td_target(agents, 0, batch, gamma=0.0),
                                   batch["rewards"])

    def test_terminal_rows_ignore_bootstrap(self):
        agents = make_agents(2, RngStream(0), hidden=(4,))
        batch = make_batch(2, 8, 6, seed=9)
        batch["dones"] = np.ones(6)
        np.testing.assert_allclose(td_target(agents, 0, batch, gamma=0.95),
                                   batch["rewards"])


class TestCriticUpdate:
    def test_returns_pre_step_mse(self):
        agents = make_agents(2, RngStream(1), hidden=(4,))
        batch = make_batch(2, 8, 8, seed=10)
        y = td_target(agents, 0, batch, gamma=0.95)
        q = critic_forward(agents[0], batch["states"], batch["actions"])
        expected = float(np.mean((q - y) ** 2))
        assert critic_update(agents, 0, batch, gamma=0.95) == expected

    def test_descends_on_a_fixed_batch(self):
        agents = make_agents(2, RngStream(1), hidden=(8, 8), lr=0.01)
        batch = make_batch(2, 8, 16, seed=11)
        first = critic_update(agents, 0, batch, gamma=0.95)
        for _ in range(300):
            last = critic_update(agents, 0, batch, gamma=0.95)
        assert last < 0.05 * first


class TestActorUpdate:
    def test_flat_critic_leaves_actor_unchanged(self):
        agents = make_agents(2, RngStream(2), hidden=(4,), optimizer="sgd")
        zero = [np.zeros_like(q) for q in agents[0].critic.params()]
        agents[0].critic.set_params(zero)
        before = [q.copy() for q in agents[0].actor.params()]
        actor_update(agents, 0, make_batch(2, 8, 6, seed=12))
        for b, a in zip(before, agents[0].actor.params()):
            np.testing.assert_array_equal(b, a)

    def test_ascends_crafted_critic(self):
        # Q = a_0 exactly, so the update must raise agent 0's mean action
        agents = make_agents(2, RngStream(3), hidden=(1,), optimizer="sgd", lr=0.5)
        w0 = np.zeros((18, 1))
        w0[16, 0] = 1.0  # the a_0 column of the critic input
        agents[0].critic.set_params([w0, np.array([100.0]),
                                     np.array([[1.0]]), np.array([-100.0])])
        batch = make_batch(2, 8, 12, seed=13)
        s0 = batch["states"][:, 0, :]
        before = agents[0].actor.forward(s0).mean()
        q_seen = actor_update(agents, 0, batch)
        after = agents[0].actor.forward(s0).mean()
        assert after > before
        assert q_seen == pytest.approx(before, rel=1e-12)

    def test_gradient_matches_finite_differences(self):
        agents = make_agents(2, RngStream(4), hidden=(3,), optimizer="sgd", lr=1.0)
        batch = make_batch(2, 8, 4, seed=14)
        nets = agents[0]
        start = [q.copy() for q in nets.actor.params()]

        def objective():
            a0 = nets.actor.forward(batch["states"][:, 0, :])[:, 0]
            actions = batch["actions"].copy()
            actions[:, 0] = a0
            return float(np.mean(critic_forward(nets, batch["states"], actions)))

        actor_update(agents, 0, batch)
        analytic = [after - b for after, b in zip(nets.actor.params(), start)]
        nets.actor.set_params(start)

        eps = 1e-6
        for arr, g in zip(nets.actor.params(), analytic):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                keep = arr[idx]
                arr[idx] = keep + eps
                up = objective()
                arr[idx] = keep - eps
                down = objective()
                arr[idx] = keep
                np.testing.assert_allclose(g[idx], (up - down) / (2 * eps),
                                           rtol=1e-4, atol=1e-8)


class TestPolyak:
    def test_elementwise_average(self):
        agents = make_agents(1, RngStream(5), hidden=(4,))
        nets = agents[0]
        nets.actor.weights[0] += 0.3  # separate primary from target
        t_before = [q.copy() for q in nets.target_actor.params()]
        p_now = [q.copy() for q in nets.actor.params()]
        polyak_update(nets, tau=0.9)
        for t0, p, t1 in zip(t_before, p_now, nets.target_actor.params()):
            np.testing.assert_allclose(t1, 0.9 * t0 + 0.1 * p, rtol=1e-14)

    def test_equal_nets_are_a_fixed_point(self):
        agents = make_agents(1, RngStream(5), hidden=(4,))
        nets = agents[0]
        before = [q.copy() for q in nets.target_critic.params()]
        polyak_update(nets, tau=0.99)
        for b, a in zip(before, nets.target_critic.params()):
            np.testing.assert_allclose(a, b, rtol=1e-14)

    def test_targets_converge_geometrically(self):
        agents = make_agents(1, RngStream(6), hidden=(4,))
        nets = agents[0]
        nets.actor.weights[0] += 1.0
        for _ in range(500):
            polyak_update(nets, tau=0.9)
        gap = max(np.abs(t - p).max()
                  for t, p in zip(nets.target_actor.params(), nets.actor.params()))
        assert gap < 1e-12

    def test_tau_validated(self):
        agents = make_agents(1, RngStream(5), hidden=(4,))
        with pytest.raises(ValueError):
            polyak_update(agents[0], tau=1.0)


class TestReplayBuffer:
    def test_ring_overwrites_oldest(self):
        buf = ReplayBuffer(3, 1, 2)
        for r in range(5):
            buf.push(np.full((1, 2), r), np.array([r]), float(r),
                     np.zeros((1, 2)), done=False)
        assert buf.size == 3
        assert sorted(buf.rewards.tolist()) == [2.0, 3.0, 4.0]

    def test_sample_only_returns_stored_rows(self):
        buf = ReplayBuffer(10, 1, 2)
        for r in range(4):
            buf.push(np.zeros((1, 2)), np.array([0.0]), float(r),
                     np.zeros((1, 2)), done=(r == 3))
        batch = buf.sample(64, RngStream(7))
        assert set(batch["rewards"].tolist()) <= {0.0, 1.0, 2.0, 3.0}
        assert batch["states"].shape == (64, 1, 2)
        assert set(batch["dones"].tolist()) <= {0.0, 1.0}

    def test_sampling_reproducible(self):
        buf = ReplayBuffer(10, 1, 2)
        for r in range(6):
            buf.push(np.zeros((1, 2)), np.array([0.0]), float(r),
                     np.zeros((1, 2)), done=False)
        a = buf.sample(8, RngStream(8))["rewards"]
        b = buf.sample(8, RngStream(8))["rewards"]
        np.testing.assert_array_equal(a, b)

    def test_empty_buffer_raises(self):
        with pytest.raises(ValueError):
            ReplayBuffer(4, 1, 2).sample(1, RngStream(0))


class TestPolicyAllocator:
    def test_deterministic_without_noise(self):
        agents = make_agents(2, RngStream(9), hidden=(4,))
        world, _, _ = sample_world(TINY, RngStream(10).substream("env"))
        allocate = policy_allocator(agents, TINY)
        first = allocate(world, 0)
        second = allocate(world, 0)
        assert first == second
        assert all(0 <= l <= TINY.p_rows for l in first)

    def test_noise_perturbs_and_stays_in_range(self):
        agents = make_agents(2, RngStream(9), hidden=(4,))
        world, _, _ = sample_world(TINY, RngStream(10).substream("env"))
        clean = policy_allocator(agents, TINY)(world, 0)
        noisy_alloc = policy_allocator(agents, TINY, noise_rng=RngStream(11),
                                       noise_std=3.0)
        noisy = noisy_alloc(world, 0)
        assert noisy != clean
        for _ in range(20):
            loads = noisy_alloc(world, 0)
            assert all(0 <= l <= TINY.p_rows for l in loads)


SHORT_TRAIN = TrainConfig(max_iterations=3, episodes_per_iteration=2,
                          minibatch=4, warmup_iterations=1, replay_capacity=64)


class TestTrain:
    def test_zero_iterations(self):
        agents, curve = train(TINY, TrainConfig(max_iterations=0), RngStream(12))
        assert curve == []
        assert len(agents) == 2

    def test_curve_length_and_determinism(self):
        _, c1 = train(TINY, SHORT_TRAIN, RngStream(13))
        _, c2 = train(TINY, SHORT_TRAIN, RngStream(13))
        assert len(c1) == 3
        assert c1 == c2

    def test_updates_change_networks(self):
        fresh = make_agents(2, RngStream(13).substream("init"))
        trained, _ = train(TINY, SHORT_TRAIN, RngStream(13))
        moved = any(
            not np.array_equal(f, t)
            for f, t in zip(fresh[0].critic.params(), trained[0].critic.params())
        )
        assert moved

    def test_warmup_freezes_actors(self):
        cfg = TrainConfig(max_iterations=2, episodes_per_iteration=2,
                          minibatch=4, warmup_iterations=10, replay_capacity=64)
        fresh = make_agents(2, RngStream(14).substream("init"))
        trained, _ = train(TINY, cfg, RngStream(14))
        for f, t in zip(fresh[0].actor.params(), trained[0].actor.params()):
            np.testing.assert_array_equal(f, t)

    def test_progress_callback(self):
        seen = []
        train(TINY, SHORT_TRAIN, RngStream(15),
              progress=lambda it, val: seen.append((it, val)))
        assert [it for it, _ in seen] == [0, 1, 2]


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        agents, _ = train(TINY, SHORT_TRAIN, RngStream(16))
        path = str(tmp_path / "ckpt.json")
        save_checkpoint(path, agents, TINY)
        loaded = load_checkpoint(path)
        assert len(loaded) == 2
        x = RngStream(17).gen.normal(0, 1, state_dim(2))
        for a, b in zip(agents, loaded):
            np.testing.assert_array_equal(a.actor.forward(x), b.actor.forward(x))
            for name in ("actor", "critic", "target_actor", "target_critic"):
                for pa, pb in zip(getattr(a, name).params(), getattr(b, name).params()):
                    np.testing.assert_array_equal(pa, pb)

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format": "other", "agents": []}))
        with pytest.raises(ValueError):
            load_checkpoint(str(path))
