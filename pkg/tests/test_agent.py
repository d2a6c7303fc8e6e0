"""Actor/critic networks, replay, reward shaping, and the TD3 update rule."""

import copy
import logging

import numpy as np
import pytest

from cogdrive.agent import (FLAT_DIM, N_TOKENS, TOKEN_GRID, CriticNet,
                            PolicyNet, ReplayBuffer, RewardWeights, Td3Agent,
                            Td3Config, TokenGrid, Transition, compose_reward,
                            copy_params, expert_step_action, gap_reward,
                            polyak_update, scripted_expert, td3_update)
from cogdrive.reward import normalize_state
from cogdrive.sim import EmergencyBrakingSim, ScenarioConfig
from cogdrive.sim.world import StepResult, TTC_MAX


def random_states(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 3, size=(n, 3, 64, 64)).astype(np.uint8)


def expert_rollout(seed):
    """One scripted-controller episode as [(state, action, StepResult), ...]."""
    sim = EmergencyBrakingSim(ScenarioConfig("emergency_braking", seed=seed))
    state = sim.reset()
    prev = None
    rows = []
    while True:
        action = expert_step_action(prev)
        res = sim.step(action)
        rows.append((state, action, res))
        state = res.next_state
        prev = res
        if res.done:
            return rows


def step_result(collided=False, idle=False, gap_time=2.0, has_lead=True,
                ttc_truth=5.0):
    return StepResult(next_state=np.zeros((3, 64, 64), dtype=np.uint8),
                      collided=collided, idle=idle, ttc_truth=ttc_truth,
                      gap_time=gap_time, route_progress=0.5, done=False,
                      has_lead=has_lead, gap_m=gap_time * 5.0, speed=5.0)


def all_values(net):
    return [p.value.copy() for _, p in net.named_params()]


def nets_equal(net_a, net_b):
    return all(np.array_equal(pa.value, pb.value)
               for (_, pa), (_, pb) in zip(net_a.named_params(),
                                           net_b.named_params()))


class TestPolicyNet:
    def test_head_shapes_and_ranges(self):
        pol = PolicyNet(np.random.default_rng(0))
        action, ttc = pol.forward(normalize_state(random_states(6)))
        assert action.shape == (6, 1) and ttc.shape == (6, 1)
        assert np.all(action >= -1.0) and np.all(action <= 1.0)
        assert np.all(ttc >= 0.0) and np.all(ttc <= TTC_MAX)

    def test_ranges_hold_under_extreme_weights(self):
        pol = PolicyNet(np.random.default_rng(1))
        for _, p in pol.named_params():
            p.value *= 50.0
        action, ttc = pol.forward(normalize_state(random_states(4, seed=2)))
        assert np.all(np.abs(action) <= 1.0)
        assert np.all((ttc >= 0.0) & (ttc <= TTC_MAX))

    def test_attention_rows_are_distributions(self):
        pol = PolicyNet(np.random.default_rng(2))
        pol.forward(normalize_state(random_states(3, seed=3)))
        weights = pol.last_attention
        assert weights.shape == (3, N_TOKENS, N_TOKENS)
        np.testing.assert_allclose(weights.sum(axis=2), 1.0, atol=1e-9)
        assert np.all(weights >= 0.0)

    def test_zeroed_heads_hit_activation_midpoints(self):
        pol = PolicyNet(np.random.default_rng(3))
        for head in (pol.action_head, pol.ttc_head):
            for p in head.params():
                p.value[...] = 0.0
        action, ttc = pol.forward(normalize_state(random_states(2, seed=4)))
        assert np.all(action == 0.0)            # tanh(0)
        assert np.all(ttc == TTC_MAX / 2.0)     # 5 * sigmoid(0)

    def test_rejects_bad_state_shapes(self):
        pol = PolicyNet(np.random.default_rng(4))
        with pytest.raises(ValueError):
            pol.forward(np.zeros((3, 64, 64)))          # missing batch dim
        with pytest.raises(ValueError):
            pol.forward(np.zeros((2, 1, 64, 64)))
        with pytest.raises(ValueError):
            pol.backward()                               # no head gradient

    def test_act_returns_scalar_in_range(self):
        pol = PolicyNet(np.random.default_rng(5))
        a = pol.act(random_states(1, seed=6)[0])
        assert isinstance(a, float) and -1.0 <= a <= 1.0

    def test_param_names_unique_and_prefixed(self):
        pol = PolicyNet(np.random.default_rng(6))
        names = [n for n, _ in pol.named_params()]
        assert len(names) == len(set(names))
        prefixes = {n.split(".")[0] for n in names}
        assert prefixes == {"encoder", "attention", "action_head", "ttc_head"}

    def test_token_grid_roundtrip(self):
        grid = TokenGrid()
        x = np.random.default_rng(7).normal(size=(2, 32, 4, 4))
        tokens = grid.forward(x)
        assert tokens.shape == (2, N_TOKENS, 32)
        np.testing.assert_array_equal(grid.backward(tokens), x)

    def test_dual_head_backward_matches_finite_differences(self):
        pol = PolicyNet(np.random.default_rng(8))
        x = normalize_state(random_states(2, seed=9))

        def loss():
            a, t = pol.forward(x)
            return float(a.mean() + 0.5 * (t ** 2).mean())

        a, t = pol.forward(x)
        n = a.shape[0]
        for _, p in pol.named_params():
            p.zero_grad()
        pol.backward(d_action=np.full_like(a, 1.0 / n), d_ttc=t / n)

        probes = [
            ("encoder.0.kernels", (0, 0, 0, 0)),
            ("encoder.6.kernels", (1, 2, 0, 1)),
            ("attention.wq", (0, 0)),
            ("attention.wv", (3, 5)),
            ("action_head.0.weight", (10, 4)),
            ("ttc_head.2.weight", (7, 0)),
        ]
        params = dict(pol.named_params())
        eps = 1e-6
        for name, idx in probes:
            p = params[name]
            orig = p.value[idx]
            p.value[idx] = orig + eps
            hi = loss()
            p.value[idx] = orig - eps
            lo = loss()
            p.value[idx] = orig
            fd = (hi - lo) / (2.0 * eps)
            np.testing.assert_allclose(p.grad[idx], fd, rtol=1e-4, atol=1e-6,
                                       err_msg=name)


class TestCriticNet:
    def test_q_shape_and_action_validation(self):
        critic = CriticNet(np.random.default_rng(0))
        s = normalize_state(random_states(4, seed=1))
        q = critic.forward(s, np.zeros((4, 1)))
        assert q.shape == (4, 1) and np.all(np.isfinite(q))
        with pytest.raises(ValueError):
            critic.forward(s, np.zeros(4))
        with pytest.raises(ValueError):
            critic.forward(s, np.zeros((3, 1)))

    def test_backward_shapes(self):
        critic = CriticNet(np.random.default_rng(1))
        s = normalize_state(random_states(3, seed=2))
        q = critic.forward(s, np.full((3, 1), 0.25))
        d_state, d_action = critic.backward(np.ones_like(q))
        assert d_state.shape == (3, 3, 64, 64)
        assert d_action.shape == (3, 1)

    def test_action_gradient_matches_finite_differences(self):
        critic = CriticNet(np.random.default_rng(2))
        s = normalize_state(random_states(3, seed=3))
        a = np.array([[0.2], [-0.7], [0.9]])
        q = critic.forward(s, a)
        _, d_action = critic.backward(np.full_like(q, 1.0 / len(a)))
        eps = 1e-6
        for i in range(len(a)):
            bump = a.copy()
            bump[i, 0] += eps
            hi = float(critic.forward(s, bump).mean())
            bump[i, 0] -= 2.0 * eps
            lo = float(critic.forward(s, bump).mean())
            fd = (hi - lo) / (2.0 * eps)
            np.testing.assert_allclose(d_action[i, 0], fd, rtol=1e-5,
                                       atol=1e-8)

    def test_nonfinite_q_is_caught(self):
        critic = CriticNet(np.random.default_rng(3))
        for p in critic.mlp.params():
            p.value[...] = 1e308
        with np.errstate(over="ignore"), pytest.raises(FloatingPointError):
            critic.forward(normalize_state(random_states(1, seed=4)),
                           np.ones((1, 1)))


class TestCopyAndPolyak:
    def test_copy_params_makes_nets_identical(self):
        a = PolicyNet(np.random.default_rng(0))
        b = PolicyNet(np.random.default_rng(1))
        assert not nets_equal(a, b)
        copy_params(a, b)
        assert nets_equal(a, b)

    def test_copy_params_rejects_mismatched_topology(self):
        with pytest.raises(ValueError):
            copy_params(PolicyNet(np.random.default_rng(0)),
                        CriticNet(np.random.default_rng(1)))

    def test_polyak_exact_values(self):
        src = PolicyNet(np.random.default_rng(2))
        dst = copy.deepcopy(src)
        for _, p in src.named_params():
            p.value[...] = 1.0
        for _, p in dst.named_params():
            p.value[...] = 0.0
        polyak_update(src, dst, tau=0.25)
        assert all(np.all(p.value == 0.25) for _, p in dst.named_params())
        polyak_update(src, dst, tau=0.25)
        assert all(np.all(p.value == 0.4375) for _, p in dst.named_params())

    def test_polyak_tau_one_copies(self):
        src = PolicyNet(np.random.default_rng(3))
        dst = PolicyNet(np.random.default_rng(4))
        polyak_update(src, dst, tau=1.0)
        assert nets_equal(src, dst)


class TestReplayBuffer:
    @staticmethod
    def synth_episodes(lengths, seed=0):
        """Episodes whose consecutive stacks share frames, like rollouts."""
        rng = np.random.default_rng(seed)
        transitions = []
        k = 0
        for length in lengths:
            frames = rng.integers(0, 3, size=(length + 3, 64, 64)) \
                .astype(np.uint8)
            for t in range(length):
                transitions.append(Transition(
                    state=frames[t:t + 3], action=0.001 * k, reward=float(k),
                    next_state=frames[t + 1:t + 4], done=(t == length - 1),
                    ttc_truth=float(k % 5)))
                k += 1
        return transitions

    def test_sampled_rows_match_naive_storage(self):
        transitions = self.synth_episodes([5, 3, 7], seed=1)
        naive = [(t.state.copy(), t.action, t.reward, t.next_state.copy(),
                  t.done, t.ttc_truth) for t in transitions]
        buf = ReplayBuffer(capacity=100, seed=2)
        for t in transitions:
            buf.add(t)
        assert len(buf) == 15
        batch = buf.sample(64)
        assert batch["state"].dtype == np.uint8
        for row in range(64):
            k = int(round(batch["reward"][row, 0]))
            state, action, reward, nxt, done, ttc = naive[k]
            np.testing.assert_array_equal(batch["state"][row], state)
            np.testing.assert_array_equal(batch["next_state"][row], nxt)
            assert batch["action"][row, 0] == action
            assert batch["done"][row, 0] == float(done)
            assert batch["ttc_truth"][row, 0] == ttc

    def test_frames_stored_once_per_step(self):
        buf = ReplayBuffer(capacity=100, seed=0)
        for t in self.synth_episodes([6, 4], seed=3):
            buf.add(t)
        # Each episode costs its three initial frames plus one per step.
        assert len(buf._frames) == (6 + 3) + (4 + 3)

    def test_ring_eviction_keeps_latest(self):
        buf = ReplayBuffer(capacity=6, seed=4)
        for t in self.synth_episodes([4, 4], seed=5):
            buf.add(t)
        assert len(buf) == 6
        batch = buf.sample(200)
        kept = {int(round(r)) for r in batch["reward"][:, 0]}
        assert kept <= {2, 3, 4, 5, 6, 7}
        assert kept >= {2, 7}    # oldest survivor and newest both reachable

    def test_same_seed_sampling_is_deterministic(self):
        transitions = self.synth_episodes([8], seed=6)
        bufs = [ReplayBuffer(50, seed=9) for _ in range(2)]
        for buf in bufs:
            for t in transitions:
                buf.add(t)
        batch_a = bufs[0].sample(16)
        batch_b = bufs[1].sample(16)
        for key in batch_a:
            np.testing.assert_array_equal(batch_a[key], batch_b[key])

    def test_validation(self):
        frames = np.zeros((3, 64, 64), dtype=np.uint8)
        with pytest.raises(ValueError):
            Transition(frames, 0.0, float("nan"), frames, False, 1.0)
        with pytest.raises(ValueError):
            Transition(frames, 0.0, 0.0, frames, False, -0.1)
        with pytest.raises(ValueError):
            Transition(frames, 0.0, 0.0, frames, False, TTC_MAX + 0.1)
        with pytest.raises(ValueError):
            Transition(np.zeros((2, 64, 64), dtype=np.uint8), 0.0, 0.0,
                       frames, False, 1.0)
        with pytest.raises(ValueError):
            ReplayBuffer(0)
        with pytest.raises(ValueError):
            ReplayBuffer(4).sample(1)


class TestRewards:
    def test_on_target_gap_with_cognitive_alarm(self):
        total, comps = compose_reward(RewardWeights(), step_result(), 0.8)
        assert abs(comps["cog"] - (-0.8)) < 1e-12
        assert comps["collide"] == 0.0 and comps["idle"] == 0.0
        assert abs(comps["gap"] - 1.0) < 1e-12
        assert abs(total - 0.2) < 1e-12

    def test_collision_and_idle_penalties(self):
        total, comps = compose_reward(
            RewardWeights(), step_result(collided=True, idle=True), 0.0)
        assert comps["collide"] == -100.0
        assert comps["idle"] == -1.0
        assert abs(total - (-100.0 - 1.0 + 1.0)) < 1e-12

    def test_gap_reward_profile(self):
        assert gap_reward(2.0) == 1.0
        assert gap_reward(0.0) == 0.0
        assert gap_reward(4.0) == 0.0
        assert gap_reward(6.0) == -1.0
        assert gap_reward(99.0) == -1.0          # clamped far-gap penalty
        assert gap_reward(99.0, has_lead=False) == 0.0

    def test_no_lead_contributes_zero_gap_term(self):
        _, comps = compose_reward(
            RewardWeights(), step_result(gap_time=99.0, has_lead=False), 0.0)
        assert comps["gap"] == 0.0

    def test_beta_zero_reduces_to_environment_reward_bitwise(self):
        weights = RewardWeights(beta=0.0)
        step = step_result(gap_time=3.3, idle=True)
        totals = {compose_reward(weights, step, y)[0]
                  for y in (0.0, 0.37, 0.99, 1.0)}
        assert len(totals) == 1                  # y_hat cannot leak through
        env_only = (weights.r_collide * 0.0 + weights.omega * weights.r_idle
                    + gap_reward(3.3))
        assert totals.pop() == -1.0 + gap_reward(3.3) == env_only

    def test_y_hat_validation(self):
        with pytest.raises(ValueError):
            compose_reward(RewardWeights(), step_result(), 1.5)
        with pytest.raises(ValueError):
            compose_reward(RewardWeights(), step_result(), -0.1)
        with pytest.raises(ValueError):
            RewardWeights(gap_target=0.0)


def fill_buffer(rows, weights, capacity=2000, seed=1, limit=None):
    buf = ReplayBuffer(capacity, seed=seed)
    for state, action, res in rows[:limit]:
        total, _ = compose_reward(weights, res, 0.0)
        buf.add(Transition(state, action, total, res.next_state, res.done,
                           res.ttc_truth))
    return buf


class TestTd3:
    def test_targets_start_equal_to_mains(self):
        agent = Td3Agent(Td3Config(seed=0))
        assert nets_equal(agent.actor, agent.actor_target)
        assert nets_equal(agent.critic1, agent.critic1_target)
        assert nets_equal(agent.critic2, agent.critic2_target)
        assert not nets_equal(agent.critic1, agent.critic2)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            Td3Config(gamma=1.0)
        with pytest.raises(ValueError):
            Td3Config(polyak_tau=0.0)
        with pytest.raises(ValueError):
            Td3Config(policy_delay=0)
        with pytest.raises(ValueError):
            Td3Config(actor_lr=0.0)

    def test_update_schedule_and_polyak(self):
        cfg = Td3Config(batch_size=8, seed=1)
        agent = Td3Agent(cfg)
        rows = expert_rollout(seed=11)
        buf = fill_buffer(rows, RewardWeights(beta=0.0), limit=40)

        actor_before = all_values(agent.actor)
        init_target = all_values(agent.critic1_target)
        report1 = agent.update(buf)

        # Non-delayed step: critics moved, actor and every target untouched.
        assert report1.policy_loss is None and report1.total is None
        assert len(report1.critic_losses) == 2
        for (_, p), v in zip(agent.actor.named_params(), actor_before):
            np.testing.assert_array_equal(p.value, v)
        for (_, p), v in zip(agent.critic1_target.named_params(),
                             init_target):
            np.testing.assert_array_equal(p.value, v)

        target_before = all_values(agent.critic1_target)
        report2 = agent.update(buf)

        # Delayed step: actor moved, report complete, targets nudged by tau.
        assert report2.policy_loss is not None
        assert report2.total == (report2.policy_loss
                                 + cfg.alpha_ttc * report2.ttc_mse)
        assert any(not np.array_equal(p.value, v) for (_, p), v
                   in zip(agent.actor.named_params(), actor_before))
        tau = cfg.polyak_tau
        for (_, pt), old, (_, pc) in zip(
                agent.critic1_target.named_params(), target_before,
                agent.critic1.named_params()):
            np.testing.assert_array_equal(pt.value,
                                          old * (1.0 - tau) + tau * pc.value)

    def test_skips_when_buffer_short(self, caplog):
        agent = Td3Agent(Td3Config(batch_size=8, seed=2))
        buf = ReplayBuffer(100, seed=0)
        with caplog.at_level(logging.WARNING):
            assert agent.update(buf) is None
        assert "empty" in caplog.text
        caplog.clear()
        for t in TestReplayBuffer.synth_episodes([3], seed=1):
            buf.add(t)
        with caplog.at_level(logging.WARNING):
            assert agent.update(buf) is None
        assert "3 < batch 8" in caplog.text

    def test_same_seed_updates_are_identical(self):
        rows = expert_rollout(seed=12)
        agents = []
        for _ in range(2):
            agent = Td3Agent(Td3Config(batch_size=8, seed=5))
            buf = fill_buffer(rows, RewardWeights(beta=0.0), seed=7, limit=30)
            for _ in range(4):
                agent.update(buf)
            agents.append(agent)
        assert nets_equal(agents[0].actor, agents[1].actor)
        assert nets_equal(agents[0].critic1, agents[1].critic1)
        assert nets_equal(agents[0].actor_target, agents[1].actor_target)
        state = rows[0][0]
        assert agents[0].act(state, explore=True) \
            == agents[1].act(state, explore=True)

    def test_exploration_noise_comes_from_own_stream(self):
        agent = Td3Agent(Td3Config(seed=3))
        for p in agent.actor.action_head.params():
            p.value[...] = 0.0            # greedy = 0, noise cannot clip
        state = random_states(1, seed=13)[0]
        greedy = agent.act(state)
        noisy = [agent.act(state, explore=True) for _ in range(5)]
        assert len(set(noisy)) == 5
        assert all(-1.0 <= a <= 1.0 for a in noisy)
        assert agent.act(state) == greedy        # greedy path is stateless

    def test_critic_loss_falls_on_fixed_buffer(self):
        agent = Td3Agent(Td3Config(batch_size=16, seed=4))
        rows = expert_rollout(seed=14)
        buf = fill_buffer(rows, RewardWeights(beta=0.0), limit=150)
        losses = [agent.update(buf).critic_losses[0] for _ in range(200)]
        early = float(np.mean(losses[:10]))
        late = float(np.mean(losses[-10:]))
        assert late <= 0.5 * early, (early, late)


class TestScriptedExpert:
    def test_rule_values(self):
        assert scripted_expert(2.0, 5.0, 3.0) == 0.0
        assert scripted_expert(4.0, 5.0, 3.0) == 1.0
        assert scripted_expert(3.0, 5.0, 3.0) == 0.5
        assert scripted_expert(0.0, 5.0, 3.0) == -1.0
        assert scripted_expert(10.0, 1.49, 3.0) == -1.0   # TTC overrides gap
        assert scripted_expert(2.0, 1.5, 3.0) == 0.0      # threshold exclusive

    def test_adapter_accelerates_from_rest(self):
        assert expert_step_action(None) == 1.0

    def test_hundred_episodes_without_collision(self):
        for seed in range(100):
            rows = expert_rollout(seed)
            assert not any(res.collided for _, _, res in rows), seed
            assert rows[-1][2].done
