import numpy as np
import pytest

from cadgym.env import EnvConfig
from cadgym.errors import LengthMismatch
from cadgym.nn.policy import Adam, PolicyConfig, PolicyNet
from cadgym.nn.tensor import Tensor
from cadgym.ppo import (PpoConfig, collect_episodes, compute_gae,
                        load_training_state, ppo_losses, save_training_state,
                        train_on_target, update_policy)

SMALL_POLICY = PolicyConfig(embed_dim=8, heads=2, history_layers=1,
                            hidden_dim=16, dropout=0.1, max_history=8)
FAST_ENV = EnvConfig(cd_cloud_size=128, emd_cloud_size=32, max_steps=4)


def random_trajectories(rng, n):
    rewards = rng.normal(size=n)
    values = rng.normal(size=n)
    dones = rng.random(n) < 0.25
    dones[-1] = True
    return rewards, values, dones


class TestGae:
    def test_hand_recursion(self):
        adv, ret = compute_gae([1, 1], [0, 0], [False, True], 0.5, 1.0)
        np.testing.assert_allclose(adv, [1.5, 1.0])
        np.testing.assert_allclose(ret, [1.5, 1.0])

    def test_lambda_zero_is_td_error(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            r, v, d = random_trajectories(rng, n)
            adv, _ = compute_gae(r, v, d, 0.9, 1e-14)
            td = np.array([
                r[t] + 0.9 * (0.0 if (d[t] or t == n - 1) else v[t + 1]) - v[t]
                for t in range(n)])
            np.testing.assert_allclose(adv, td, atol=1e-9)

    def test_lambda_one_is_mc_minus_baseline(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            r, v, d = random_trajectories(rng, n)
            adv, _ = compute_gae(r, v, d, 0.85, 1.0)
            mc = np.zeros(n)
            acc = 0.0
            for t in range(n - 1, -1, -1):
                acc = r[t] + 0.85 * (0.0 if d[t] else acc)
                mc[t] = acc
            np.testing.assert_allclose(adv, mc - v, atol=1e-9)

    def test_returns_are_advantage_plus_value(self):
        rng = np.random.default_rng(2)
        r, v, d = random_trajectories(rng, 9)
        adv, ret = compute_gae(r, v, d, 0.97, 0.9)
        np.testing.assert_allclose(ret, adv + v)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            compute_gae([1, 2], [0], [True], 0.9, 0.9)


class TestLosses:
    def _batch(self, adv, old_lp=None, old_v=None, ret=None):
        n = len(adv)
        return {
            "advantages": np.asarray(adv, dtype=float),
            "old_log_probs": np.zeros(n) if old_lp is None else np.asarray(old_lp),
            "old_values": np.zeros(n) if old_v is None else np.asarray(old_v),
            "returns": np.zeros(n) if ret is None else np.asarray(ret),
        }

    def test_unit_ratio_gives_mean_advantage(self):
        batch = self._batch([1.0, 2.0, 3.0, 4.0])
        l_sur, _, _, _ = ppo_losses(Tensor(np.zeros(4)), Tensor(np.zeros(4)),
                                    Tensor(np.zeros(4)), batch, 0.2)
        assert float(l_sur.data) == pytest.approx(2.5)

    def test_clip_branch(self):
        batch = self._batch([1.0])
        l_sur, _, _, _ = ppo_losses(Tensor(np.log([1.5])), Tensor(np.zeros(1)),
                                    Tensor(np.zeros(1)), batch, 0.2)
        assert float(l_sur.data) == pytest.approx(1.2)

    def test_clipped_never_exceeds_unclipped(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 16))
            adv = rng.normal(size=n)
            new_lp = rng.normal(scale=0.5, size=n)
            old_lp = rng.normal(scale=0.5, size=n)
            batch = self._batch(adv, old_lp=old_lp)
            l_sur, _, _, _ = ppo_losses(Tensor(new_lp), Tensor(np.zeros(n)),
                                        Tensor(np.zeros(n)), batch, 0.2)
            ratio = np.exp(new_lp - old_lp)
            unclipped = float(np.mean(ratio * adv))
            assert float(l_sur.data) <= unclipped + 1e-12

    def test_value_loss_in_band_is_unclipped(self):
        batch = self._batch([0.0], old_v=[0.5], ret=[1.0])
        _, l_val, _, _ = ppo_losses(Tensor(np.zeros(1)),
                                    Tensor(np.array([0.6])),
                                    Tensor(np.zeros(1)), batch, 0.2)
        assert float(l_val.data) == pytest.approx(0.16)

    def test_value_loss_clip_max_form(self):
        # new value far outside the band: max picks the larger square
        batch = self._batch([0.0], old_v=[0.0], ret=[0.0])
        _, l_val, _, _ = ppo_losses(Tensor(np.zeros(1)),
                                    Tensor(np.array([1.0])),
                                    Tensor(np.zeros(1)), batch, 0.2)
        assert float(l_val.data) == pytest.approx(1.0)


class TestTraining:
    def test_lr_zero_keeps_parameters_bit_identical(self, cube_ctx):
        net = PolicyNet(len(cube_ctx.table), SMALL_POLICY, seed=0)
        adam = Adam(list(net.named_parameters()), lr=0.0)
        cfg = PpoConfig(episodes_per_update=2, episodes_per_target=2,
                        minibatch_size=8, epochs=1)
        before = {n: p.data.copy() for n, p in net.named_parameters()}
        log = []
        train_on_target(net, adam, cube_ctx, cfg, FAST_ENV, seed=0,
                        target_idx=0, log_records=log, max_updates=1)
        for name, p in net.named_parameters():
            assert np.array_equal(before[name], p.data), name

    def test_advantage_normalization_keeps_preference_order(self):
        """On a two-armed bandit batch, normalization preserves which action
        the surrogate pushes up."""
        adv = np.array([2.0, -1.0])
        norm = (adv - adv.mean()) / (adv.std() + 1e-8)
        assert (norm[0] > norm[1]) == (adv[0] > adv[1])

    def test_curriculum_order_sorts_by_face_count(self, small_corpus):
        from cadgym.dataset import record_solid
        from cadgym.env import TargetContext
        recs = sorted(small_corpus, key=lambda r: r.id)[:3]
        contexts = [TargetContext(record_solid(r), target_id=r.id)
                    for r in recs]
        counts = [len(c.faces) for c in contexts]
        order = sorted(range(len(contexts)),
                       key=lambda i: (len(contexts[i].faces), i))
        assert [counts[i] for i in order] == sorted(counts)

    def test_resume_is_bit_identical(self, cube_ctx, tmp_path):
        cfg = PpoConfig(episodes_per_update=3, episodes_per_target=12,
                        minibatch_size=8, epochs=2, lr=1e-3,
                        success_stop_rate=2.0)

        def fresh():
            net = PolicyNet(len(cube_ctx.table), SMALL_POLICY, seed=5)
            adam = Adam(list(net.named_parameters()), lr=cfg.lr)
            return net, adam

        # run A: two updates straight through
        net_a, adam_a = fresh()
        train_on_target(net_a, adam_a, cube_ctx, cfg, FAST_ENV, seed=5,
                        target_idx=0, log_records=[], max_updates=2)

        # run B: one update, checkpoint, restore into fresh nets, one more
        net_b, adam_b = fresh()
        train_on_target(net_b, adam_b, cube_ctx, cfg, FAST_ENV, seed=5,
                        target_idx=0, log_records=[], max_updates=1)
        path = str(tmp_path / "resume.cgym")
        save_training_state(path, net_b, adam_b, update=1)

        net_c, adam_c = fresh()
        start = load_training_state(path, net_c, adam_c)
        assert start == 1
        train_on_target(net_c, adam_c, cube_ctx, cfg, FAST_ENV, seed=5,
                        target_idx=0, log_records=[], start_update=start,
                        max_updates=1)

        for (name, pa), (_, pc) in zip(net_a.named_parameters(),
                                       net_c.named_parameters()):
            assert np.array_equal(pa.data, pc.data), name

    def test_log_record_fields(self, cube_ctx):
        net = PolicyNet(len(cube_ctx.table), SMALL_POLICY, seed=0)
        adam = Adam(list(net.named_parameters()), lr=1e-3)
        cfg = PpoConfig(episodes_per_update=2, episodes_per_target=2,
                        minibatch_size=8, epochs=1)
        log = []
        train_on_target(net, adam, cube_ctx, cfg, FAST_ENV, seed=0,
                        target_idx=0, log_records=log, max_updates=1)
        assert log
        for key in ("update", "episodes", "mean_reward", "mean_iou",
                    "success_rate", "l_sur", "l_val", "entropy"):
            assert key in log[0]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PpoConfig(gamma=1.0)
        with pytest.raises(ValueError):
            PpoConfig(lam=0.0)
        with pytest.raises(ValueError):
            PpoConfig(clip_eps=0.0)
