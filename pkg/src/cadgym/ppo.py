"""PPO training: GAE, clipped losses, rollouts, curriculum over targets.

Targets are visited in ascending face-count order.  The actor head and
action embedding are re-initialized for each target (the trunk carries
over); rollouts, minibatch order, and dropout all draw from a per-update
seed stream so a run can resume from a checkpoint bit-identically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .env import CadEnv, EnvConfig, TargetContext
from .errors import LengthMismatch
from .nn.policy import Adam, PolicyNet, checkpoint_load, \
    checkpoint_save
from .nn.tensor import Tensor, stack


@dataclass
class Transition:
    observation: object
    action: int
    log_prob: float
    reward: float
    value: float
    done: bool
    mask: np.ndarray


@dataclass
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    epochs: int = 4
    minibatch_size: int = 64
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    max_steps: int = 10
    env_count: int = 1
    lr: float = 3e-4
    episodes_per_update: int = 16
    episodes_per_target: int = 2000
    normalize_advantages: bool = True
    success_stop_rate: float = 0.9
    checkpoint_every: int = 0

    def __post_init__(self):
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must lie in [0, 1)")
        if not (0.0 < self.lam <= 1.0):
            raise ValueError("lambda must lie in (0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip epsilon must be positive")
        if self.epochs < 1 or self.minibatch_size < 1 or self.env_count < 1:
            raise ValueError("epochs, minibatch size and env count must be >= 1")


# ---------------------------------------------------------------------------
# advantage estimation
# ---------------------------------------------------------------------------

def compute_gae(rewards, values, dones, gamma, lam):
    """Generalized advantage estimates and returns over a flat trajectory.

    Episode ends (``dones``) cut the recursion; the bootstrap value after
    a terminal step is zero.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    if not (len(rewards) == len(values) == len(dones)):
        raise LengthMismatch("rewards, values and dones must align")
    n = len(rewards)
    adv = np.zeros(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        next_value = 0.0 if (dones[t] or t == n - 1) else values[t + 1]
        delta = rewards[t] + gamma * next_value - values[t]
        acc = delta + gamma * lam * (0.0 if dones[t] else acc)
        adv[t] = acc
    return adv, adv + values


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def ppo_losses(new_log_probs, new_values, entropies, batch, clip_eps,
               value_coef=0.5, entropy_coef=0.01):
    """Clipped surrogate, clipped value loss, entropy, and the total.

    ``new_log_probs``/``new_values``/``entropies`` are (B,) tensors from
    the current policy; ``batch`` carries numpy arrays ``advantages``,
    ``returns``, ``old_log_probs``, ``old_values``.
    """
    adv = Tensor(np.asarray(batch["advantages"], dtype=float))
    ratio = (new_log_probs - Tensor(batch["old_log_probs"])).exp()
    clipped_ratio = ratio.clip(1.0 - clip_eps, 1.0 + clip_eps)
    l_sur = (ratio * adv).minimum(clipped_ratio * adv).mean()

    old_v = np.asarray(batch["old_values"], dtype=float)
    returns = Tensor(np.asarray(batch["returns"], dtype=float))
    v_clipped = new_values.clip(Tensor(old_v - clip_eps), Tensor(old_v + clip_eps))
    l_val = ((v_clipped - returns) ** 2).maximum((new_values - returns) ** 2).mean()

    entropy = entropies.mean()
    total = -l_sur + value_coef * l_val - entropy_coef * entropy
    return l_sur, l_val, entropy, total


def _chosen_stats(net, obs, action, rng, training):
    log_probs, value = net.forward(obs.target_graph, obs.current_graph,
                                   obs.history, obs.mask, rng=rng,
                                   training=training)
    lp = log_probs[action]
    probs = log_probs.exp()
    entropy = -(probs * log_probs).sum()
    return lp, value.reshape(()), entropy


# ---------------------------------------------------------------------------
# rollouts
# ---------------------------------------------------------------------------

def collect_episodes(env, net, n_episodes, rng, max_steps, greedy=False):
    """Run complete episodes; returns (transitions, episode summaries)."""
    transitions, summaries = [], []
    for _ in range(n_episodes):
        obs = env.reset(0)
        total = 0.0
        final_iou = 0.0
        done = env.status != "running"
        while not done:
            idx, logp, value = net.act(obs.target_graph, obs.current_graph,
                                       obs.history, obs.mask, rng,
                                       greedy=greedy)
            next_obs, reward, done, info = env.step(idx)
            transitions.append(Transition(obs, idx, logp, reward, value, done,
                                          np.array(obs.mask)))
            total += reward
            if info.get("iou64") is not None:
                final_iou = info["iou64"]
            elif info.get("breakdown") is not None:
                final_iou = info["breakdown"].iou
            obs = next_obs
        summaries.append({
            "reward": total,
            "iou": final_iou,
            "success": env.status == "success",
            "steps": env.step_count,
        })
    return transitions, summaries


def collect_episodes_vector(envs, net, n_episodes, rng, max_steps):
    """Lockstep rollout over several environments of the same target.

    Each environment owns an episode at a time; all live environments are
    stepped each iteration (policy queries in env order, so a fixed seed
    gives a fixed batch for any schedule).  Completed episodes respawn
    until the quota is met.
    """
    n_envs = len(envs)
    per_env_tr = [[] for _ in range(n_envs)]
    summaries = []
    remaining = n_episodes
    obs = [env.reset(0) for env in envs]
    live = [i < remaining for i in range(n_envs)]
    totals = [0.0] * n_envs
    ious = [0.0] * n_envs
    started = min(n_envs, remaining)
    while any(live):
        for i, env in enumerate(envs):
            if not live[i]:
                continue
            o = obs[i]
            idx, logp, value = net.act(o.target_graph, o.current_graph,
                                       o.history, o.mask, rng)
            next_obs, reward, done, info = env.step(idx)
            per_env_tr[i].append(Transition(o, idx, logp, reward, value,
                                            done, np.array(o.mask)))
            totals[i] += reward
            if info.get("iou64") is not None:
                ious[i] = info["iou64"]
            elif info.get("breakdown") is not None:
                ious[i] = info["breakdown"].iou
            obs[i] = next_obs
            if done:
                summaries.append({
                    "reward": totals[i], "iou": ious[i],
                    "success": env.status == "success",
                    "steps": env.step_count,
                })
                if started < n_episodes:
                    started += 1
                    obs[i] = env.reset(0)
                    totals[i] = 0.0
                    ious[i] = 0.0
                else:
                    live[i] = False
    transitions = [t for chunk in per_env_tr for t in chunk]
    return transitions, summaries


# ---------------------------------------------------------------------------
# the trainer
# ---------------------------------------------------------------------------

def _update_seed(seed, target_idx, update_idx):
    return np.random.default_rng([seed, target_idx, update_idx])


def update_policy(net, adam, transitions, cfg, rng):
    """One PPO update over collected transitions; returns loss stats."""
    rewards = np.array([t.reward for t in transitions])
    values = np.array([t.value for t in transitions])
    dones = np.array([t.done for t in transitions])
    advantages, returns = compute_gae(rewards, values, dones, cfg.gamma, cfg.lam)
    if cfg.normalize_advantages and len(advantages) > 1:
        std = advantages.std()
        advantages = (advantages - advantages.mean()) / (std + 1e-8)

    old_log_probs = np.array([t.log_prob for t in transitions])
    n = len(transitions)
    stats = {"l_sur": 0.0, "l_val": 0.0, "entropy": 0.0, "batches": 0}
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for s in range(0, n, cfg.minibatch_size):
            idx = order[s:s + cfg.minibatch_size]
            lps, vals, ents = [], [], []
            for i in idx:
                t = transitions[i]
                lp, v, e = _chosen_stats(net, t.observation, t.action, rng,
                                         training=True)
                lps.append(lp)
                vals.append(v)
                ents.append(e)
            batch = {
                "advantages": advantages[idx],
                "returns": returns[idx],
                "old_log_probs": old_log_probs[idx],
                "old_values": values[idx],
            }
            l_sur, l_val, entropy, total = ppo_losses(
                stack(lps), stack(vals), stack(ents), batch, cfg.clip_eps,
                cfg.value_coef, cfg.entropy_coef)
            net.zero_grad()
            total.backward()
            adam.step()
            stats["l_sur"] += float(l_sur.data)
            stats["l_val"] += float(l_val.data)
            stats["entropy"] += float(entropy.data)
            stats["batches"] += 1
    b = max(stats["batches"], 1)
    return {k: v / b for k, v in stats.items() if k != "batches"}


def train_on_target(net, adam, ctx, ppo_cfg, env_cfg, seed, target_idx,
                    log_records, start_update=0, max_updates=None):
    """Train the (re-headed) policy on one target until budget or success."""
    envs = [CadEnv(ctx, env_cfg, encoder=net.enc_target)
            for _ in range(ppo_cfg.env_count)]
    episodes_done = 0
    update = start_update
    recent = []
    while episodes_done < ppo_cfg.episodes_per_target:
        if max_updates is not None and update - start_update >= max_updates:
            break
        rng = _update_seed(seed, target_idx, update)
        n_ep = min(ppo_cfg.episodes_per_update,
                   ppo_cfg.episodes_per_target - episodes_done)
        if len(envs) == 1:
            transitions, summaries = collect_episodes(envs[0], net, n_ep, rng,
                                                      ppo_cfg.max_steps)
        else:
            transitions, summaries = collect_episodes_vector(
                envs, net, n_ep, rng, ppo_cfg.max_steps)
        episodes_done += len(summaries)
        losses = update_policy(net, adam, transitions, ppo_cfg, rng)
        succ = float(np.mean([s["success"] for s in summaries]))
        record = {
            "target": ctx.target_id,
            "update": update,
            "episodes": episodes_done,
            "mean_reward": float(np.mean([s["reward"] for s in summaries])),
            "mean_iou": float(np.mean([s["iou"] for s in summaries])),
            "success_rate": succ,
            "l_sur": losses["l_sur"],
            "l_val": losses["l_val"],
            "entropy": losses["entropy"],
        }
        log_records.append(record)
        update += 1
        recent.append(succ)
        if len(recent) >= 2 and np.mean(recent[-2:]) >= ppo_cfg.success_stop_rate:
            break
    return update


def greedy_eval(net, ctx, env_cfg, episodes=1):
    """Greedy rollout(s); returns the best terminal IoU at success resolution."""
    env = CadEnv(ctx, env_cfg, encoder=net.enc_target)
    best = 0.0
    rng = np.random.default_rng(0)
    for _ in range(episodes):
        obs = env.reset(0)
        done = env.status != "running"
        while not done:
            idx, _, _ = net.act(obs.target_graph, obs.current_graph,
                                obs.history, obs.mask, rng, greedy=True)
            obs, _, done, info = env.step(idx)
        best = max(best, env.success_iou())
    return best


def train(ppo_cfg, contexts, net=None, policy_cfg=None, env_cfg=None, seed=0,
          out_dir=None, log_path=None, max_updates_per_target=None):
    """Curriculum training over targets ordered by ascending face count.

    ``contexts`` is a list of TargetContext (or objects with ``.graph``,
    ``.table``...).  Returns (net, log_records, per-target greedy IoUs).
    """
    env_cfg = env_cfg or EnvConfig()
    order = sorted(range(len(contexts)),
                   key=lambda i: (len(contexts[i].faces), i))
    log_records = []
    head_rng = np.random.default_rng([seed, 0xC0FFEE])
    results = {}
    adam = None
    update = 0
    for rank, ci in enumerate(order):
        ctx = contexts[ci]
        if net is None:
            net = PolicyNet(len(ctx.table), policy_cfg, seed=seed)
        else:
            net.new_head(len(ctx.table), head_rng)
        if adam is None:
            adam = Adam(list(net.named_parameters()), lr=ppo_cfg.lr)
        else:
            adam.rebind(list(net.named_parameters()))
        update = train_on_target(net, adam, ctx, ppo_cfg, env_cfg, seed, ci,
                                 log_records, start_update=update,
                                 max_updates=max_updates_per_target)
        results[ctx.target_id] = greedy_eval(net, ctx, env_cfg)
        if out_dir and ppo_cfg.checkpoint_every:
            path = os.path.join(out_dir, f"policy-{rank:03d}.cgym")
            save_training_state(path, net, adam, update)
    if log_path:
        with open(log_path, "w") as fh:
            for rec in log_records:
                fh.write(json.dumps(rec) + "\n")
    return net, log_records, results


def save_training_state(path, net, adam, update):
    arrays = dict(net.state_arrays())
    arrays.update(adam.state_arrays())
    arrays["meta.update"] = np.array([update], dtype=np.float64)
    arrays["meta.action_count"] = np.array([net.action_count], dtype=np.float64)
    checkpoint_save(path, arrays)


def load_training_state(path, net, adam=None):
    arrays = checkpoint_load(path)
    net_arrays = {k: v for k, v in arrays.items()
                  if not k.startswith(("opt.", "meta."))}
    net.load_state_arrays(net_arrays)
    if adam is not None:
        adam.load_state_arrays(arrays)
    return int(arrays.get("meta.update", np.zeros(1))[0])
