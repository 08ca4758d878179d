"""Driving the environment by hand: reset, masked steps, mark/revert.

The action mask enforces the boolean-op/state protocol (an opener only
on the empty state); stepping a masked action is a penalized no-op.
Mark/revert snapshots are cheap because solids are immutable trees.

Run:  python demos/05_gym_episode.py
"""

import numpy as np

from cadgym.env import CadEnv, EnvConfig, TargetContext
from cadgym.fixtures import cube_with_pocket

ctx = TargetContext(cube_with_pocket(), target_id="pocket")
env = CadEnv(ctx, EnvConfig(cd_cloud_size=256, emd_cloud_size=64))
obs = env.reset(seed=0)
print(f"target has {obs.target_graph.num_nodes} faces, "
      f"{len(ctx.table)} actions, {int(np.sum(obs.mask))} valid at start")

# a masked action is rejected without touching the state
masked = int(np.flatnonzero(np.asarray(obs.mask) == 0)[0])
before = env.state_hash()
_, reward, done, info = env.step(masked)
print(f"masked step: reward={reward}, invalid={info['invalid']}, "
      f"state unchanged={env.state_hash() == before}")

# explore with mark/revert: try every opener, keep the best
mark = env.mark()
best = (-1.0, None)
for idx in np.flatnonzero(obs.mask):
    _, r, done, info = env.step(int(idx))
    score = info["breakdown"].iou
    if score > best[0]:
        best = (score, int(idx))
    env.revert(mark)
print(f"best opener is action {best[1]} with shaping IoU {best[0]:.3f}")

obs, reward, done, info = env.step(best[1])
print(f"took it: reward={reward:.3f}, status={info['status']}")
while not done:
    idx = int(np.flatnonzero(obs.mask)[0])
    obs, reward, done, info = env.step(idx)
    print(f"step {info['step']}: reward={reward:.3f}, status={info['status']}")
