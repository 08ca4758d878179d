"""The training environment: reset/step/valid-actions with mark/revert.

Episodes start from the empty solid and apply face-indexed actions from
the target's frozen action table.  Rewards are shaped as the difference
of the composite similarity between consecutive states (plus a terminal
bonus), with success decided by voxel IoU against the target at the
success resolution.
"""

from __future__ import annotations

import hashlib
import multiprocessing as mp
from dataclasses import dataclass

import numpy as np

from .actions import dynamic_mask, enumerate_valid_actions
from .brep import build_graph, extract_faces
from .config import FEATURE_WIDTH
from .errors import EpisodeFinished, InvalidMark, UnknownTarget
from .geometry.solid import Solid
from .nn.layers import GraphEncoder
from .ops import apply
from .rewards import (DEFAULT_WEIGHTS, RewardBreakdown, composite_reward,
                      iou, neural_reward, sample_point_cloud)

RUNNING = "running"
SUCCESS = "success"
TRUNCATED = "truncated"
DEADLOCKED = "deadlocked"


@dataclass
class EnvConfig:
    max_steps: int = 10
    success_iou: float = 0.98
    success_resolution: int = 64
    shaping_resolution: int = 32
    invalid_penalty: float = -0.1
    terminal_bonus: float = 1.0
    reward_weights: tuple = DEFAULT_WEIGHTS
    cd_cloud_size: int = 1024
    emd_cloud_size: int = 256
    incremental_reward: bool = True
    encoder_seed: int = 7


@dataclass
class Observation:
    current_graph: object
    target_graph: object
    history: list
    history_valid: list
    mask: np.ndarray

    def to_payload(self):
        return {
            "current": self.current_graph.to_payload(),
            "target": self.target_graph.to_payload(),
            "history": [int(a) for a in self.history],
            "mask": [int(b) for b in self.mask],
        }

    def checksum(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.current_graph.node_features).tobytes())
        h.update(np.ascontiguousarray(self.target_graph.node_features).tobytes())
        h.update(np.ascontiguousarray(self.current_graph.adj_normalized).tobytes())
        h.update(bytes(np.asarray(self.mask, dtype=np.int8)))
        h.update(repr(list(self.history)).encode())
        return h.hexdigest()


class TargetContext:
    """Everything derived once per target: faces, graph, action table, caches."""

    def __init__(self, solid, target_id="target"):
        if solid.is_empty:
            raise UnknownTarget("target solid is empty")
        self.target_id = target_id
        self.solid = solid
        self.faces = extract_faces(solid)
        self.faces_by_id = {f.face_id: f for f in self.faces}
        self.graph = build_graph(self.faces, solid)
        self.table = enumerate_valid_actions(solid, self.faces)
        self._occupancy = {}
        self._clouds = {}
        self.geom_cache = {}
        self.iou_cache = {}

    def occupancy(self, lo, hi, resolution):
        key = (resolution, tuple(np.round(lo, 9)), tuple(np.round(hi, 9)))
        if key not in self._occupancy:
            if len(self._occupancy) > 8:
                self._occupancy.clear()
            from .rewards import _occupancy
            self._occupancy[key] = _occupancy(self.solid, np.asarray(lo),
                                              np.asarray(hi), resolution)
        return self._occupancy[key]

    def cloud(self, size):
        if size not in self._clouds:
            self._clouds[size] = sample_point_cloud(self.solid, size,
                                                    faces=self.faces)
        return self._clouds[size]


class CadEnv:
    """Single-owner environment over one target."""

    def __init__(self, ctx: TargetContext, config: EnvConfig = None,
                 encoder=None):
        self.ctx = ctx
        self.config = config or EnvConfig()
        self.encoder = encoder or GraphEncoder(
            FEATURE_WIDTH, 256, 256,
            np.random.default_rng(self.config.encoder_seed))
        self.current = Solid.empty()
        self.history = []
        self.step_count = 0
        self.status = RUNNING
        self._marks = {}
        self._next_mark = 0
        self._potential = None
        self._current_graph = None
        self._current_faces = None
        self._last_breakdown = None
        self._seed = None

    def set_reward_encoder(self, encoder):
        self.encoder = encoder

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed=0):
        self.current = Solid.empty()
        self.history = []
        self.step_count = 0
        self.status = RUNNING
        self._marks = {}
        self._next_mark = 0
        self._seed = seed
        self._refresh_current()
        self._potential = self._composite().composite
        obs = self.observation()
        if not np.any(obs.mask):
            self.status = DEADLOCKED
        return obs

    def _refresh_current(self):
        self._current_faces = extract_faces(self.current)
        self._current_graph = build_graph(self._current_faces, self.current)

    def _composite(self):
        """Reward terms for the current state.

        Geometric terms are cached per (state, settings); the neural term
        is always fresh because the encoder may train online.
        """
        cfg = self.config
        key = (self.current.structural_hash(), cfg.shaping_resolution,
               cfg.cd_cloud_size, cfg.emd_cloud_size)
        cached = self.ctx.geom_cache.get(key)
        if cached is None:
            lo, hi = self._shared_bbox()
            occ = None
            if lo is not None:
                occ = self.ctx.occupancy(lo, hi, cfg.shaping_resolution)
            br = composite_reward(
                self.current, self.ctx.solid, self.encoder,
                weights=cfg.reward_weights, resolution=cfg.shaping_resolution,
                cd_size=cfg.cd_cloud_size, emd_size=cfg.emd_cloud_size,
                g_faces=self._current_faces, g_graph=self._current_graph,
                s_graph=self.ctx.graph,
                s_clouds={cfg.cd_cloud_size: self.ctx.cloud(cfg.cd_cloud_size),
                          cfg.emd_cloud_size: self.ctx.cloud(cfg.emd_cloud_size)},
                target_occupancy=occ)
            if len(self.ctx.geom_cache) > 4096:
                self.ctx.geom_cache.clear()
            self.ctx.geom_cache[key] = (br.iou, br.mmd, br.nc)
            self._last_breakdown = br
            return br
        i, m, n = cached
        nr = neural_reward(self.current, self.ctx.solid, self.encoder,
                           g_graph=self._current_graph, s_graph=self.ctx.graph)
        a, b, gw, d = cfg.reward_weights
        br = RewardBreakdown(iou=i, mmd=m, nc=n, nr=nr,
                             composite=a * i + b * m + gw * n + d * nr,
                             weights=tuple(cfg.reward_weights))
        self._last_breakdown = br
        return br

    def _shared_bbox(self):
        if self.current.is_empty:
            return None, None
        lo = np.minimum(self.current.bbox[0], self.ctx.solid.bbox[0])
        hi = np.maximum(self.current.bbox[1], self.ctx.solid.bbox[1])
        return lo, hi

    def success_iou(self):
        """IoU against the target at the success resolution."""
        key = (self.current.structural_hash(), self.config.success_resolution)
        if key in self.ctx.iou_cache:
            return self.ctx.iou_cache[key]
        lo, hi = self._shared_bbox()
        occ = self.ctx.occupancy(lo, hi, self.config.success_resolution) \
            if lo is not None else None
        value = iou(self.current, self.ctx.solid,
                    self.config.success_resolution, target_occupancy=occ)
        if len(self.ctx.iou_cache) > 1024:
            self.ctx.iou_cache.clear()
        self.ctx.iou_cache[key] = value
        return value

    # -- the contract -----------------------------------------------------------

    def valid_actions(self):
        return dynamic_mask(self.ctx.table, self.current)

    def observation(self):
        return Observation(
            current_graph=self._current_graph,
            target_graph=self.ctx.graph,
            history=list(self.history),
            history_valid=[1] * len(self.history),
            mask=self.valid_actions(),
        )

    def step(self, action_index):
        if self.status != RUNNING:
            raise EpisodeFinished(f"episode is {self.status}")
        cfg = self.config
        action_index = int(action_index)
        mask = self.valid_actions()
        info = {"invalid": False, "status": self.status}
        if action_index < 0 or action_index >= len(self.ctx.table) \
                or not mask[action_index]:
            info["invalid"] = True
            return self.observation(), cfg.invalid_penalty, False, info

        spec = self.ctx.table.spec(action_index)
        self.current = apply(self.current, spec)
        self.history.append(action_index)
        self.step_count += 1
        self._refresh_current()

        breakdown = self._composite()
        if cfg.incremental_reward:
            reward = breakdown.composite - self._potential
        else:
            reward = breakdown.composite
        self._potential = breakdown.composite

        done = False
        iou64 = None
        if breakdown.iou >= cfg.success_iou - 0.05:
            iou64 = self.success_iou()
            if iou64 >= cfg.success_iou:
                self.status = SUCCESS
                reward += cfg.terminal_bonus
                done = True
        if not done and self.step_count >= cfg.max_steps:
            self.status = TRUNCATED
            done = True
        obs = self.observation()
        if not done and not np.any(obs.mask):
            self.status = DEADLOCKED
            done = True
        info.update(status=self.status, breakdown=breakdown, iou64=iou64,
                    step=self.step_count)
        return obs, float(reward), done, info

    # -- mark / revert ----------------------------------------------------------

    def mark(self):
        mark_id = self._next_mark
        self._next_mark += 1
        self._marks[mark_id] = (self.current, tuple(self.history),
                                self.step_count, self.status, self._potential)
        return mark_id

    def revert(self, mark_id):
        if mark_id not in self._marks:
            raise InvalidMark(f"mark {mark_id} is unknown or was invalidated")
        solid, history, steps, status, potential = self._marks[mark_id]
        for stale in [m for m in self._marks if m > mark_id]:
            del self._marks[stale]
        self.current = solid
        self.history = list(history)
        self.step_count = steps
        self.status = status
        self._potential = potential
        self._refresh_current()

    def state_hash(self):
        h = hashlib.sha256()
        h.update(self.current.structural_hash().encode())
        h.update(repr(tuple(self.history)).encode())
        h.update(self.status.encode())
        return h.hexdigest()

    def replay(self, commands):
        """Step a parsed command sequence; returns (rewards, infos)."""
        from .dsl import AddExtrude
        self.reset()
        rewards, infos = [], []
        for cmd in commands:
            action = _command_to_action(cmd, len(self.history) == 0)
            idx = self.ctx.table.index(action)
            _, r, done, info = self.step(idx)
            rewards.append(r)
            infos.append(info)
            if done:
                break
        return rewards, infos


def _command_to_action(cmd, is_first):
    from .actions import Action
    from .dsl import AddExtrude
    if isinstance(cmd, AddExtrude):
        return Action(cmd.f_start, cmd.f_end, cmd.op, "extrude")
    return Action(cmd.face, cmd.face, cmd.op, "revolve")


# ---------------------------------------------------------------------------
# vectorized driver
# ---------------------------------------------------------------------------

class SerialVectorEnv:
    """In-process batch of environments (deterministic mode)."""

    def __init__(self, envs):
        self.envs = list(envs)

    def __len__(self):
        return len(self.envs)

    def reset(self, seeds=None):
        seeds = seeds or [0] * len(self.envs)
        return [env.reset(seed) for env, seed in zip(self.envs, seeds)]

    def step(self, actions):
        if len(actions) != len(self.envs):
            raise ValueError("need one action per environment")
        out = []
        for env, a in zip(self.envs, actions):
            try:
                out.append(env.step(a))
            except Exception as exc:  # isolate per-env failures
                out.append(("error", type(exc).__name__, str(exc)))
        return out

    def close(self):
        pass


def _worker_loop(conn, ctor_payload):
    try:
        env = _build_env_from_payload(ctor_payload)
    except Exception as exc:
        conn.send(("fatal", type(exc).__name__, str(exc)))
        conn.close()
        return
    while True:
        try:
            msg = conn.recv()
        except EOFError:
            break
        op = msg[0]
        try:
            if op == "reset":
                obs = env.reset(msg[1])
                conn.send(("ok", obs))
            elif op == "step":
                conn.send(("ok", env.step(msg[1])))
            elif op == "encoder":
                _load_encoder(env.encoder, msg[1])
                conn.send(("ok", None))
            elif op == "close":
                conn.send(("ok", None))
                break
            else:
                conn.send(("error", "ValueError", f"unknown op {op}"))
        except Exception as exc:
            conn.send(("error", type(exc).__name__, str(exc)))
    conn.close()


def _load_encoder(encoder, arrays):
    for (name, p), arr in zip(encoder.named_parameters(), arrays):
        p.data = np.array(arr)


def _dump_encoder(encoder):
    return [p.data for _, p in encoder.named_parameters()]


def _build_env_from_payload(payload):
    builder, args, config = payload
    solid = builder(*args)
    return CadEnv(TargetContext(solid), config)


class VectorCadEnv:
    """Shared-nothing worker processes, one environment each.

    Targets are rebuilt inside each worker from a (builder, args) payload;
    observations and actions cross the process boundary by value.
    """

    def __init__(self, payloads, start_method="fork"):
        ctx = mp.get_context(start_method)
        self.conns = []
        self.procs = []
        for payload in payloads:
            parent, child = ctx.Pipe()
            proc = ctx.Process(target=_worker_loop, args=(child, payload),
                               daemon=True)
            proc.start()
            child.close()
            self.conns.append(parent)
            self.procs.append(proc)

    def __len__(self):
        return len(self.conns)

    def _roundtrip(self, messages):
        for conn, msg in zip(self.conns, messages):
            conn.send(msg)
        out = []
        for conn in self.conns:
            reply = conn.recv()
            out.append(reply[1] if reply[0] == "ok" else reply)
        return out

    def reset(self, seeds=None):
        seeds = seeds or [0] * len(self.conns)
        return self._roundtrip([("reset", s) for s in seeds])

    def reset_one(self, index, seed=0):
        self.conns[index].send(("reset", seed))
        reply = self.conns[index].recv()
        return reply[1] if reply[0] == "ok" else reply

    def step(self, actions):
        if len(actions) != len(self.conns):
            raise ValueError("need one action per environment")
        return self._roundtrip([("step", int(a)) for a in actions])

    def sync_encoder(self, encoder):
        arrays = _dump_encoder(encoder)
        self._roundtrip([("encoder", arrays)] * len(self.conns))

    def close(self):
        for conn in self.conns:
            try:
                conn.send(("close",))
            except (BrokenPipeError, OSError):
                pass
        for conn in self.conns:
            try:
                conn.recv()
            except (EOFError, OSError):
                pass
            conn.close()
        for proc in self.procs:
            proc.join(timeout=5)
            if proc.is_alive():
                proc.terminate()
