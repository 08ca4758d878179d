"""Handle-based binding over the native environment contract."""

from __future__ import annotations

import hashlib
import threading

import numpy as np

from cadgym import dataset as _dataset
from cadgym.env import CadEnv, EnvConfig, TargetContext


class ClosedHandle(Exception):
    """Operation on a handle that was closed or never opened."""


class ConcurrentAccess(Exception):
    """Handle used from a thread other than its owner."""


_registry = {}
_next_handle = [1]
_registry_lock = threading.Lock()


class _Bound:
    __slots__ = ("env", "owner_thread", "target_id", "closed")

    def __init__(self, env, target_id):
        self.env = env
        self.owner_thread = threading.get_ident()
        self.target_id = target_id
        self.closed = False


def _lookup(handle):
    bound = _registry.get(handle)
    if bound is None or bound.closed:
        raise ClosedHandle(f"handle {handle} is not open")
    if threading.get_ident() != bound.owner_thread:
        raise ConcurrentAccess(
            f"handle {handle} is owned by thread {bound.owner_thread}")
    return bound


def open_env(data_path, target_id, max_steps=10, reward_weights=None,
             cd_cloud_size=256, emd_cloud_size=64):
    """Open one environment over a corpus record; returns an int handle."""
    records = _dataset.load(data_path, validate=False)
    by_id = {r.id: r for r in records}
    if target_id not in by_id:
        raise KeyError(f"target {target_id!r} not found in {data_path}")
    config = EnvConfig(max_steps=max_steps,
                       cd_cloud_size=cd_cloud_size,
                       emd_cloud_size=emd_cloud_size)
    if reward_weights is not None:
        config.reward_weights = tuple(reward_weights)
    ctx = TargetContext(_dataset.record_solid(by_id[target_id]),
                        target_id=target_id)
    env = CadEnv(ctx, config)
    with _registry_lock:
        handle = _next_handle[0]
        _next_handle[0] += 1
        _registry[handle] = _Bound(env, target_id)
    return handle


def close_env(handle):
    bound = _registry.get(handle)
    if bound is None or bound.closed:
        raise ClosedHandle(f"handle {handle} is not open")
    bound.closed = True
    bound.env = None


def _convert_observation(obs):
    """Native observation -> plain-container payload (no precision loss)."""
    payload = obs.to_payload()
    payload["action_count"] = len(obs.mask)
    return payload


def _split_done(env):
    terminated = env.status in ("success", "deadlocked")
    truncated = env.status == "truncated"
    return terminated, truncated


def bound_reset(handle, seed=0):
    """reset(seed) -> (observation payload, info)."""
    bound = _lookup(handle)
    obs = bound.env.reset(seed)
    info = {"target": bound.target_id, "status": bound.env.status,
            "checksum": observation_checksum(obs)}
    return _convert_observation(obs), info


def bound_step(handle, action):
    """step(action) -> (obs, reward, terminated, truncated, info)."""
    bound = _lookup(handle)
    obs, reward, done, native_info = bound.env.step(int(action))
    terminated, truncated = _split_done(bound.env)
    info = {
        "invalid": bool(native_info.get("invalid", False)),
        "status": native_info.get("status"),
        "checksum": observation_checksum(obs),
    }
    br = native_info.get("breakdown")
    if br is not None:
        info["reward_terms"] = {"iou": br.iou, "mmd": br.mmd, "nc": br.nc,
                                "nr": br.nr, "composite": br.composite}
    if native_info.get("iou64") is not None:
        info["iou64"] = float(native_info["iou64"])
    return (_convert_observation(obs), float(reward), terminated, truncated,
            info)


def bound_valid_actions(handle):
    bound = _lookup(handle)
    return [int(b) for b in bound.env.valid_actions()]


def bound_mark(handle):
    return _lookup(handle).env.mark()


def bound_revert(handle, mark_id):
    _lookup(handle).env.revert(mark_id)


def observation_checksum(obs):
    """Stable digest of an observation's numeric content."""
    if hasattr(obs, "checksum"):
        return obs.checksum()
    return payload_checksum(obs)


def payload_checksum(payload):
    """Digest of a converted payload; bit-compatible with the native one."""
    h = hashlib.sha256()
    for key in ("current", "target"):
        h.update(np.asarray(payload[key]["nodes"], dtype=np.float64).tobytes())
    # native checksums hash the dense adjacency of the current graph
    n = len(payload["current"]["nodes"])
    dense = np.zeros((n, n))
    adj = payload["current"]["adj"]
    for r, c, v in zip(adj["row"], adj["col"], adj["val"]):
        dense[r, c] = v
    h.update(dense.tobytes())
    h.update(bytes(np.asarray(payload["mask"], dtype=np.int8)))
    h.update(repr([int(a) for a in payload["history"]]).encode())
    return h.hexdigest()


class BoundEnv:
    """Object front-end over the handle API; one owner per instance."""

    def __init__(self, data_path, target_id, **options):
        self._handle = open_env(data_path, target_id, **options)
        self.target_id = target_id

    @property
    def handle(self):
        return self._handle

    def reset(self, seed=0):
        return bound_reset(self._handle, seed)

    def step(self, action):
        return bound_step(self._handle, action)

    def valid_actions(self):
        return bound_valid_actions(self._handle)

    def mark(self):
        return bound_mark(self._handle)

    def revert(self, mark_id):
        return bound_revert(self._handle, mark_id)

    def close(self):
        close_env(self._handle)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        try:
            self.close()
        except ClosedHandle:
            pass


class VectorBoundEnv:
    """Multiplexes several handles; results always in handle order."""

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
        return [env.step(a) for env, a in zip(self.envs, actions)]

    def close(self):
        for env in self.envs:
            try:
                env.close()
            except ClosedHandle:
                pass
