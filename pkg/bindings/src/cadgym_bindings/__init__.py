"""Thin wrapper exposing the cadgym environment contract to RL ecosystems.

Follows the widespread calling convention ``reset(seed) -> (obs, info)``
and ``step(action) -> (obs, reward, terminated, truncated, info)``.
Observations cross the boundary as plain containers: per-graph dense node
features plus adjacency triplets, the action history, and the validity
mask.  All semantics live in the wrapped package; this layer only
converts values and manages handle lifetimes.
"""

from .bound import (BoundEnv, ClosedHandle, ConcurrentAccess, VectorBoundEnv,
                    bound_mark, bound_reset, bound_revert, bound_step,
                    bound_valid_actions, close_env, open_env,
                    observation_checksum, payload_checksum)

__version__ = "0.1.0"

__all__ = [
    "BoundEnv", "VectorBoundEnv", "ClosedHandle", "ConcurrentAccess",
    "open_env", "close_env", "bound_reset", "bound_step",
    "bound_valid_actions", "bound_mark", "bound_revert",
    "observation_checksum", "payload_checksum",
]
