"""Command-line entry point.

Subcommands: gen-dataset, train, eval, replay, actions, fmt, bench.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import dataset as ds
from .dsl import format_text, parse
from .env import CadEnv, EnvConfig, TargetContext, VectorCadEnv
from .errors import CadGymError, UnknownTarget
from .fixtures import FIXTURES, fixture
from .nn.policy import PolicyConfig, PolicyNet
from .ppo import PpoConfig, load_training_state, train
from .rewards import eval_metrics, sample_point_cloud


def _seed_default():
    env = os.environ.get("CADGYM_SEED")
    return int(env) if env else 0


def _target_solid(args, need_records=False):
    """Resolve --target against fixtures or a --data corpus."""
    name = args.target
    if name in FIXTURES:
        return fixture(name), None
    if not getattr(args, "data", None):
        raise UnknownTarget(
            f"target {name!r} is not a fixture; pass --data to look it up")
    records = ds.load(args.data, validate=False)
    by_id = {r.id: r for r in records}
    if name not in by_id:
        raise UnknownTarget(f"target {name!r} not found in {args.data}")
    rec = by_id[name]
    return ds.record_solid(rec), rec


def _parse_weights(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected four comma-separated weights")
    return tuple(parts)


def _parse_bins(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected simple,medium,complex fractions")
    return {"simple": parts[0], "medium": parts[1], "complex": parts[2]}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen_dataset(args):
    t0 = time.time()
    records = ds.generate(args.count, args.bins, seed=args.seed,
                          workers=args.workers)
    ds.save(records, args.out)
    bins = {}
    for r in records:
        bins[r.bin] = bins.get(r.bin, 0) + 1
    print(f"wrote {len(records)} records to {args.out} "
          f"({bins}) in {time.time() - t0:.1f}s")
    return 0


def cmd_train(args):
    records = ds.load(args.data, validate=False)
    if args.limit:
        records = records[:args.limit]
    contexts = []
    for rec in records:
        ctx = TargetContext(ds.record_solid(rec), target_id=rec.id)
        contexts.append(ctx)
    envs = 1 if args.single_thread else args.envs
    ppo_cfg = PpoConfig(gamma=args.gamma, lam=args.lam, clip_eps=args.clip,
                        env_count=envs,
                        episodes_per_target=args.episodes_per_target,
                        lr=args.lr, checkpoint_every=1)
    env_cfg = EnvConfig(max_steps=args.steps, reward_weights=args.weights,
                        cd_cloud_size=args.cd_cloud, emd_cloud_size=args.emd_cloud)
    os.makedirs(args.out, exist_ok=True)
    log_path = os.path.join(args.out, "train-log.jsonl")
    net, log, results = train(ppo_cfg, contexts, env_cfg=env_cfg,
                              seed=args.seed, out_dir=args.out,
                              log_path=log_path)
    from .ppo import save_training_state, Adam
    save_training_state(os.path.join(args.out, "policy-final.cgym"), net,
                        Adam(list(net.named_parameters())), len(log))
    mean_iou = float(np.mean(list(results.values()))) if results else 0.0
    print(f"trained on {len(contexts)} targets; "
          f"mean greedy terminal IoU {mean_iou:.4f}; log at {log_path}")
    return 0


def cmd_eval(args):
    records = ds.load(args.data, validate=False)
    if args.limit:
        records = records[:args.limit]
    generated, reference = [], []
    per_target = []
    net = None
    for rec in records:
        ctx = TargetContext(ds.record_solid(rec), target_id=rec.id)
        if net is None:
            net = PolicyNet(len(ctx.table), PolicyConfig(), seed=args.seed)
            if args.checkpoint:
                load_training_state(args.checkpoint, net)
        head_rng = np.random.default_rng([args.seed, hash(rec.id) % (2**32)])
        net.new_head(len(ctx.table), head_rng)
        env = CadEnv(ctx, EnvConfig(cd_cloud_size=args.cd_cloud,
                                    emd_cloud_size=args.emd_cloud),
                     encoder=net.enc_target)
        obs = env.reset(args.seed)
        rng = np.random.default_rng(args.seed)
        done = env.status != "running"
        while not done:
            idx, _, _ = net.act(obs.target_graph, obs.current_graph,
                                obs.history, obs.mask, rng, greedy=True)
            obs, _, done, _ = env.step(idx)
        generated.append(env.current)
        reference.append(ctx.solid)
        per_target.append({"target": rec.id, "iou": env.success_iou(),
                           "status": env.status})
    metrics = eval_metrics(generated, reference)
    _print_table("metric", "value", [(k, f"{v:.4f}") for k, v in metrics.items()])
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(json.dumps({"metrics": metrics, "targets": per_target}) + "\n")
        print(f"report written to {args.report}")
    if args.json_report:
        with open(args.json_report, "w") as fh:
            for row in per_target:
                fh.write(json.dumps(row) + "\n")
    return 0


def cmd_replay(args):
    solid, rec = _target_solid(args)
    with open(args.dsl, "r", encoding="utf-8") as fh:
        ast = parse(fh.read())
    ctx = TargetContext(solid, target_id=args.target)
    env = CadEnv(ctx, EnvConfig(cd_cloud_size=args.cd_cloud,
                                emd_cloud_size=args.emd_cloud))
    rewards, infos = env.replay(ast)
    terminal_iou = env.success_iou()
    print(f"replayed {len(rewards)} steps; status={env.status}; "
          f"terminal IoU={terminal_iou:.4f}")
    if args.export_obj:
        _export_obj(env.current, args.export_obj)
        print(f"boundary mesh written to {args.export_obj}")
    if args.export_points:
        cloud = sample_point_cloud(env.current, args.points)
        np.savetxt(args.export_points,
                   np.hstack([cloud.points, cloud.normals]),
                   header="x y z nx ny nz")
        print(f"point cloud written to {args.export_points}")
    return 0 if terminal_iou >= 0.99 else 1


def cmd_actions(args):
    solid, _ = _target_solid(args)
    ctx = TargetContext(solid, target_id=args.target)
    rows = []
    for i, a in enumerate(ctx.table.actions):
        if a.a_t == "extrude":
            desc = f"extrude f{a.f_s} -> f{a.f_e}"
        else:
            desc = f"revolve f{a.f_s}"
        rows.append((str(i), f"{desc:<24} {a.o_t}"))
    _print_table("index", "action", rows)
    print(f"{len(ctx.table)} actions "
          f"({len(ctx.table) // 4} geometric candidates x 4 ops)")
    return 0


def cmd_fmt(args):
    with open(args.infile, "r", encoding="utf-8") as fh:
        text = fh.read()
    out = format_text(text)
    if args.write:
        with open(args.infile, "w", encoding="utf-8") as fh:
            fh.write(out + ("\n" if out else ""))
    else:
        print(out)
    return 0


def cmd_bench(args):
    single, multi = bench_throughput(args.fixture, args.envs, args.steps,
                                     args.seed)
    print(f"single-env: {single:.1f} steps/s")
    print(f"{args.envs}-env vector: {multi:.1f} steps/s "
          f"(speedup {multi / single:.2f}x, cores={os.cpu_count()})")
    return 0


def bench_throughput(fixture_name, n_envs, steps, seed=0):
    """(single-env, n-env vector) random-action steps per second."""
    config = EnvConfig(cd_cloud_size=128, emd_cloud_size=32)
    rng = np.random.default_rng(seed)

    env = CadEnv(TargetContext(fixture(fixture_name)), config)
    obs = env.reset(0)

    def one_step(o):
        choices = np.flatnonzero(o.mask)
        a = int(rng.choice(choices)) if len(choices) else 0
        o2, _, done, _ = env.step(a)
        return env.reset(0) if done else o2

    for _ in range(4):  # warm the caches before timing
        obs = one_step(obs)
    t0 = time.time()
    for _ in range(steps):
        obs = one_step(obs)
    single = steps / (time.time() - t0)

    payloads = [(fixture, (fixture_name,), config)] * n_envs
    vec = VectorCadEnv(payloads)
    try:
        obs = vec.reset()
        for _ in range(2):  # warm the workers before timing
            actions = [int(rng.choice(np.flatnonzero(o.mask))) for o in obs]
            vec.step(actions)
            obs = vec.reset()
        steps_done = 0
        t0 = time.time()
        for _ in range(max(1, steps // n_envs)):
            actions = []
            for o in obs:
                m = np.flatnonzero(o.mask)
                actions.append(int(rng.choice(m)) if len(m) else 0)
            results = vec.step(actions)
            steps_done += len(results)
            obs = []
            for i, r in enumerate(results):
                if isinstance(r, tuple) and r and r[0] == "error":
                    obs.append(vec.reset_one(i))
                else:
                    o, _, done, _ = r
                    obs.append(vec.reset_one(i) if done else o)
        multi = steps_done / (time.time() - t0)
    finally:
        vec.close()
    return single, multi


def _export_obj(solid, path):
    """Triangulate valid UV grid cells, two triangles per fully-valid cell."""
    from .brep import extract_faces
    from .config import UV_GRID
    verts, tris = [], []
    for f in extract_faces(solid):
        base = len(verts)
        verts.extend(f.points.tolist())
        v = f.valid.reshape(UV_GRID, UV_GRID)
        for i in range(UV_GRID - 1):
            for j in range(UV_GRID - 1):
                if v[i, j] and v[i + 1, j] and v[i, j + 1] and v[i + 1, j + 1]:
                    a = base + i * UV_GRID + j
                    b = base + (i + 1) * UV_GRID + j
                    c = base + (i + 1) * UV_GRID + j + 1
                    d = base + i * UV_GRID + j + 1
                    tris.append((a, b, c))
                    tris.append((a, c, d))
    with open(path, "w") as fh:
        for p in verts:
            fh.write(f"v {p[0]:.6f} {p[1]:.6f} {p[2]:.6f}\n")
        for t in tris:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def _print_table(key_head, val_head, rows):
    width = max([len(key_head)] + [len(r[0]) for r in rows]) if rows else len(key_head)
    print(f"{key_head:<{width}}  {val_head}")
    print(f"{'-' * width}  {'-' * max(len(val_head), 5)}")
    for k, v in rows:
        print(f"{k:<{width}}  {v}")


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="cadgym",
                                description="CAD command-sequence training gym")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="seed (fallback: CADGYM_SEED, then 0)")
    sub = p.add_subparsers(dest="command", required=True,
                           parser_class=lambda **kw: argparse.ArgumentParser(
                               parents=[common], **kw))

    g = sub.add_parser("gen-dataset", help="generate a stratified corpus")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--bins", type=_parse_bins, default=None,
                   help="simple,medium,complex fractions (default .33,.32,.35)")
    g.add_argument("--out", required=True)
    g.add_argument("--workers", type=int, default=1)
    g.set_defaults(fn=cmd_gen_dataset)

    t = sub.add_parser("train", help="train PPO over a corpus")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--envs", type=int, default=1)
    t.add_argument("--single-thread", action="store_true",
                   help="force one environment (deterministic mode)")
    t.add_argument("--steps", type=int, default=10, help="max episode length")
    t.add_argument("--gamma", type=float, default=0.99)
    t.add_argument("--lambda", dest="lam", type=float, default=0.95)
    t.add_argument("--clip", type=float, default=0.2)
    t.add_argument("--weights", type=_parse_weights, default=(0.3, 0.2, 0.2, 0.3),
                   help="reward weights iou,mmd,nc,nr")
    t.add_argument("--lr", type=float, default=3e-4)
    t.add_argument("--episodes-per-target", type=int, default=2000)
    t.add_argument("--cd-cloud", type=int, default=1024)
    t.add_argument("--emd-cloud", type=int, default=256)
    t.add_argument("--limit", type=int, default=0)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="greedy-rollout metrics over a corpus")
    e.add_argument("--data", required=True)
    e.add_argument("--checkpoint", default=None)
    e.add_argument("--report", default=None)
    e.add_argument("--json-report", default=None)
    e.add_argument("--limit", type=int, default=0)
    e.add_argument("--cd-cloud", type=int, default=1024)
    e.add_argument("--emd-cloud", type=int, default=256)
    e.set_defaults(fn=cmd_eval)

    r = sub.add_parser("replay", help="replay a DSL file against a target")
    r.add_argument("--dsl", required=True)
    r.add_argument("--target", required=True,
                   help="fixture name or record id (with --data)")
    r.add_argument("--data", default=None)
    r.add_argument("--export-obj", default=None)
    r.add_argument("--export-points", default=None)
    r.add_argument("--points", type=int, default=1024)
    r.add_argument("--cd-cloud", type=int, default=1024)
    r.add_argument("--emd-cloud", type=int, default=256)
    r.set_defaults(fn=cmd_replay)

    a = sub.add_parser("actions", help="print the valid-action table")
    a.add_argument("--target", required=True)
    a.add_argument("--data", default=None)
    a.set_defaults(fn=cmd_actions)

    f = sub.add_parser("fmt", help="canonicalize DSL text")
    f.add_argument("--in", dest="infile", required=True)
    f.add_argument("--write", action="store_true",
                   help="rewrite the file in place")
    f.set_defaults(fn=cmd_fmt)

    b = sub.add_parser("bench", help="vector-step throughput benchmark")
    b.add_argument("--envs", type=int, default=8)
    b.add_argument("--steps", type=int, default=64)
    b.add_argument("--fixture", default="cube", choices=sorted(FIXTURES))
    b.set_defaults(fn=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = _seed_default()
    try:
        return args.fn(args)
    except CadGymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
