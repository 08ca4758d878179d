"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The corpus-wide
criteria share a single 500-record corpus generated once (cached under
tests/_cache) and a single replay scan over it.
"""

import itertools
import math
import os
import random
import time
from dataclasses import dataclass

import numpy as np
import pytest

from cadgym import dataset as ds
from cadgym.actions import enumerate_valid_actions
from cadgym.brep import build_graph, extract_faces
from cadgym.config import BOOL_OPS, FEATURE_WIDTH
from cadgym.dsl import CommandAst, parse, print_ast
from cadgym.env import CadEnv, EnvConfig, TargetContext
from cadgym.errors import DslSemanticError, DslSyntaxError
from cadgym.geometry.plane import Plane
from cadgym.geometry.primitive import Revolve
from cadgym.geometry.profile import ArcSegment, LineSegment, Profile, circle, polygon
from cadgym.geometry.solid import Solid
from cadgym.nn.layers import GraphEncoder
from cadgym.nn.policy import Adam, PolicyConfig, PolicyNet
from cadgym.nn.tensor import Tensor
from cadgym.ops import apply as ops_apply
from cadgym.ops import extract_extrude_params, extract_revolve_params
from cadgym.ppo import PpoConfig, compute_gae, train
from cadgym.rewards import (PointCloud, chamfer, composite_reward, emd, iou,
                            jsd, normal_consistency, neural_reward,
                            sample_point_cloud)

CACHE = os.path.join(os.path.dirname(__file__), "_cache")
CORPUS_PATH = os.path.join(CACHE, "acceptance-corpus-seed0-n500.cadset")
SMOKE_PATH = os.path.join(CACHE, "smoke-corpus-seed1-n20.cadset")
TWO_PI = 2 * math.pi


def _report(name, ok, detail=""):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared corpus + a single replay scan over it
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def corpus500():
    os.makedirs(CACHE, exist_ok=True)
    if os.path.exists(CORPUS_PATH):
        return ds.load(CORPUS_PATH, validate=False)
    records = ds.generate(500, seed=0)
    ds.save(records, CORPUS_PATH)
    return records


@dataclass
class ReplayScan:
    terminal_ious: list
    statuses: list
    replay_seconds: float
    graph_widths: set
    worst_row_sum_error: float


@pytest.fixture(scope="session")
def replay_scan(corpus500):
    cfg = EnvConfig(cd_cloud_size=128, emd_cloud_size=32)
    ious, statuses = [], []
    widths = set()
    worst_row = 0.0
    t0 = time.time()
    for rec in corpus500:
        ctx = TargetContext(ds.record_solid(rec), target_id=rec.id)
        g = ctx.graph
        widths.add(g.node_features.shape[1])
        if g.num_nodes:
            worst_row = max(worst_row, float(np.abs(
                g.adj_normalized.sum(axis=1) - 1.0).max()))
        env = CadEnv(ctx, cfg)
        env.replay(parse(rec.dsl))
        statuses.append(env.status)
        ious.append(env.success_iou())
    return ReplayScan(ious, statuses, time.time() - t0, widths, worst_row)


class TestReplaySoundness:
    def test_corpus_replays_to_high_iou(self, corpus500, replay_scan):
        n = len(corpus500)
        ok_iou = sum(i >= 0.99 for i in replay_scan.terminal_ious)
        ok_status = sum(s == "success" for s in replay_scan.statuses)
        good = ok_iou == n and ok_status == n
        _report(
            "replay soundness",
            good and replay_scan.replay_seconds <= 600.0,
            f"{ok_iou}/{n} records at IoU>=0.99, {ok_status}/{n} success, "
            f"replay wall time {replay_scan.replay_seconds:.0f}s (limit 600s)")


class TestGraphContract:
    def test_feature_width_and_row_sums(self, corpus500, replay_scan):
        good = replay_scan.graph_widths == {FEATURE_WIDTH} \
            and replay_scan.worst_row_sum_error <= 1e-12
        _report(
            "graph contract",
            good,
            f"widths={sorted(replay_scan.graph_widths)}, "
            f"worst |row sum - 1| = {replay_scan.worst_row_sum_error:.2e}")


class TestAlgorithmOneEquivalence:
    def test_enumeration_matches_brute_force(self, corpus500):
        from tests.test_actions import brute_force_actions
        small = [r for r in corpus500 if r.face_count <= 12][:50]
        assert len(small) == 50, "need 50 targets with <= 12 faces"
        mismatches = 0
        for rec in small:
            solid = ds.record_solid(rec)
            faces = extract_faces(solid)
            table = enumerate_valid_actions(solid, faces)
            got = {(a.f_s, a.f_e, a.o_t, a.a_t) for a in table.actions}
            want = brute_force_actions(solid, faces)
            if got != want:
                mismatches += 1
        _report("valid-action enumeration equivalence", mismatches == 0,
                f"{mismatches} mismatches over {len(small)} targets")


class TestRevolveInverse:
    def test_hundred_random_round_trips(self):
        rng = np.random.default_rng(123)
        failures = []
        worst_angle = 0.0
        min_iou = 1.0
        for k in range(100):
            prim = _random_revolve_primitive(rng)
            solid = Solid.from_primitive(prim)
            faces = [f for f in extract_faces(solid)
                     if f.surface_type in ("cylinder", "cone", "sphere",
                                           "torus")]
            if not faces:
                failures.append((k, "no side face"))
                continue
            face = max(faces, key=lambda f: int(f.valid.sum()))
            spec = extract_revolve_params(face, "newbody")
            angle_err = abs(spec.angle - prim.angle)
            worst_angle = max(worst_angle, angle_err)
            rebuilt = ops_apply(Solid.empty(), spec)
            score = iou(rebuilt, solid, 64)
            min_iou = min(min_iou, score)
            if score < 0.99 or angle_err > 1e-6:
                failures.append((k, score, angle_err))
        _report("revolve inverse round-trip", not failures,
                f"min IoU {min_iou:.4f}, worst angle error {worst_angle:.2e} "
                f"rad over 100 primitives; failures: {failures[:4]}")


def _random_revolve_primitive(rng):
    d = np.zeros(3)
    d[rng.integers(0, 3)] = rng.choice([-1.0, 1.0])
    origin = rng.uniform(-0.2, 0.2, size=3)
    plane = Plane.from_normal(origin, d)
    frame = Plane(origin, plane.u, d)
    kind = ["cylinder", "cone", "sphere", "torus"][rng.integers(0, 4)]
    z0, z1 = -rng.uniform(0.2, 0.6), rng.uniform(0.2, 0.6)
    angle = TWO_PI if rng.random() < 0.5 else rng.uniform(0.5, 0.95 * TWO_PI)
    if kind == "cylinder":
        r = rng.uniform(0.25, 0.8)
        prof = polygon(frame, [(0, z0), (r, z0), (r, z1), (0, z1)])
    elif kind == "cone":
        r0 = rng.uniform(0.4, 0.9)
        r1 = r0 * rng.uniform(0.15, 0.85)
        prof = polygon(frame, [(0, z0), (r0, z0), (r1, z1), (0, z1)])
    elif kind == "sphere":
        r = rng.uniform(0.3, 0.8)
        arc = ArcSegment((0.0, 0.0), r, -math.pi / 2, math.pi / 2, True)
        prof = Profile(frame, [arc, LineSegment(tuple(arc.end()),
                                                tuple(arc.start()))])
    else:
        minor = rng.uniform(0.1, 0.25)
        major = minor + rng.uniform(0.15, 0.5)
        prof = circle(frame, major, 0.0, minor)
    return Revolve(prof, origin, d, angle)


class TestRewardSuite:
    def test_identity_cases_and_oracles(self, cube_ctx):
        cube = cube_ctx.solid
        enc = GraphEncoder(FEATURE_WIDTH, 16, 16, np.random.default_rng(0))
        br = composite_reward(cube, cube, enc)
        cloud = sample_point_cloud(cube, 256)
        checks = {
            "iou(A,A)=1": iou(cube, cube) == 1.0,
            "cd(X,X)=0": chamfer(cloud, cloud) == 0.0,
            "emd(X,X)=0": emd(cloud, cloud) == 0.0,
            "nc identity=1": normal_consistency(cloud, cloud) == pytest.approx(1.0),
            "nr identity=1": neural_reward(cube, cube, enc) == pytest.approx(1.0),
            "composite=0.8": br.composite == pytest.approx(0.8, abs=1e-9),
        }

        rng = np.random.default_rng(99)
        emd_exact = True
        for _ in range(200):
            n = int(rng.integers(2, 8))
            a = rng.normal(size=(n, 3))
            b = rng.normal(size=(n, 3))
            nrm = np.tile([[0, 0, 1.0]], (n, 1))
            got = emd(PointCloud(a, nrm), PointCloud(b, nrm))
            best = min(sum(np.linalg.norm(a[i] - b[p[i]]) for i in range(n))
                       for p in itertools.permutations(range(n)))
            if abs(got - best) > 1e-9:
                emd_exact = False
                break
        checks["emd==brute force (n<=7, 200 pairs)"] = emd_exact

        p = np.zeros(27)
        q = np.zeros(27)
        p[0], q[26] = 1.0, 1.0
        checks["jsd(disjoint)=ln2"] = abs(jsd(p, q) - math.log(2)) <= 1e-9

        bad = [k for k, v in checks.items() if not v]
        _report("reward suite", not bad, f"failed: {bad}" if bad else
                f"{len(checks)} checks exact")


class TestGradientChecks:
    def test_all_layers_and_composed_policy(self):
        from cadgym.fixtures import full_cylinder, unit_cube
        from cadgym.brep import face_graph
        from cadgym.nn.layers import (Embedding, GraphConv, LayerNorm, Linear,
                                      MultiHeadAttention, TransformerBlock)
        from tests.test_tensor_nn import gradcheck
        rng = np.random.default_rng(0)
        results = {}

        lin = Linear(5, 3, rng)
        x = Tensor(rng.normal(size=(4, 5)))
        results["linear"] = gradcheck(lambda: (lin(x) ** 2).sum(),
                                      lin.parameters())
        ln = LayerNorm(6)
        y = Tensor(rng.normal(size=(3, 6)))
        w = rng.normal(size=(3, 6))
        results["layernorm"] = gradcheck(lambda: (ln(y) * Tensor(w)).sum(),
                                         ln.parameters())
        gcv = GraphConv(6, 4, rng)
        h = Tensor(rng.normal(size=(3, 6)))
        a_hat = np.array([[0.5, 0.5, 0], [0.25, 0.5, 0.25], [0, 0.5, 0.5]])
        results["graph_conv"] = gradcheck(lambda: (gcv(h, a_hat) ** 2).sum(),
                                          gcv.parameters())
        mha = MultiHeadAttention(8, 2, rng)
        q = Tensor(rng.normal(size=(3, 8)))
        results["attention"] = gradcheck(lambda: (mha(q, q, q) ** 2).sum(),
                                         mha.parameters())
        blk = TransformerBlock(8, 2, rng)
        results["transformer"] = gradcheck(lambda: (blk(q) ** 2).sum(),
                                           blk.parameters())
        emb = Embedding(5, 4, rng)
        wv = rng.normal(size=(3, 4))
        results["embedding"] = gradcheck(
            lambda: (emb(np.array([0, 2, 2])) * Tensor(wv)).sum(),
            emb.parameters())

        cfg = PolicyConfig(embed_dim=8, heads=2, history_layers=1,
                           hidden_dim=16, dropout=0.0, max_history=6)
        net = PolicyNet(4, cfg, seed=0)
        tg = face_graph(unit_cube())
        cg = face_graph(full_cylinder())
        mask = np.array([1, 1, 0, 1.0])
        coef = Tensor(np.array([0.2, -0.3, 0.0, 0.5]))

        def loss():
            lp, v = net.forward(tg, cg, [0, 2], mask)
            return (lp * coef).sum() + (v ** 2).sum()

        results["policy_width8"] = gradcheck(
            loss, [p for _, p in net.named_parameters()])

        worst = max(results.values())
        _report("finite-difference gradient checks", worst <= 1e-4,
                ", ".join(f"{k}={v:.1e}" for k, v in results.items()))


class TestGaeOracles:
    def test_thousand_random_trajectories(self):
        rng = np.random.default_rng(7)
        worst_td = worst_mc = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 14))
            r = rng.normal(size=n)
            v = rng.normal(size=n)
            d = rng.random(n) < 0.3
            d[-1] = True
            gamma = float(rng.uniform(0.8, 0.999))

            adv0, _ = compute_gae(r, v, d, gamma, 1e-15)
            td = np.array([r[t] + gamma * (0.0 if (d[t] or t == n - 1)
                                           else v[t + 1]) - v[t]
                           for t in range(n)])
            worst_td = max(worst_td, float(np.abs(adv0 - td).max()))

            adv1, _ = compute_gae(r, v, d, gamma, 1.0)
            mc = np.zeros(n)
            acc = 0.0
            for t in range(n - 1, -1, -1):
                acc = r[t] + gamma * (0.0 if d[t] else acc)
                mc[t] = acc
            worst_mc = max(worst_mc, float(np.abs(adv1 - (mc - v)).max()))
        _report("GAE oracles", worst_td <= 1e-9 and worst_mc <= 1e-9,
                f"lambda->0 vs TD err {worst_td:.1e}; "
                f"lambda=1 vs MC err {worst_mc:.1e} over 1000 trajectories")


@pytest.fixture(scope="session")
def smoke_corpus():
    os.makedirs(CACHE, exist_ok=True)
    if os.path.exists(SMOKE_PATH):
        records = ds.load(SMOKE_PATH, validate=False)
    else:
        records = ds.generate(26, {"simple": 1.0, "medium": 0.0,
                                   "complex": 0.0}, seed=1)
        records = [r for r in records if len(r.profiles) <= 2][:20]
        ds.save(records, SMOKE_PATH)
    assert len(records) == 20
    return records


class TestLearningSmoke:
    def test_ppo_reconstructs_simple_targets(self, smoke_corpus):
        t0 = time.time()
        contexts = [TargetContext(ds.record_solid(r), target_id=r.id)
                    for r in smoke_corpus]
        ppo_cfg = PpoConfig(episodes_per_update=8, episodes_per_target=2000,
                            minibatch_size=32, epochs=2, lr=1e-3,
                            entropy_coef=0.02, success_stop_rate=0.9)
        env_cfg = EnvConfig(cd_cloud_size=256, emd_cloud_size=64, max_steps=6)
        net, log, results = train(ppo_cfg, contexts, env_cfg=env_cfg, seed=0)
        elapsed = time.time() - t0
        ious = list(results.values())
        hits = sum(v >= 0.95 for v in ious)
        episode_budget_ok = all(
            rec["episodes"] <= 2000 for rec in log)
        ok = hits >= 0.8 * len(contexts) and episode_budget_ok \
            and elapsed <= 1800.0
        _report("learning smoke test", ok,
                f"{hits}/{len(contexts)} targets at greedy IoU>=0.95 "
                f"(mean {np.mean(ious):.3f}) in {elapsed:.0f}s "
                f"on {os.cpu_count()} cores (limit 1800s on 8 cores)")


class TestEnvironmentPerformance:
    def test_mark_revert_memory_stability(self, cube_ctx):
        import gc
        env = CadEnv(cube_ctx, EnvConfig(cd_cloud_size=128, emd_cloud_size=32))
        env.reset(0)
        from cadgym.actions import Action
        bottom = [f for f in cube_ctx.faces if f.local_index == 0][0].face_id
        top = [f for f in cube_ctx.faces if f.local_index == 1][0].face_id
        a = cube_ctx.table.index(Action(bottom, top, "newbody", "extrude"))
        for _ in range(5):
            m = env.mark()
            env.step(a)
            env.revert(m)
        gc.collect()
        baseline = Solid.live_count()
        for _ in range(1000):
            m = env.mark()
            env.step(a)
            env.revert(m)
        gc.collect()
        after = Solid.live_count()
        ok = after <= baseline * 1.05 + 2
        _report("mark/revert stability", ok,
                f"live solids {baseline} -> {after} over 1000 cycles "
                f"(within 5%)")

    def test_vector_throughput(self):
        from cadgym.cli import bench_throughput
        cores = os.cpu_count() or 1
        single, multi = bench_throughput("cube", 8, 48, seed=0)
        speedup = multi / single
        detail = (f"single {single:.1f} steps/s, 8-env {multi:.1f} steps/s, "
                  f"speedup {speedup:.2f}x on {cores} cores")
        if cores >= 8:
            _report("vector throughput", speedup >= 4.0, detail)
        else:
            print(f"\n[SKIP] vector throughput: criterion requires >= 8 "
                  f"cores, host has {cores}; measured {detail}")
            pytest.skip(f"requires >= 8 cores, host has {cores}")


class TestDslAcceptance:
    def test_round_trip_10k_and_fuzz(self):
        rng = random.Random(0)
        ok_round = 0
        for _ in range(10000):
            cmds = []
            for _ in range(rng.randint(0, 6)):
                op = rng.choice(BOOL_OPS)
                if rng.random() < 0.5:
                    f = rng.randint(0, 500)
                    cmds.append(f"add_revolve(f{f}, {op});")
                else:
                    fs = rng.randint(0, 500)
                    fe = (fs + rng.randint(1, 100)) % 501
                    cmds.append(f"add_extrude(f{fs}, f{fe}, {op});")
            text = "\n".join(cmds)
            ast = parse(text)
            if parse(print_ast(ast)) == ast:
                ok_round += 1

        crashes = silent = trials = 0
        base = ("add_extrude(f0, f5, newbody);\n"
                "add_revolve(f2, union);\n"
                "add_extrude(f1, f3, subtraction);")
        delims = [i for i, c in enumerate(base) if c in "(),;"]
        single = [[i] for i in delims]
        multi = [sorted(rng.sample(delims, rng.randint(1, 5)), reverse=True)
                 for _ in range(2000)]
        for idx in single + multi:
            mutated = base
            for i in idx:
                mutated = mutated[:i] + mutated[i + 1:]
            trials += 1
            try:
                parse(mutated)
                silent += 1
            except (DslSyntaxError, DslSemanticError):
                pass
            except Exception:
                crashes += 1

        ok = ok_round == 10000 and crashes == 0 and silent == 0
        _report("DSL round-trip and fuzz", ok,
                f"{ok_round}/10000 round trips exact; {crashes} crashes, "
                f"{silent} silent accepts over {trials} deletion trials")
