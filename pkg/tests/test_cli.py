import json
import os
import subprocess
import sys

import pytest

from cadgym import dataset as ds
from cadgym.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestHelp:
    @pytest.mark.parametrize("sub", ["gen-dataset", "train", "eval", "replay",
                                     "actions", "fmt", "bench"])
    def test_subcommand_help_exits_zero(self, sub):
        with pytest.raises(SystemExit) as exc:
            run_cli(sub, "--help")
        assert exc.value.code == 0

    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("gen-dataset")  # missing required flags
        assert exc.value.code == 2

    def test_unknown_flag_rejected(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("actions", "--target", "cube", "--bogus")
        assert exc.value.code == 2


class TestActions:
    def test_cube_prints_24(self, capsys):
        assert run_cli("actions", "--target", "cube") == 0
        out = capsys.readouterr().out
        assert "24 actions" in out
        assert "6 geometric candidates x 4 ops" in out

    def test_unknown_target_runtime_error(self, capsys):
        assert run_cli("actions", "--target", "nonexistent") == 1
        assert "error" in capsys.readouterr().err


class TestFmt:
    def test_canonicalizes(self, tmp_path, capsys):
        p = tmp_path / "x.cadseq"
        p.write_text("add_revolve( f2 ,union); # note\nadd_extrude(f1,f3,subtraction);")
        assert run_cli("fmt", "--in", str(p)) == 0
        out = capsys.readouterr().out.strip()
        assert out == "add_revolve(f2, union);\nadd_extrude(f1, f3, subtraction);"

    def test_idempotent(self, tmp_path, capsys):
        p = tmp_path / "x.cadseq"
        p.write_text("add_revolve(f2, union);")
        run_cli("fmt", "--in", str(p), "--write")
        first = p.read_text()
        run_cli("fmt", "--in", str(p), "--write")
        assert p.read_text() == first

    def test_syntax_error_exit_one(self, tmp_path, capsys):
        p = tmp_path / "bad.cadseq"
        p.write_text("add_extrude(f1 f2, union);")
        assert run_cli("fmt", "--in", str(p)) == 1


class TestReplay:
    def test_replay_corpus_record(self, small_corpus, tmp_path, capsys):
        rec = small_corpus[0]
        data = tmp_path / "c.cadset"
        ds.save(small_corpus, str(data))
        dsl = tmp_path / "seq.cadseq"
        dsl.write_text(rec.dsl)
        obj = tmp_path / "out.obj"
        pts = tmp_path / "pts.xyz"
        code = run_cli("replay", "--dsl", str(dsl), "--target", rec.id,
                       "--data", str(data), "--export-obj", str(obj),
                       "--export-points", str(pts),
                       "--cd-cloud", "128", "--emd-cloud", "32")
        out = capsys.readouterr().out
        assert code == 0
        assert "terminal IoU" in out
        assert obj.exists() and obj.read_text().startswith("v ")
        assert pts.exists()

    def test_obj_has_faces(self, tmp_path, capsys):
        dsl = tmp_path / "seq.cadseq"
        from cadgym.env import CadEnv, EnvConfig, TargetContext
        from cadgym.fixtures import unit_cube
        ctx = TargetContext(unit_cube())
        bottom = [f for f in ctx.faces if f.local_index == 0][0].face_id
        top = [f for f in ctx.faces if f.local_index == 1][0].face_id
        dsl.write_text(f"add_extrude(f{bottom}, f{top}, newbody);")
        obj = tmp_path / "cube.obj"
        code = run_cli("replay", "--dsl", str(dsl), "--target", "cube",
                       "--export-obj", str(obj),
                       "--cd-cloud", "128", "--emd-cloud", "32")
        assert code == 0
        text = obj.read_text()
        assert text.count("\nf ") > 100


class TestGenDataset:
    def test_generates_and_loads(self, tmp_path, capsys):
        out = tmp_path / "mini.cadset"
        code = run_cli("gen-dataset", "--count", "2", "--out", str(out),
                       "--bins", "1.0,0.0,0.0", "--seed", "5")
        assert code == 0
        records = ds.load(str(out))
        assert len(records) == 2


class TestDeterminism:
    def test_actions_byte_identical(self, tmp_path):
        script = ("import sys; from cadgym.cli import main; "
                  "sys.exit(main(['actions', '--target', 'cylinder']))")
        envv = dict(os.environ, PYTHONHASHSEED="0")
        a = subprocess.run([sys.executable, "-c", script], env=envv,
                           capture_output=True, text=True)
        b = subprocess.run([sys.executable, "-c", script], env=envv,
                           capture_output=True, text=True)
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout

    def test_seed_env_fallback(self, monkeypatch):
        monkeypatch.setenv("CADGYM_SEED", "123")
        from cadgym.cli import _seed_default, build_parser
        args = build_parser().parse_args(["actions", "--target", "cube"])
        assert args.seed is None
        assert _seed_default() == 123

    def test_seed_flag_after_subcommand(self):
        from cadgym.cli import build_parser
        args = build_parser().parse_args(
            ["gen-dataset", "--count", "1", "--out", "x", "--seed", "5"])
        assert args.seed == 5
