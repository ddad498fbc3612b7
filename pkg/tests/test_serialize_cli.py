import json
import os
import subprocess
import sys

import numpy as np
import pytest

import unrectify as ur
from unrectify.cli import main
from unrectify.serialize import load_graph, save_graph


def read_tree(directory):
    out = {}
    for name in sorted(os.listdir(directory)):
        with open(os.path.join(directory, name), "rb") as fh:
            out[name] = fh.read()
    return out


class TestRoundTrip:
    @pytest.mark.parametrize("maker", ["stack", "resnet", "cpwl", "attention"])
    def test_save_load_save_is_identity(self, tmp_path, maker):
        rng = np.random.default_rng(3)
        if maker == "stack":
            net = ur.build_fusion_stack(2, 3, seed=5)
        elif maker == "resnet":
            net = ur.build_resnet_block(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))
        elif maker == "cpwl":
            net = ur.lower_cpwl_to_relu(
                ur.CpwlSpec(right=((1.5, -0.25),), left=((0.5, 1.0),))
            )
        else:
            net = ur.build_attention_toy(*rng.normal(size=(3, 2, 2)), lam=2.0, seq_len=3)
        first = tmp_path / "a"
        second = tmp_path / "b"
        first.mkdir()
        second.mkdir()
        save_graph(net, str(first / "g.json"))
        reloaded = load_graph(str(first / "g.json"))
        save_graph(reloaded, str(second / "g.json"))
        assert read_tree(first) == read_tree(second)

    def test_subgraph_with_gapped_indices_roundtrips(self, tmp_path):
        # computable sub-graphs keep their original (gapped) arc indices;
        # saving must still reload and re-save byte for byte
        net = ur.build_fusion_stack(2, 3, seed=4)
        sub = net.computable_subgraph("b02")
        assert [a.index for a in sub.arcs] != list(range(len(sub.arcs)))
        first = tmp_path / "a"
        second = tmp_path / "b"
        first.mkdir()
        second.mkdir()
        save_graph(sub, str(first / "g.json"))
        save_graph(load_graph(str(first / "g.json")), str(second / "g.json"))
        assert read_tree(first) == read_tree(second)

    def test_forward_survives_roundtrip(self, tmp_path):
        net = ur.build_fusion_stack(2, 4, seed=9)
        save_graph(net, str(tmp_path / "g.json"))
        back = load_graph(str(tmp_path / "g.json"))
        x = np.random.default_rng(0).normal(size=4)
        np.testing.assert_array_equal(
            ur.forward(net, x).output, ur.forward(back, x).output
        )

    def test_truncated_json(self, tmp_path):
        net = ur.build_fusion_stack(1, 2, seed=1)
        path = tmp_path / "g.json"
        save_graph(net, str(path))
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ur.errors.ParseError):
            load_graph(str(path))

    def test_missing_weight_file(self, tmp_path):
        net = ur.build_fusion_stack(1, 2, seed=1)
        path = tmp_path / "g.json"
        save_graph(net, str(path))
        os.remove(tmp_path / "g_w0000.csv")
        with pytest.raises(ur.errors.MissingWeights):
            load_graph(str(path))

    def test_wrong_format_flag(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(ur.errors.ParseError):
            load_graph(str(path))

    def test_unknown_op_kind(self, tmp_path):
        path = tmp_path / "g.json"
        doc = {
            "format": "unrectify-graph",
            "input": "in",
            "input_dim": 1,
            "arcs": [{"from": "in", "to": "out", "op": {"kind": "teleport"}}],
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(ur.errors.ParseError, match="teleport"):
            load_graph(str(path))

    def test_missing_arc_field(self, tmp_path):
        path = tmp_path / "g.json"
        doc = {
            "format": "unrectify-graph",
            "input": "in",
            "input_dim": 1,
            "arcs": [{"from": "in", "op": {"kind": "identity"}}],
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(ur.errors.ParseError, match="arcs\\[0\\]"):
            load_graph(str(path))

    def test_ragged_weight_csv(self, tmp_path):
        net = ur.build_fusion_stack(1, 2, seed=1)
        path = tmp_path / "g.json"
        save_graph(net, str(path))
        (tmp_path / "g_w0000.csv").write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ur.errors.ParseError):
            load_graph(str(path))


def run_twice(argv_factory, tmp_path, outputs):
    """Run a CLI invocation into two directories; compare output bytes."""
    snap = {}
    for tag in ("one", "two"):
        base = tmp_path / tag
        base.mkdir(exist_ok=True)
        assert main(argv_factory(str(base))) == 0
        snap[tag] = {name: (base / name).read_bytes() for name in outputs}
    assert snap["one"] == snap["two"]
    return snap["one"]


class TestCliDeterminism:
    def test_build_fusion_stack(self, tmp_path):
        run_twice(
            lambda base: [
                "build", "fusion-stack", "--layers", "2", "--dim", "3",
                "--seed", "11", "-o", f"{base}/g.json",
            ],
            tmp_path,
            ["g.json", "g_w0000.csv"],
        )

    def test_lower_and_eval_and_census(self, tmp_path):
        spec = {"r": [1.0, 0.5], "a": [0.0, 1.0], "l": [0.25], "t": [-1.0]}
        (tmp_path / "spec.json").write_text(json.dumps(spec))
        inputs = "\n".join(str(v) for v in np.linspace(-2, 2, 9)) + "\n"
        (tmp_path / "in.csv").write_text(inputs)

        def factory(base):
            return ["lower", "--cpwl", str(tmp_path / "spec.json"), "-o", f"{base}/frag.json"]

        run_twice(factory, tmp_path, ["frag.json"])
        base = tmp_path / "one"
        assert main([
            "eval", f"{base}/frag.json", "--input", str(tmp_path / "in.csv"),
            "--signatures", "-o", f"{base}/out.csv",
        ]) == 0
        rows = (base / "out.csv").read_text().strip().split("\n")
        assert len(rows) == 9
        assert all(len(r.split(",")) == 2 for r in rows)  # value + signature hash
        assert main([
            "census", f"{base}/frag.json", "--input", str(tmp_path / "in.csv"),
            "-o", f"{base}/census.csv",
        ]) == 0
        header = (base / "census.csv").read_text().split("\n")[0]
        assert header == "layer,channel,region_count,multi_point_count,max_intra_dist"

    def test_stability_subcommand(self, tmp_path):
        build = tmp_path / "net"
        build.mkdir()
        assert main([
            "build", "resnet", "--dim", "3", "--seed", "2", "-o", f"{build}/g.json",
        ]) == 0

        def factory(base):
            return [
                "stability", f"{build}/g.json", "--norm", "spectral",
                "--sums-csv", f"{base}/sums.csv", "-o", f"{base}/report.json",
            ]

        files = run_twice(factory, tmp_path, ["report.json", "sums.csv"])
        report = json.loads(files["report.json"])
        assert report["certified"] is False
        assert files["sums.csv"].decode().startswith("level,sum_spectral,sum_frobenius")

    def test_experiment_partition(self, tmp_path):
        files = run_twice(
            lambda base: [
                "experiment", "partition", "--layers", "2", "--dim", "4",
                "--samples", "200", "--seed", "3", "-o", f"{base}/census.csv",
            ],
            tmp_path,
            ["census.csv"],
        )
        lines = files["census.csv"].decode().strip().split("\n")
        assert lines[0] == "layer,channel,region_count,multi_point_count,max_intra_dist"
        assert len(lines) == 1 + 2 * 3  # header + layers x channels

    def test_experiment_gain(self, tmp_path):
        files = run_twice(
            lambda base: [
                "experiment", "gain", "--layers", "2", "--dim", "4",
                "--samples", "50", "--seed", "3", "--scaled",
                "--report", f"{base}/report.json", "--sums-csv", f"{base}/sums.csv",
                "-o", f"{base}/gain.csv",
            ],
            tmp_path,
            ["gain.csv", "report.json", "sums.csv"],
        )
        lines = files["gain.csv"].decode().strip().split("\n")
        assert lines[0] == "layer,max_gain"
        assert len(lines) == 3
        report = json.loads(files["report.json"])
        assert report["certified"] is True and report["m"] == 1

    def test_gain_with_no_samples_still_reports(self, tmp_path):
        base = tmp_path / "x"
        base.mkdir()
        assert main([
            "experiment", "gain", "--layers", "1", "--dim", "3", "--samples", "0",
            "--seed", "1", "--report", f"{base}/report.json", "-o", f"{base}/gain.csv",
        ]) == 0
        assert (base / "gain.csv").read_text() == "layer,max_gain\n"
        report = json.loads((base / "report.json").read_text())
        assert report["empirical_gain"] is None

    def test_census_unknown_node_exits_cleanly(self, tmp_path):
        graph = tmp_path / "g.json"
        assert main(["build", "series", "--layers", "1", "--dim", "2",
                     "--seed", "1", "-o", str(graph)]) == 0
        (tmp_path / "in.csv").write_text("0.0,0.0\n")
        with pytest.raises(SystemExit, match="ghost"):
            main(["census", str(graph), "--input", str(tmp_path / "in.csv"),
                  "--nodes", "ghost", "-o", str(tmp_path / "c.csv")])

    def test_build_fusion_from_channel_files(self, tmp_path):
        ch_path = tmp_path / "ch.json"
        channel = ur.build_series([(np.eye(2), np.zeros(2), ur.RELU)])
        save_graph(channel, str(ch_path))
        out = tmp_path / "fused.json"
        assert main([
            "build", "fusion", "--channels", f"{ch_path},{ch_path}",
            "-o", str(out),
        ]) == 0
        fused = load_graph(str(out))
        x = np.array([1.5, -0.5])
        np.testing.assert_allclose(
            ur.forward(fused, x).output,
            2 * ur.forward(channel, x).output,
            atol=1e-12,
        )

    def test_console_entry_point(self, tmp_path):
        env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
        proc = subprocess.run(
            [sys.executable, "-m", "unrectify.cli", "build", "series",
             "--layers", "1", "--dim", "2", "--seed", "1",
             "-o", str(tmp_path / "g.json")],
            capture_output=True,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        assert (tmp_path / "g.json").exists()
