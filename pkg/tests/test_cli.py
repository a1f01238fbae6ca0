"""Command-line behavior: presets, formats, determinism and exit codes."""

import json

import numpy as np
import pytest

from qmerge.cli import main
from qmerge.core import partial_trace
from qmerge.presets import load_channel_file, parse_state


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


IDENTITY_CHANNEL = {
    "input": "B", "output": "U", "out_dim": 2, "env_dim": 1,
    "re": [1.0, 0.0, 0.0, 1.0], "im": [0.0, 0.0, 0.0, 0.0],
}


class TestParseState:
    def test_epr_amplitudes(self):
        psi = parse_state("epr")
        np.testing.assert_allclose(psi.amplitudes,
                                   np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-12)

    def test_cc_pure_is_the_printed_purification(self):
        psi = parse_state("cc-pure")
        expected = np.zeros(8)
        expected[0] = expected[7] = 1 / np.sqrt(2)
        np.testing.assert_allclose(psi.amplitudes, expected, atol=1e-12)
        assert psi.layout.labels == ("A", "B", "R")

    def test_cc_matches_cc_pure_reduction(self):
        rho = parse_state("cc")
        reduced = partial_trace(parse_state("cc-pure").density(), ("A", "B"))
        assert np.abs(rho.matrix - reduced.matrix).max() < 1e-12

    def test_random_pure_is_deterministic(self):
        a = parse_state("random-pure:2x2x2:42")
        b = parse_state("random-pure:2x2x2:42")
        assert a.amplitudes.tobytes() == b.amplitudes.tobytes()
        assert a.layout.labels == ("A", "B", "R")

    def test_ghz_labels(self):
        psi = parse_state("ghz:4")
        assert psi.layout.labels == ("A", "B", "C1", "C2")

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            parse_state("nope")

    def test_state_file_round_trip(self, tmp_path):
        path = tmp_path / "state.json"
        amps = np.array([1, 0, 0, 1]) / np.sqrt(2)
        path.write_text(json.dumps({
            "labels": ["A", "B"], "dims": [2, 2], "kind": "pure",
            "re": list(amps.real), "im": list(amps.imag),
        }))
        psi = parse_state(str(path))
        np.testing.assert_allclose(psi.amplitudes, amps, atol=1e-12)

    def test_state_file_norm_gate(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "labels": ["A"], "dims": [2], "kind": "pure",
            "re": [1.0, 1.0], "im": [0.0, 0.0],
        }))
        with pytest.raises(ValueError, match="norm"):
            parse_state(str(path))

    def test_malformed_file_reports_line_and_column(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"labels": [,]}')
        with pytest.raises(ValueError, match=r":1:\d+"):
            parse_state(str(path))

    def test_channel_file_column_major(self, tmp_path):
        path = tmp_path / "chan.json"
        path.write_text(json.dumps(IDENTITY_CHANNEL))
        ch = load_channel_file(str(path))
        np.testing.assert_allclose(ch.isometry, np.eye(2), atol=1e-12)


class TestEntropyCommand:
    @pytest.mark.parametrize("state,expected", [
        ("epr", "-1.000000000000"),
        ("example1", "+1.000000000000"),
        ("cc", "+0.000000000000"),
    ])
    def test_worked_examples_formatting(self, capsys, state, expected):
        code, out, _ = run_cli(capsys, "entropy", "--state", state,
                               "--of", "A", "--given", "B")
        assert code == 0
        assert out == expected + "\n"

    def test_plain_subset_entropy(self, capsys):
        code, out, _ = run_cli(capsys, "entropy", "--state", "epr", "--of", "A")
        assert code == 0 and out.strip() == "+1.000000000000"


class TestMergeCommand:
    def test_exhaustive_hadamard_cc(self, capsys):
        code, out, _ = run_cli(capsys, "merge", "--state", "cc-pure", "-n", "1",
                               "--seed", "1", "--exhaustive", "--basis", "hadamard",
                               "--slack", "0")
        assert code == 0
        doc = json.loads(out)
        assert doc["plan"]["outcome_count"] == 2
        for outcome in doc["outcomes"]:
            assert abs(outcome["achieved_fidelity"] - 1.0) < 1e-6
            assert outcome["cbits"] == 1.0
            assert outcome["epr_net_bits"] == 0.0

    def test_seeded_runs_byte_identical(self, capsys):
        argv = ("merge", "--state", "random-pure:2x2x2:3", "-n", "2",
                "--seed", "42", "--trials", "4")
        _, first, _ = run_cli(capsys, *argv)
        _, second, _ = run_cli(capsys, *argv)
        assert first.encode() == second.encode()

    def test_outcome_json_round_trip(self, capsys):
        _, out, _ = run_cli(capsys, "merge", "--state", "epr", "-n", "1",
                            "--seed", "5", "--slack", "0")
        doc = json.loads(out)
        reparsed = json.loads(json.dumps(doc))
        assert reparsed == doc

    def test_curve_csv_has_header(self, capsys):
        code, out, _ = run_cli(capsys, "merge", "--state", "epr", "--seed", "1",
                               "--curve", "1..2", "--trials", "2",
                               "--format", "csv", "--slack", "0")
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("n,trials,block_dim")
        assert len(lines) == 3

    def test_empty_curve_is_header_only_csv(self, capsys):
        code, out, _ = run_cli(capsys, "merge", "--state", "epr", "--seed", "1",
                               "--curve", "3..2", "--format", "csv")
        assert code == 0
        assert out.splitlines() == ["n,trials,block_dim,outcome_count,k_boost,"
                                    "epr_net_bits,cbits,fidelity_mean,fidelity_median,"
                                    "fidelity_min,decoupling_mean,decoupling_median,"
                                    "decoupling_min,skipped"]

    def test_mixed_state_is_usage_error(self, capsys):
        code, out, err = run_cli(capsys, "merge", "--state", "cc", "-n", "1", "--seed", "1")
        assert code == 2 and out == "" and "pure" in err

    def test_dim_cap_flag_exit_code(self, capsys):
        code, out, err = run_cli(capsys, "merge", "--state", "epr", "-n", "4",
                                 "--seed", "1", "--dim-cap", "32")
        assert code == 3 and out == ""

    def test_env_cap_respected(self, capsys, monkeypatch):
        monkeypatch.setenv("QMERGE_DIM_CAP", "32")
        code, out, _ = run_cli(capsys, "merge", "--state", "epr", "-n", "4", "--seed", "1")
        assert code == 3 and out == ""

    def test_flag_beats_env(self, capsys, monkeypatch):
        monkeypatch.setenv("QMERGE_DIM_CAP", "32")
        code, _, _ = run_cli(capsys, "merge", "--state", "epr", "-n", "4",
                             "--seed", "1", "--dim-cap", "1048576")
        assert code == 0


class TestRegionCommand:
    def test_epr_region_constraints(self, capsys):
        _, out, _ = run_cli(capsys, "region", "--state", "epr")
        doc = json.loads(out)
        bounds = {c["subset"]: c["bound"] for c in doc["constraints"]}
        assert abs(bounds["A"] + 1.0) < 1e-9
        assert abs(bounds["B"] + 1.0) < 1e-9
        assert abs(bounds["A,B"]) < 1e-9
        assert len(doc["corner_points"]) == 2

    def test_point_membership(self, capsys):
        _, out, _ = run_cli(capsys, "region", "--state", "epr", "--point=-1,1")
        doc = json.loads(out)
        assert doc["point"]["contained"] is True
        _, out, _ = run_cli(capsys, "region", "--state", "epr", "--point=-2,0")
        doc = json.loads(out)
        assert doc["point"]["contained"] is False
        assert "A" in doc["point"]["violations"]

    def test_mac_flag_infers_decoder_group(self, capsys):
        _, out, _ = run_cli(capsys, "region", "--state", "ghz:3", "--mac")
        doc = json.loads(out)
        assert doc["kind"] == "mac"
        assert [c["subset"] for c in doc["constraints"]] == ["A", "B", "A,B"]


class TestEoaCommand:
    def test_ghz4(self, capsys):
        code, out, _ = run_cli(capsys, "eoa", "--state", "ghz:4",
                               "--alice", "A", "--bob", "B")
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["value"] - 1.0) < 1e-9
        assert len(doc["cuts"]) == 4


class TestSideinfoCommand:
    def test_identity_channel(self, capsys, tmp_path):
        path = tmp_path / "chan.json"
        path.write_text(json.dumps(IDENTITY_CHANNEL))
        code, out, _ = run_cli(capsys, "sideinfo", "--state", "cc-pure",
                               "--channel", str(path), "--seed", "2",
                               "--restarts", "2")
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["r_a"]) < 1e-9
        assert doc["ep"]["restarts_used"] == 2

    def test_deterministic(self, capsys, tmp_path):
        path = tmp_path / "chan.json"
        path.write_text(json.dumps(IDENTITY_CHANNEL))
        argv = ("sideinfo", "--state", "cc-pure", "--channel", str(path),
                "--seed", "7", "--restarts", "2")
        _, first, _ = run_cli(capsys, *argv)
        _, second, _ = run_cli(capsys, *argv)
        assert first == second


class TestErrorPaths:
    def test_unknown_preset_exits_2_with_empty_stdout(self, capsys):
        code, out, err = run_cli(capsys, "entropy", "--state", "nope", "--of", "A")
        assert code == 2 and out == "" and "unknown preset" in err

    def test_unknown_label_exits_2(self, capsys):
        code, out, err = run_cli(capsys, "entropy", "--state", "epr", "--of", "Z")
        assert code == 2 and out == ""

    def test_usage_error_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["entropy", "--state", "epr"])  # missing --of
        assert exc.value.code == 2
