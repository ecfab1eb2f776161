"""Command line interface: parsing, dispatch, exit codes, file output."""

import json

import pytest

from arwlab.cli import CliError, build_parser, main


def test_all_subcommands_parse():
    parser = build_parser()
    for argv in (
        ["stabilize", "--n", "5", "--mu", "0.3"],
        ["fixation-scan", "--n-list", "4,6", "--replicas", "2"],
        ["mn-scan", "--n-list", "4"],
        ["phase-scan", "--n-list", "4", "--mu-list", "0.2", "--lambda-list", "1.0"],
        ["idla", "--beta", "0.05", "--radius", "4"],
        ["chain-bound", "--n", "8", "--k-max", "3"],
        ["staged", "--n", "20", "--c", "6.0"],
        ["bounds", "--mu", "0.5", "--lam", "0.5"],
    ):
        assert parser.parse_args(argv).command == argv[0]


def test_unknown_flag_raises_cli_error():
    with pytest.raises(CliError):
        build_parser().parse_args(["stabilize", "--bogus", "1"])
    assert main(["stabilize", "--bogus", "1"]) == 1


def test_missing_required_input_exits_1(capsys):
    # fixation-scan without n_list fails spec validation
    assert main(["fixation-scan", "--replicas", "2"]) == 1
    assert "error:" in capsys.readouterr().err


def test_io_failure_exits_2(tmp_path):
    out = str(tmp_path / "no" / "such" / "dir" / "x")
    code = main(["stabilize", "--n", "4", "--mu", "0.2", "--seed", "3", "--out", out])
    assert code == 2


def test_bounds_json_output(capsys):
    assert main(["bounds", "--mu", "0.5", "--lam", "1e-5", "--d", "1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["kappa"] == pytest.approx(2 * 54.598150033144236)
    assert payload["satisfied"] is True
    assert payload["c"] is not None and payload["a"] is not None


def test_bounds_unsatisfied_has_no_stage_params(capsys):
    assert main(["bounds", "--mu", "0.5", "--lam", "0.5", "--d", "1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["satisfied"] is False
    assert payload["c"] is None and payload["a"] is None and payload["epsilon"] is None


def test_stabilize_writes_outputs(tmp_path, capsys):
    out = str(tmp_path / "one")
    code = main(["stabilize", "--n", "5", "--d", "1", "--mu", "0.4",
                 "--lam", "1.0", "--seed", "2", "--out", out])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["stabilized"] is True
    with open(out + ".json") as fh:
        assert json.load(fh)["stabilized"] is True
    with open(out + ".manifest.json") as fh:
        manifest = json.load(fh)
    assert manifest["spec"]["kind"] == "stabilize"
    assert manifest["spec"]["seed"] == 2


def test_fixation_scan_cli_writes_csv(tmp_path, capsys):
    out = str(tmp_path / "scan")
    code = main(["fixation-scan", "--n-list", "4,6", "--mu", "0.3",
                 "--lam", "1.0", "--replicas", "2", "--seed", "5", "--out", out])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["kind"] == "fixation"
    with open(out + ".csv") as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("seed,d,n,mu,lambda")
    assert len(lines) == 5


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps({"n_list": [4], "mu": 0.3, "lam": 1.0,
                               "replicas": 2, "seed": 9}))
    assert main(["fixation-scan", "--config", str(cfg), "--replicas", "3"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["per_n"][0]["replicas"] == 3  # flag beat the file
    assert summary["mu"] == 0.3  # file value survived


def test_config_file_must_be_object(tmp_path):
    cfg = tmp_path / "spec.json"
    cfg.write_text("[1, 2]")
    assert main(["fixation-scan", "--config", str(cfg)]) == 1


def test_missing_config_file_exits_2():
    assert main(["fixation-scan", "--config", "/nonexistent/spec.json"]) == 2
