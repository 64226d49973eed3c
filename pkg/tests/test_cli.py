"""Command line interface: parsing, validation, provenance, determinism."""

import math

import numpy as np
import pytest

from fraclap.cli import (DOMAINS, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION,
                         PRESETS, ValidationError, build_config, list_presets,
                         main, parse_config_text, run)


def test_parse_config_text_comments_and_blanks():
    raw = parse_config_text(
        "# full line comment\n"
        "problem = linear   # trailing comment\n"
        "\n"
        "s = 0.3, 0.5\n")
    assert raw == {"problem": "linear", "s": "0.3, 0.5"}


def test_parse_config_text_rejects_bad_line():
    with pytest.raises(ValidationError, match="line 1"):
        parse_config_text("not a key value pair\n")


def test_build_config_defaults_and_values():
    cfg = build_config({"problem": "linear", "s": "0.5", "domain": "disk",
                        "mu": "2", "levels": "4"})
    assert cfg.s_values == (0.5,)
    assert cfg.mu == 2.0 and cfg.levels == 4
    assert cfg.ratio == 0.5 and cfg.tol == 1e-6


@pytest.mark.parametrize("raw,frag", [
    ({"problem": "bogus", "s": "0.5"}, "problem"),
    ({"problem": "linear"}, "'s'"),
    ({"problem": "linear", "s": "1.5"}, "admissible"),
    ({"problem": "graph", "s": "0.75", "preset": "ex-1d-sign"}, "admissible"),
    ({"problem": "linear", "s": "0.5", "domain": "cube"}, "domain"),
    ({"problem": "dt", "s": "0.5", "domain": "disk"}, "one-dimensional"),
    ({"problem": "linear", "s": "abc"}, "'s'"),
    ({"problem": "linear", "s": "0.5", "levels": "0"}, "levels"),
    ({"problem": "graph", "s": "0.25", "preset": "nope"}, "preset"),
])
def test_build_config_validation_errors(raw, frag):
    with pytest.raises(ValidationError, match=frag):
        build_config(raw)


def test_graph_s_range_is_half_open_interval():
    cfg = build_config({"problem": "graph", "s": "0.25",
                        "preset": "ex-1d-sign"})
    assert cfg.s_values == (0.25,)


def test_list_presets_mentions_all():
    text = list_presets()
    for d in DOMAINS:
        assert d in text
    for name in PRESETS:
        assert name in text


def test_main_list_presets(capsys):
    assert main(["list-presets"]) == EXIT_OK
    assert "presets:" in capsys.readouterr().out


def test_main_validation_exit(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("problem = linear\ns = 3.0\n")
    assert main(["run", str(bad)]) == EXIT_VALIDATION
    assert "validation error" in capsys.readouterr().err


def test_main_missing_config_file(capsys):
    assert main(["run", "/no/such/file.cfg"]) == EXIT_VALIDATION
    assert "not found" in capsys.readouterr().err


def test_run_linear_interval_writes_provenance(tmp_path, capsys):
    cfg_file = tmp_path / "lin.cfg"
    cfg_file.write_text(
        "problem = linear\ndomain = interval\ns = 0.5\n"
        "levels = 3\nstart_level = 1\n")
    code = main(["run", str(cfg_file), "--out", str(tmp_path / "out")])
    assert code == EXIT_OK
    written = capsys.readouterr().out.strip().splitlines()
    assert written, "expected at least one output file"
    lines = open(written[0]).read().splitlines()
    assert lines[0].startswith("# schema=") and "version=1" in lines[0]
    assert lines[1].startswith("# package=fraclap")
    assert lines[2].startswith("# timestamp=")
    config_lines = [l for l in lines if l.startswith("# config ")]
    assert any("problem=linear" in l for l in config_lines)
    # body is a rate table with a header row
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == "level,h,N,error,rate"
    # fitted rate recorded and sane for s = 1/2 on uniform meshes
    fitted = [l for l in lines if l.startswith("# fitted_rate")]
    assert fitted
    rate = float(fitted[0].split("=")[-1])
    assert abs(rate - 0.5) < 0.15


def test_run_same_config_is_deterministic(tmp_path):
    raw = {"problem": "linear", "domain": "interval", "s": "0.5",
           "levels": "2", "start_level": "1"}
    cfg = build_config(raw)
    out1 = run(cfg, out_dir=tmp_path / "a")
    out2 = run(cfg, out_dir=tmp_path / "b")

    def strip(path):
        return [l for l in open(path).read().splitlines()
                if not l.startswith("# timestamp=")]

    assert [strip(p) for p in out1] == [strip(p) for p in out2]


def test_run_graph_preset_writes_solution_and_stickiness(tmp_path):
    raw = dict(PRESETS["ex-1d-sign"])
    raw["levels"] = "1"
    cfg = build_config(raw)
    files = run(cfg, out_dir=tmp_path)
    names = [p.name for p in files]
    assert any(n.startswith("stickiness") for n in names)
    sol = [p for p in files if "stickiness" not in p.name][0]
    body = [l for l in open(sol).read().splitlines() if not l.startswith("#")]
    assert body[0].split(",")[0] == "x"
    vals = np.array([[float(v) for v in l.split(",")] for l in body[1:]])
    assert np.isfinite(vals).all()
