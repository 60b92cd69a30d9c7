import pytest

from contactpy import (
    ConfigError,
    Site,
    load_config,
    parse_config,
    point,
    rect,
)


def test_minimal_document():
    cfg = parse_config("spec = point(2.0)\ntrials = 500\n")
    assert cfg.spec == point(2.0)
    assert (cfg.h, cfg.trials, cfg.mode) == (4, 500, "annealed")


def test_values_are_parsed():
    cfg = parse_config(
        "# survival of a pair\n"
        "spec = two_point(1, 2, 0.5)\n"
        "t_grid = 1, 2.5   # times\n"
        "initial = 0, 1+2i\n"
        "orientation = -1+i\n"
        "window = 0:1+1i\n"
        "plot = yes\n"
        "cell = none\n"
        "mode = quenched\n"
    )
    assert cfg.t_grid == (1.0, 2.5)
    assert cfg.initial == (Site(0, 0), Site(1, 2))
    assert cfg.orientation == (-1, 1)
    assert cfg.window == rect(0, 1 + 1j)
    assert cfg.plot is True
    assert cfg.cell is None
    assert cfg.mode == "quenched"


def test_all_problems_are_reported():
    with pytest.raises(ConfigError) as info:
        parse_config("spec = point(-1)\ntrails = 3\ndim = 2\nh = 0\n")
    diagnostics = info.value.diagnostics
    assert len(diagnostics) == 4
    assert any("unknown key 'trails'" in d for d in diagnostics)
    assert any("only d=1 implemented" in d for d in diagnostics)
    assert any(d.startswith("<config>:1: spec") for d in diagnostics)


@pytest.mark.parametrize("document, message", [
    ("trials = 5\n", "missing mandatory key 'spec'"),
    ("spec = point(1)\nspec = point(2)\n", "already set on line 1"),
    ("spec = point(1)\nwindow = 0:12\n", "at most 12"),
    ("spec = point(1)\nplot = maybe\n", "not a boolean"),
    ("spec = point(1)\nmode = frozen\n", "annealed or quenched"),
    ("spec = point(1)\ntrials\n", "expected 'key = value'"),
    ("spec = point(1)\neps = 1.5\n", "eps=1.5"),
    ("spec = point(1)\nr = 5\nw = 3\n", "must not exceed"),
    ("spec = point(1)\nseed = -4\n", "unsigned 64-bit"),
    ("spec = point(1)\nt_grid = 0, 1\n", "must be positive"),
    ("spec = point(1)\norientation = 2+i\n", "orientation"),
])
def test_invalid_documents(document, message):
    with pytest.raises(ConfigError) as info:
        parse_config(document)
    assert any(message in d for d in info.value.diagnostics)


def test_echo_leaves_out_execution_keys():
    cfg = parse_config("spec = point(2.0)\nout = results\nparallelism = 4\n")
    echo = cfg.echo()
    assert "out" not in echo and "parallelism" not in echo
    assert echo["spec"] == "point(2.0)"
    assert echo["orientation"] == "1+i"
    assert echo["initial"] == ["0"]
    assert echo["window"] == "0:2+1i"
    assert echo["t_grid"] == [5.0, 10.0, 20.0, 40.0]
    assert cfg.echo(include_execution=True)["parallelism"] == 4


def test_overrides():
    cfg = parse_config("spec = point(2.0)\n").with_overrides(out="elsewhere")
    assert cfg.out == "elsewhere"


def test_load_config(tmp_path):
    fname = tmp_path / "exp.cfg"
    fname.write_text("spec = uniform(1, 2)\nh = 3\n")
    assert load_config(fname).h == 3
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.cfg")
    fname.write_text("spec = uniform(1, 2)\nbogus = 1\n")
    with pytest.raises(ConfigError) as info:
        load_config(fname)
    assert info.value.diagnostics[0].startswith(str(fname))
