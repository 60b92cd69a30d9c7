import json
import math

import numpy as np
import pandas as pd
import pytest

from contactpy import (
    FormatError,
    Hist1d,
    load_1d_from_txt,
    load_rep,
    parse_rep,
    rect,
    sample_rep,
    save_1d_as_txt,
    save_rep,
    save_sweep_as_txt,
    work_out_bin_edges,
    write_summary,
    write_table,
)


def test_sweep_file(tmp_path):
    fname = tmp_path / "survival.txt"
    save_sweep_as_txt([1.0, 2.0, 4.0], [0.9, 0.7, 0.5], fname)
    x, y = load_1d_from_txt(fname)
    assert x.tolist() == [1.0, 2.0, 4.0]
    assert y.tolist() == [0.9, 0.7, 0.5]
    with pytest.raises(ValueError):
        save_sweep_as_txt([1.0], [0.9, 0.7], fname)


def test_histogram_file(tmp_path):
    fname = tmp_path / "F1.txt"
    save_1d_as_txt(np.array([2.0, 5.0]), np.array([0.0, 1.0, 2.0]), fname)
    hist = load_1d_from_txt(fname, "Hist1d")
    assert isinstance(hist, Hist1d)
    assert hist.edges.tolist() == [0.0, 1.0, 2.0]
    with pytest.raises(ValueError):
        load_1d_from_txt(fname, "DataFrame")


def test_bin_edges():
    assert work_out_bin_edges(np.array([0.5, 1.5])).tolist() == [0.0, 1.0, 2.0]
    assert work_out_bin_edges(np.array([1.0, 3.0]), lower=0.0).tolist() == \
        [0.0, 2.0, 4.0]
    with pytest.raises(ValueError):
        work_out_bin_edges(np.array([0.5, 1.0, 3.0]))


def test_rep_file_round_trip(tmp_path, random_env, stream):
    rep = sample_rep(random_env, rect(0, 2 + 1j), 2.0, stream)
    fname = tmp_path / "rep.txt"
    save_rep(rep, fname)
    back = load_rep(fname)
    assert back.times.tolist() == rep.times.tolist()
    assert back.kinds.tolist() == rep.kinds.tolist()
    assert back.region == rep.region


@pytest.mark.parametrize("document", [
    "horizon=2\nD 0 0 1.0\n",
    "region=0:1\nhorizon=2\nX 0 0 1.0\n",
    "region=0:1\nhorizon=2\nD 0 0 soon\n",
    "region=0:1\nhorizon=2\nD 5 0 1.0\n",
    "region=0:1\nhorizon=2\ncolour=red\n",
])
def test_malformed_rep(document):
    with pytest.raises(FormatError):
        parse_rep(document)


def test_write_table(tmp_path):
    fname = tmp_path / "rows.csv"
    rows = [{"t": 1.0, "estimate": 0.25}, {"t": 2.0, "estimate": 0.125}]
    write_table(rows, fname)
    df = pd.read_csv(fname)
    assert list(df.columns) == ["t", "estimate"]
    assert df["estimate"].tolist() == [0.25, 0.125]


def test_write_summary(tmp_path):
    fname = tmp_path / "summary.json"
    write_summary({"spec": "point(1.0)"},
                  {"p": np.float64(0.5), "gap": math.nan, "grid": np.arange(2),
                   "window": rect(0, 1)},
                  {"seed": 3}, fname)
    payload = json.loads(fname.read_text())
    assert set(payload) == {"config", "results", "diagnostics"}
    assert payload["results"] == {"p": 0.5, "gap": None, "grid": [0, 1],
                                  "window": "0:1"}
