import csv
import json
import math
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twopatch.cli import (EXIT_INADMISSIBLE, EXIT_OK, EXIT_USAGE, ConfigError, FrontSettings,
                          GridSpec, RunConfig, SweepAxis, load_config, main, sweep_rows)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def p0_dict():
    return json.loads((CONFIGS / "p0.json").read_text())


def small_front_dict():
    d = p0_dict()
    d["model"]["reaction_right"]["K"] = 2.0
    d["grid"] = {"x_left": -100.0, "x_right": 60.0, "h": 0.1}
    d["front"] = {"schedule": [12, 14], "t_end": 12.0, "export_every": 6.0}
    return d


def test_roundtrip_through_json():
    cfg = load_config(CONFIGS / "sigma2.json")
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert again.to_dict() == cfg.to_dict()


@settings(max_examples=50, deadline=None)
@given(st.floats(-200, -1), st.floats(1, 200), st.lists(st.integers(1, 200), max_size=4),
       st.floats(0.1, 100), st.one_of(st.none(), st.floats(0.05, 0.95)))
def test_roundtrip_random(xl, xr, sched, t_end, theta):
    base = load_config(CONFIGS / "p0.json")
    cfg = replace(base, grid=GridSpec(xl, xr, 0.05),
                  front=FrontSettings(tuple(sched), t_end, 1e-6, theta, 5.0),
                  sweep=(SweepAxis("mu2", 1.0, 1.6, 7),))
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_validate_p0(tmp_path, capsys):
    assert main(["validate", str(CONFIGS / "p0.json"), "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "lambda2 = 0.6324555" in out
    rep = json.loads((tmp_path / "validate.json").read_text())
    assert rep["dispersion"]["lambda2"] == pytest.approx(math.sqrt(0.4))
    assert (tmp_path / "manifest.json").exists()


def test_validate_degenerate(tmp_path, capsys):
    d = p0_dict()
    d["model"]["d2"] = 1.0
    assert main(["validate", write(tmp_path, d), "--out", str(tmp_path)]) == EXIT_INADMISSIBLE
    assert "degenerate denominator" in capsys.readouterr().out


def test_malformed_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"model": {')
    assert main(["validate", str(path)]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "bad.json:1:" in err


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["grid"].update(spacing=0.1),
    lambda d: d.pop("model"),
    lambda d: d["model"].pop("d1"),
    lambda d: d.update(sweep=[{"parameter": "zeta", "start": 0, "stop": 1, "num": 2}]),
])
def test_config_errors(tmp_path, mutate):
    d = p0_dict()
    mutate(d)
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, d))
    assert main(["validate", write(tmp_path, d)]) == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert main(["nonsense", str(CONFIGS / "p0.json")]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["sweep", str(CONFIGS / "p0.json"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_front_rejects_small_schedule_before_compute(tmp_path, capsys):
    d = p0_dict()
    d["front"]["schedule"] = [5]
    assert main(["front", write(tmp_path, d), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    assert "do not exceed T" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def read_sweep(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sweep_mu2(tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", str(CONFIGS / "sweep_mu2.json"), "--out", str(out)]) == EXIT_OK
    rows = read_sweep(out / "sweep.csv")
    assert len(rows) == 13
    for r in rows:
        mu2 = float(r["mu2"])
        assert (r["admissible"] == "true") == (1.0 < mu2 < 1.5)
        assert "nan" not in r.values()


def test_sweep_values_formula():
    ax = SweepAxis("mu2", 1.0, 1.6, 13)
    assert ax.values() == [1.0 + (1.6 - 1.0) * k / 12 for k in range(13)]
    assert SweepAxis("mu2", 1.0, 1.6, 1).values() == [1.0]


def test_sweep_empty_range(tmp_path):
    d = json.loads((CONFIGS / "sweep_mu2.json").read_text())
    d["sweep"][0]["num"] = 0
    out = tmp_path / "e"
    assert main(["sweep", write(tmp_path, d), "--out", str(out)]) == EXIT_OK
    assert (out / "sweep.csv").read_text().splitlines() == [
        "d1,d2,sigma,mu1,mu2,K1,K2,lambda1,lambda2,c1,c2,admissible"]


def test_sweep_across_degenerate_diffusivity(tmp_path):
    d = json.loads((CONFIGS / "sweep_mu2.json").read_text())
    d["sweep"] = [{"parameter": "d2", "start": 0.5, "stop": 1.5, "num": 11}]
    rows = sweep_rows(RunConfig.from_dict(d), parallel=4)
    assert rows == sweep_rows(RunConfig.from_dict(d))
    flagged = [r for r in rows if r[1] == 1.0]
    assert flagged and flagged[0][-1] is False
    for r in rows:
        assert all(not (isinstance(v, float) and math.isnan(v)) for v in r)


def test_light_commands(tmp_path):
    d = p0_dict()
    d["model"]["reaction_right"]["K"] = 2.0
    d["grid"] = {"x_left": -60.0, "x_right": 60.0, "h": 0.1}
    cfg = write(tmp_path, d)
    for cmd, files in (("speeds", ["constants.json"]),
                       ("wave", ["wave_left.csv", "wave_right.csv", "wave.json"]),
                       ("stationary", ["stationary.csv", "stationary.json"]),
                       ("bounds-check", ["bounds.json", "envelopes_0.csv"])):
        out = tmp_path / cmd
        assert main([cmd, cfg, "--out", str(out)]) == EXIT_OK, cmd
        for f in files + ["manifest.json"]:
            assert (out / f).exists(), (cmd, f)
    st = json.loads((tmp_path / "stationary" / "stationary.json").read_text())
    assert st["strictly_monotone"] in (True, False)
    assert abs(st["V_right"] - 2.0) < 1e-3


def test_h_override(tmp_path):
    d = p0_dict()
    d["grid"] = {"x_left": -20.0, "x_right": 20.0, "h": 0.1}
    out = tmp_path / "st"
    assert main(["stationary", write(tmp_path, d), "--out", str(out), "--h", "0.05"]) == EXIT_OK
    assert json.loads((out / "stationary.json").read_text())["grid"]["h"] == 0.05


def test_front_artifacts_and_determinism(tmp_path):
    cfg = write(tmp_path, small_front_dict())
    codes = [main(["front", cfg, "--out", str(tmp_path / k), "--parallel", p])
             for k, p in (("a", "2"), ("b", "1"))]
    assert codes[0] == codes[1]
    a, b = tmp_path / "a", tmp_path / "b"
    names = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert names == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n
    speeds = json.loads((a / "speeds.json").read_text())
    for key in ("closed_form", "measured", "relative_error"):
        assert key in speeds
    assert set(speeds["relative_error"]) >= {"c1_hat", "c2_hat", "lambda2_hat"}
    with open(a / "front_track.csv") as fh:
        assert next(csv.reader(fh)) == ["t", "X_theta"]
    man = json.loads((a / "manifest.json").read_text())
    assert man["snapshots"] and all((a / s["file"]).exists() for s in man["snapshots"])
