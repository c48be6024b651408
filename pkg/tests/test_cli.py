import json
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from gridsim.cli import main
from gridsim.config import emit, validate_config
from gridsim.errors import ConfigError



def test_charfunc_twice_is_byte_identical(tmp_path):
    cfg = tmp_path / "gkp.json"
    cfg.write_text(json.dumps({"code": {"name": "gkp"}, "charfunc": {"points": 9, "extent": 3.0}}))
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["charfunc", "--config", str(cfg), "--seed", "1", "--out", str(d)]) == 0
        outs.append(d)
    for name in ("result.json", "charfunc.csv", "charfunc.svg"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    doc = json.loads((outs[0] / "result.json").read_text())
    assert doc["config"]["code"]["delta"] == 0.3  # resolved, not the raw input
    assert doc["config"]["dims"] == [80]
    assert doc["config"]["seed"] == 1


def test_lifetime_without_loss_reports_sentinel(tmp_path):
    out = tmp_path / "lt"
    rc = main(["lifetime", "--seed", "0", "--out", str(out), "--set", "lifetime.rounds=8",
               "--set", "lifetime.control=false"])
    assert rc == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["result"]["qec"]["gain"] == "inf"
    assert (out / "lifetime.svg").exists()


def test_sweep_over_delta(tmp_path):
    out = tmp_path / "sw"
    rc = main(["sweep", "--seed", "2", "--out", str(out), "--set", "sweep.experiment=charfunc",
               "--set", "sweep.values=[0.25, 0.3, 0.35]", "--set", "charfunc.points=5"])
    assert rc == 0
    for i, delta in enumerate((0.25, 0.3, 0.35)):
        doc = json.loads((out / f"point_{i:03d}" / "result.json").read_text())
        assert doc["config"]["code"]["delta"] == delta
    lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 4 and lines[0].startswith("index,code.delta")


def test_replot_regenerates_identical_svg(tmp_path):
    out = tmp_path / "cf"
    assert main(["charfunc", "--seed", "0", "--out", str(out), "--set", "charfunc.points=5"]) == 0
    svg = (out / "charfunc.svg").read_bytes()
    (out / "charfunc.svg").unlink()
    assert main(["replot", str(out)]) == 0
    assert (out / "charfunc.svg").read_bytes() == svg


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["charfunc"], "seed"),
        (["charfunc", "--seed", "1", "--set", "code.delta=1.5"], "(0,1)"),
        (["charfunc", "--seed", "1", "--set", "noise.aux_T1=1e-5", "--set", "noise.aux_T2=3e-5"], "aux_T2"),
        (["charfunc", "--seed", "1", "--set", "foo.bar=1"], "foo.bar"),
        (["charfunc", "--seed", "1", "--set", "code.nme=gkp"], "code.nme"),
    ],
)
def test_config_errors_exit_two(tmp_path, capsys, argv, needle):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    assert needle in capsys.readouterr().err
    assert not (tmp_path / "result.json").exists()


def test_unknown_key_in_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 1, "noise": {"kapa": 1.0}}))
    assert main(["stabilize", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "noise.kapa" in err and "unknown key" in err


def test_numeric_failure_exit_three(tmp_path, capsys):
    assert main(["charfunc", "--seed", "1", "--out", str(tmp_path), "--set", "dims=[10]"]) == 3
    assert "ConstructionQualityError" in capsys.readouterr().err


def test_validate_messages():
    with pytest.raises(ConfigError) as e:
        validate_config({"experiment": "charfunc"})
    assert e.value.path == "seed"
    with pytest.raises(ConfigError) as e:
        validate_config({"experiment": "charfunc", "seed": 0, "code": {"delta": 1.5}})
    assert "code.delta" in str(e.value) and "(0,1)" in str(e.value)
    with pytest.raises(ConfigError) as e:
        validate_config({"experiment": "charfunc", "seed": 0, "noise": {"aux_T1": 1.0, "aux_T2": 2.5}})
    assert "aux_T2" in str(e.value)


_raw_configs = st.fixed_dictionaries(
    {
        "experiment": st.sampled_from(["prepare", "stabilize", "lifetime", "isthmus", "lossprobe", "charfunc"]),
        "seed": st.integers(0, 2**31),
        "code": st.fixed_dictionaries(
            {"name": st.sampled_from(["gkp", "tesseract"])},
            optional={"delta": st.floats(0.2, 0.6)},
        ),
    },
    optional={
        "noise": st.fixed_dictionaries({}, optional={"kappa": st.floats(0, 1e4), "aux_T1": st.floats(1e-6, 1e-3)}),
        "lifetime": st.fixed_dictionaries({}, optional={"rounds": st.integers(7, 500)}),
    },
)


@settings(max_examples=40, deadline=None)
@given(_raw_configs)
def test_resolved_config_round_trip(raw):
    once = validate_config(raw)
    twice = validate_config(emit(once))
    assert emit(twice) == emit(once)


def test_thread_count_does_not_change_bytes(tmp_path):
    digests = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}"
        env = dict(os.environ, GRIDSIM_THREADS=threads)
        subprocess.run(
            [sys.executable, "-m", "gridsim.cli", "lossprobe", "--seed", "4", "--out", str(out),
             "--set", "lossprobe.shots=120", "--set", "lossprobe.ensemble_shots=120",
             "--set", "lossprobe.recovery_rounds=4"],
            check=True, env=env, capture_output=True,
        )
        digests.append((out / "result.json").read_bytes())
    assert digests[0] == digests[1]
