import io
import json
from pathlib import Path

import pytest

from fracdiff.cli import ExperimentConfig, cmd_constants, main
from fracdiff.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """
[problem]
s = 0.8
n = 0.2
"""


def test_constants_prints_table():
    buf = io.StringIO()
    assert cmd_constants(0.8, 0.2, out=buf) == 0
    text = buf.getvalue()
    assert "C(n, s)" in text and "0.1771239234" in text
    assert "2.5" in text


def test_constants_exit_codes(capsys):
    assert main(["constants", "--s", "0.8", "--n", "0.2"]) == 0
    assert main(["constants", "--s", "0.6", "--n", "0.5"]) == 2
    assert "outside existence range" in capsys.readouterr().err
    assert main(["constants", "--s", "abc", "--n", "0.2"]) == 1
    assert main(["nonsense"]) == 1


def test_config_parsing():
    cfg = ExperimentConfig.from_text(BASE + "[ladder]\nstart = 1e-3\nratio = 0.1\ncount = 3\n"
                                     "[stepper]\nt_end = 2\noutput_times = 0.5, 1, 2\n")
    assert cfg.eps_values == [1e-3, 1e-4, 1e-5]
    assert cfg.t_end == 2.0 and cfg.output_times == [0.5, 1.0, 2.0]
    over = ExperimentConfig.from_text(BASE, {"s": 0.9})
    assert over.s == 0.9


@pytest.mark.parametrize("extra", [
    "[grid]\nwidth = 3\n",
    "[bogus]\nx = 1\n",
    "[grid]\nn_points = many\n",
    "[grid]\nn_points = 100\n",
    "[ladder]\neps = 1e-4 1e-3\n",
    "[ladder]\neps = 1e-3\ncount = 2\n",
    "[data]\nkind = gaussian\n",
    "[checks]\nnames = mass, vibes\n",
])
def test_config_rejects(extra):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(BASE + extra)


def test_config_needs_problem():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[grid]\nL = 3\n")


def test_bad_stepper_key_is_a_config_error():
    cfg = ExperimentConfig.from_text(BASE + "[stepper]\nnewton_tol = -1\n")
    with pytest.raises(ConfigError):
        cfg.stepper_config()


def test_initial_data_mass_normalisation():
    cfg = ExperimentConfig.from_text(BASE + "[data]\nkind = cauchy_tail\nmass = 2\n")
    from fracdiff.grid import total_mass
    assert total_mass(cfg.initial_data()) == pytest.approx(2.0, rel=1e-12)


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.ini")):
        ExperimentConfig.from_file(path)


def test_unknown_key_exit_code(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(BASE + "[grid]\nsize = 3\n")
    assert main(["evolve", "--config", str(p), "--out", str(tmp_path / "o")]) == 1


def test_quick_evolve(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(BASE + "[grid]\nL = 10\nn_points = 129\n[ladder]\neps = 1e-3 1e-4 1e-5\n"
                 "[stepper]\nt_end = 0.5\n[checks]\nnames = mass, ordering\n")
    out = tmp_path / "o"
    assert main(["evolve", "--config", str(p), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdict"] == "EXISTS"
    assert (out / "ladder" / "ladder.json").exists()
