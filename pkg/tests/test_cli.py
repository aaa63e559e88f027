# tests/test_cli.py

from __future__ import annotations

from pathlib import Path

import pytest

from src.cli.commands import cmd_akr, cmd_allocate, cmd_fkr_curve, cmd_fully_curve, cmd_witness
from src.cli.config import DEFAULT_Q_Z_SWEEP, load_run_config, parse_run_config
from src.cli.main import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from src.errors import ConfigError
from src.protocol.config import KPreMode, Variant


REFERENCE_CONFIG = """\
n_parties: 4
q_x: 0.0304
q_z: 0.01589
pairwise:
  default: {q_xb: 0.0304, q_zb: 0.0144}
eps_tot: 1.0e-8
l_tot: [1e5, 1000000]
"""

SMALL_RUN = """\
n_parties: 3
q_x: 0.0
q_z: 0.0
l_tot: 30000
seed: 5
protocol:
  variant: aqcka_b
  sender: 1
  keyholders: [0, 1]
"""


def _config_file(tmp_path, text: str, name: str = "run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------- Configuration ----------


def test_parse_defaults() -> None:
    config = parse_run_config(REFERENCE_CONFIG)
    assert config.n_parties == 4
    assert config.l_tot == (100_000, 1_000_000)
    assert config.variant is Variant.AQCKA_M
    assert config.roles.sender == 0
    assert config.roles.keyholders == frozenset(range(4))
    assert config.noise.pair_rates(1, 3) == (0.0304, 0.0144)
    assert config.channel is None
    assert config.q_z_sweep == DEFAULT_Q_Z_SWEEP


def test_parse_protocol_and_channel() -> None:
    config = parse_run_config(
        SMALL_RUN
        + "  candidates: [1]\n"
        + "channel:\n  q_x: 0.01\n  pairwise:\n    0-2: {q_zb: 0.02}\n"
    )
    assert config.variant is Variant.AQCKA_B
    assert config.roles.sender == 1
    assert config.roles.keyholders == frozenset({0, 1})
    assert config.candidates == frozenset({1})
    assert config.channel.q_x == 0.01
    assert config.channel.pair_rates(0, 2) == (0.01, 0.02)
    assert config.noise.pair_rates(0, 2) == (0.0, 0.0)
    protocol = config.protocol_config(30_000, seed=9)
    assert protocol.seed == 9
    assert protocol.sampled_channel is config.channel


def test_parse_reads_k_pre_file(tmp_path) -> None:
    (tmp_path / "k_pre.txt").write_text("0110\n1001\n")
    config = parse_run_config(
        REFERENCE_CONFIG + "protocol:\n  k_pre_mode: supplied\n  k_pre_file: k_pre.txt\n",
        base_dir=tmp_path,
    )
    assert config.k_pre_mode is KPreMode.SUPPLIED
    assert config.k_pre.tolist() == [0, 1, 1, 0, 1, 0, 0, 1]


@pytest.mark.parametrize(
    "text, line, field",
    [
        ("n_parties: 4\nq_x: 0.03\nq_z: 1.2\n", 3, "q_z"),
        ("n_parties: 4\nq_x: 0.03\nq_z: 0.01\nspeed: 3\n", 4, "config"),
        ("q_x: 0.03\nq_z: 0.01\n", 1, "n_parties"),
        ("n_parties: 4\nq_x: 0.03\n", 1, "q_z"),
        ("n_parties: 4\nq_x: 0.03\nq_z: 0.01\nl_tot: 1.5\n", 4, "l_tot"),
        ("n_parties: 4\nq_x: 0.03\nq_z: 0.01\npairwise:\n  2-1: {q_xb: 0.1}\n", 5, "pairwise"),
        ("n_parties: 4\nq_x: 0.03\nq_z: 0.01\nprotocol:\n  variant: quantum\n", 5, "protocol.variant"),
        ("n_parties: 3\nq_x: 0.0\nq_z: 0.0\nl_tot: 1000\nprotocol:\n  variant: fully_aqcka_m\n", 6, "protocol"),
    ],
)
def test_parse_errors_name_line_and_field(text, line, field) -> None:
    with pytest.raises(ConfigError) as info:
        parse_run_config(text)
    assert info.value.line == line
    assert info.value.field == field


def test_parse_rejects_empty_and_malformed() -> None:
    with pytest.raises(ConfigError):
        parse_run_config("")
    with pytest.raises(ConfigError):
        parse_run_config("n_parties: [4\n")


# ---------- Commands ----------


def test_akr_values(tmp_path) -> None:
    rows = dict(cmd_akr(parse_run_config(REFERENCE_CONFIG), tmp_path / "akr.csv"))
    assert rows["r_m"] == pytest.approx(0.685910, abs=1e-5)
    assert rows["r_b"] == pytest.approx(0.057907, abs=1e-5)
    assert rows["ratio_m_b"] == pytest.approx(rows["r_m"] / rows["r_b"])
    lines = (tmp_path / "akr.csv").read_text().splitlines()
    assert lines[0] == "metric,value"
    assert [line.split(",")[0] for line in lines[1:]] == [
        "r_m", "r_b", "r_fully_m", "r_fully_b", "ratio_m_b", "ratio_fully_m_b",
    ]


def test_akr_noiseless_advantage(capsys) -> None:
    rows = dict(cmd_akr(parse_run_config("n_parties: 6\nq_x: 0\nq_z: 0\n")))
    assert rows["r_m"] == 1.0
    assert rows["ratio_m_b"] == pytest.approx(30.0)
    assert "ratio_m_b,30" in capsys.readouterr().out


def test_fkr_curve_and_allocate(tmp_path) -> None:
    config = parse_run_config(REFERENCE_CONFIG)
    curve = cmd_fkr_curve(config, tmp_path / "fkr.csv", [100_000])
    assert curve[0][0] == 100_000
    assert curve[0][5] == 0.0
    assert curve[0][6] > 0.0
    alloc = cmd_allocate(config, tmp_path / "alloc.csv", [500_000])
    l_tot, l_multi, l_id, l_tkb, l_pe, p = alloc[0]
    assert 0 < l_multi < l_tot
    assert l_id > 0 and l_tkb > 0 and l_pe > 0
    assert 0.0 < p < 1.0
    header = (tmp_path / "alloc.csv").read_text().splitlines()[0]
    assert header == "l_tot,l_multi,l_id,l_tkb,l_pe,p"


def test_fully_curve_follows_sweep(tmp_path) -> None:
    config = parse_run_config("n_parties: 4\nq_x: 0.02\nq_z: 0.01\nq_z_sweep: [0.001, 0.01]\n")
    curve = cmd_fully_curve(config, tmp_path / "fully.csv")
    assert [q for q, _ in curve] == [0.001, 0.01]
    assert all(ratio > 0.0 for _, ratio in curve)


def test_witness_command(tmp_path) -> None:
    tallies = tmp_path / "t.csv"
    tallies.write_text("basis,outcome_bits,count\nX,000,9\nX,001,1\nZ,000,5\nZ,111,5\n")
    report = cmd_witness(tallies, tmp_path / "w.csv")
    assert report.fidelity == pytest.approx((0.8 + 2.0 - 1.0) / 2)
    assert (tmp_path / "w.csv").read_text().splitlines() == ["exp_x,proj_zz,F", "0.8,1,0.9"]


# ---------- Entry point ----------


def test_simulate_is_byte_deterministic(tmp_path) -> None:
    config = _config_file(tmp_path, SMALL_RUN)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(config), "--out", str(first), "--transcript"]) == EXIT_OK
    assert main(["simulate", "--config", str(config), "--out", str(second), "--transcript"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert (tmp_path / "a_transcript.csv").read_bytes() == (tmp_path / "b_transcript.csv").read_bytes()
    row = first.read_text().splitlines()[1].split(",")
    assert row[:3] == ["aqcka_b", "3", "30000"]
    assert row[7] == "success"
    assert row[10] == "5"


@pytest.mark.parametrize(
    "verb, extra",
    [
        ("akr", []),
        ("fkr-curve", ["--l-tot", "100000", "400000"]),
        ("allocate", ["--l-tot", "500000"]),
        ("tallies", ["--rounds", "4000", "--seed", "3"]),
        ("fully-curve", []),
        ("witness", []),
    ],
)
def test_every_verb_is_byte_deterministic(tmp_path, verb, extra) -> None:
    config = _config_file(tmp_path, REFERENCE_CONFIG)
    tallies = tmp_path / "tallies.csv"
    tallies.write_text("basis,outcome_bits,count\nX,0000,40\nX,0011,3\nZ,0000,21\nZ,1111,19\nZ,0100,2\n")
    outputs = []
    for name in ("first.csv", "second.csv"):
        out = tmp_path / name
        if verb == "witness":
            argv = ["witness", "--tallies", str(tallies), "--out", str(out)]
        else:
            argv = [verb, "--config", str(config), "--out", str(out), *extra]
        assert main(argv) == EXIT_OK
        outputs.append(out.read_bytes())
    assert outputs[0] and outputs[0] == outputs[1]


def test_simulate_writes_sender_key(tmp_path) -> None:
    config = _config_file(tmp_path, SMALL_RUN)
    key = tmp_path / "key.txt"
    code = main(
        ["simulate", "--config", str(config), "--out", str(tmp_path / "s.csv"),
         "--seed", "6", "--key-out", str(key)]
    )
    assert code == EXIT_OK
    bits = key.read_text().strip()
    assert bits and set(bits) <= {"0", "1"}
    row = (tmp_path / "s.csv").read_text().splitlines()[1].split(",")
    assert int(row[8]) == len(bits)
    assert row[10] == "6"


def test_tallies_feed_witness(tmp_path) -> None:
    config = _config_file(tmp_path, "n_parties: 3\nq_x: 0.05\nq_z: 0.0\n")
    tallies, out = tmp_path / "t.csv", tmp_path / "w.csv"
    assert main(["tallies", "--config", str(config), "--rounds", "5000", "--out", str(tallies)]) == EXIT_OK
    assert main(["witness", "--tallies", str(tallies), "--out", str(out)]) == EXIT_OK
    exp_x, proj_zz, fidelity = (float(v) for v in out.read_text().splitlines()[1].split(","))
    assert exp_x == pytest.approx(0.9, abs=0.03)
    assert proj_zz == 1.0
    assert fidelity == pytest.approx((exp_x + 1.0) / 2)


def test_exit_codes(tmp_path) -> None:
    bad = _config_file(tmp_path, "n_parties: 4\nq_x: 0.03\nq_z: 1.2\n", "bad.yaml")
    good = _config_file(tmp_path, REFERENCE_CONFIG, "good.yaml")
    assert main(["akr", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["akr", "--config", str(tmp_path / "missing.yaml")]) == EXIT_IO
    assert main(["akr", "--config", str(good), "--out", str(tmp_path / "no" / "dir.csv")]) == EXIT_IO
    assert main(["akr", "--config", str(good), "--out", str(tmp_path / "ok.csv")]) == EXIT_OK


def test_missing_l_tot_is_a_config_error(tmp_path) -> None:
    config = _config_file(tmp_path, "n_parties: 3\nq_x: 0.0\nq_z: 0.0\n")
    assert main(["fkr-curve", "--config", str(config)]) == EXIT_CONFIG


@pytest.mark.parametrize("name", ["network_n4.yaml", "simulate_n4.yaml"])
def test_shipped_configs_load(name) -> None:
    config = load_run_config(Path(__file__).resolve().parents[1] / "configs" / name)
    assert config.n_parties == 4
    assert config.l_tot
