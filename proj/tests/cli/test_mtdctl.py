import json
import os
import subprocess
from pathlib import Path

import jsonschema
import pytest

MTDCTL = os.environ.get("MTDCTL", "mtdctl")
SOURCE = Path(os.environ.get("MTD_SOURCE_DIR", Path(__file__).resolve().parents[2]))
SCENARIOS = sorted((SOURCE / "scenarios").glob("*.toml"))
SCHEMA = json.loads((SOURCE / "docs" / "report.schema.json").read_text())

SMALL_TRAIN = """
seed = 3

[train]
n_per_class = 80
n_trees = 8
max_depth = 10
"""


def mtdctl(*args, check=None):
    proc = subprocess.run([MTDCTL, *map(str, args)], capture_output=True, text=True, timeout=300)
    if check is not None:
        assert proc.returncode == check, proc.stderr
    return proc


def simulate(scenario, tmp_path, seed=None):
    out = tmp_path / (scenario.stem + ".json")
    args = ["simulate", "--scenario", scenario, "--out", out]
    if seed is not None:
        args += ["--seed", seed]
    mtdctl(*args, check=0)
    return out.read_text()


def test_missing_config_exits_2(tmp_path):
    proc = mtdctl("train", "--config", tmp_path / "absent.toml", "--out-model", tmp_path / "m", "--out-scaler",
                  tmp_path / "s")
    assert proc.returncode == 2
    assert proc.stderr.strip()


def test_malformed_scenario_exits_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("duration_s = [\n")
    assert mtdctl("simulate", "--scenario", bad, "--out", tmp_path / "r.json").returncode == 2
    bad.write_text("mystery_key = 1\n")
    assert mtdctl("simulate", "--scenario", bad, "--out", tmp_path / "r.json").returncode == 2


def test_unknown_algorithm_exits_2(tmp_path):
    cfg = tmp_path / "train.toml"
    cfg.write_text(SMALL_TRAIN)
    proc = mtdctl("train", "--config", cfg, "--algo", "svm", "--out-model", tmp_path / "m", "--out-scaler",
                  tmp_path / "s")
    assert proc.returncode == 2


@pytest.mark.parametrize("algo", ["tree", "forest", "knn"])
def test_train_produces_loadable_model(tmp_path, algo):
    cfg = tmp_path / "train.toml"
    cfg.write_text(SMALL_TRAIN)
    model, scaler = tmp_path / f"{algo}.bin", tmp_path / f"{algo}.scaler.json"
    proc = mtdctl("train", "--config", cfg, "--algo", algo, "--out-model", model, "--out-scaler", scaler, check=0)
    line = next(l for l in proc.stdout.splitlines() if l.startswith("macro F1:"))
    value = line.split(":")[1].strip()
    assert len(value.split(".")[1]) == 2
    assert model.stat().st_size > 0 and scaler.stat().st_size > 0

    # The daemon refuses unreadable models, so a clean run proves the files load.
    daemon = tmp_path / "daemon.toml"
    daemon.write_text(f"""
duration_s = 20
[reactive]
model_path = "{model}"
scaler_path = "{scaler}"
""")
    mtdctl("run", "--config", daemon, check=0)


def test_corrupt_model_refused(tmp_path):
    model, scaler = tmp_path / "m.bin", tmp_path / "s.json"
    model.write_bytes(b"garbage")
    scaler.write_text("{}")
    daemon = tmp_path / "daemon.toml"
    daemon.write_text(f'[reactive]\nmodel_path = "{model}"\nscaler_path = "{scaler}"\n')
    assert mtdctl("run", "--config", daemon).returncode == 2


@pytest.mark.parametrize("scenario", SCENARIOS, ids=lambda p: p.stem)
def test_simulate_reports_match_schema_and_repeat(tmp_path, scenario):
    first = simulate(scenario, tmp_path, seed=99)
    second = simulate(scenario, tmp_path, seed=99)
    assert first == second
    report = json.loads(first)
    jsonschema.validate(report, SCHEMA)
    assert report["seed"] == 99
    assert all(report["checks"].values()), report["checks"]


def test_simulate_stdout_and_table(tmp_path):
    scenario = SOURCE / "scenarios" / "idle.toml"
    proc = mtdctl("simulate", "--scenario", scenario, "--out", "-", check=0)
    report = json.loads(proc.stdout)
    assert report["outcomes"]
    assert all(o["status"] == "no-op" for o in report["outcomes"])
    proc = mtdctl("simulate", "--scenario", scenario, "--out", tmp_path / "r.json", check=0)
    assert "phase" in proc.stdout and "idle" in proc.stdout


def test_ransomware_and_rootkit_fields(tmp_path):
    ransom = json.loads(simulate(SOURCE / "scenarios" / "ransomware_reactive.toml", tmp_path))
    assert ransom["checks"]["ransomware.encryptor_killed"]
    assert "ransomware.real_loss_ratio" in ransom["metrics"]
    rootkit = json.loads(simulate(SOURCE / "scenarios" / "rootkit_proactive.toml", tmp_path))
    assert rootkit["metrics"]["rootkit.disinfection_latency_s"] <= 60


def test_strict_fails_on_failed_check(tmp_path):
    scenario = tmp_path / "weak.toml"
    # Trap too slow to catch the encryptor: the loss check fails.
    scenario.write_text("""
name = "weak"
duration_s = 100
[[environment.files.roots]]
path = "/home"
count = 400
size_bytes = 40000000
extensions = [".pdf"]
fanout = 2
depth = 3
[mechanisms.file_encryption]
observation_s = 500
max_runtime_s = 90
[[adversary]]
kind = "encryptor"
start_at = 2
[[script]]
at = 5
behavior = "ransomware_poc"
[scenario]
baseline_compare = true
""")
    assert mtdctl("simulate", "--scenario", scenario, "--out", tmp_path / "r.json").returncode == 0
    assert mtdctl("simulate", "--scenario", scenario, "--out", tmp_path / "r.json", "--strict").returncode == 3


def test_daemon_journal(tmp_path):
    proc = mtdctl("run", "--config", SOURCE / "configs" / "daemon_sandbox.toml", check=0)
    assert "no model configured" in proc.stderr
    records = [json.loads(l) for l in proc.stdout.splitlines() if l.startswith("{")]
    alarms = [r for r in records if r["type"] == "alarm"]
    deploys = [r for r in records if r["type"] == "event" and r["kind"] == "deploy"]
    assert len(alarms) == 1 and alarms[0]["origin"] == "reactive" and alarms[0]["time"] == 100
    assert len(deploys) == 1

    journal = tmp_path / "journal.jsonl"
    journal.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    as_json = json.loads(mtdctl("report", "--journal", journal, "--format", "json", check=0).stdout)
    assert as_json
    table = mtdctl("report", "--journal", journal, "--format", "table", check=0).stdout
    assert "ip_address" in table


def test_duplicate_policy_refuses_to_start(tmp_path):
    cfg = tmp_path / "dup.toml"
    cfg.write_text("""
[[policy]]
on = "Botnet"
deploy = ["ip_address"]
[[policy]]
on = "botnet"
deploy = ["libraries"]
""")
    proc = mtdctl("run", "--config", cfg)
    assert proc.returncode == 2
    assert "duplicate" in proc.stderr


def test_report_rejects_bad_journal(tmp_path):
    journal = tmp_path / "j.jsonl"
    journal.write_text('{"type": "alarm"\n')
    assert mtdctl("report", "--journal", journal).returncode == 2
