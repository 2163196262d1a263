import json
import shutil

import pytest
import yaml

from styleswitch import cli, report


@pytest.fixture(scope="module")
def run_out(fixture_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert cli.main(["run", "--config", str(fixture_dir / "config.yaml"), "--out", str(out)]) == 0
    return out


def test_run_writes_outputs(run_out):
    files = {p.name for p in run_out.iterdir() if p.is_file()}
    assert files == {"trades.jsonl", "blocks.jsonl", "scores.csv", "report.json", "report.md", "manifest.json"}
    assert {p.name for p in (run_out / "figures").iterdir()} == {"cohort_scores.png", "style_share.png"}
    assert len((run_out / "blocks.jsonl").read_text().splitlines()) == 800
    assert len((run_out / "scores.csv").read_text().splitlines()) == 33
    md = (run_out / "report.md").read_text()
    assert "| Behavioral Drivers | U | p | r_b | c_d | cles |" in md


def test_manifest_digests(run_out, fixture_dir):
    m = json.loads((run_out / "manifest.json").read_text())
    assert m["command"] == "run" and m["mode"] == "rule" and m["seed"] == 7
    for name, digest in m["outputs"].items():
        assert report.file_digest(run_out / name) == digest
    assert m["inputs"]["config"]["sha256"] == report.file_digest(fixture_dir / "config.yaml")
    assert len(m["inputs"]) == 1 + 2 * 10


def test_trades_stream_has_snapshots(run_out):
    lines = [json.loads(x) for x in (run_out / "trades.jsonl").read_text().splitlines()]
    kinds = {x["event"] for x in lines}
    assert kinds == {"snapshot", "trade"}
    assert [x["day"] for x in lines] == sorted(x["day"] for x in lines)


def test_run_is_deterministic(run_out, fixture_dir, tmp_path):
    assert cli.main(["run", "--config", str(fixture_dir / "config.yaml"), "--out", str(tmp_path), "--no-figures"]) == 0
    for name in ("report.json", "blocks.jsonl", "trades.jsonl", "scores.csv", "report.md"):
        assert (tmp_path / name).read_bytes() == (run_out / name).read_bytes()


def test_evaluate_is_fixed_point(run_out, tmp_path):
    assert cli.main(["evaluate", "--blocks", str(run_out / "blocks.jsonl"), "--out", str(tmp_path), "--no-figures"]) == 0
    for name in ("report.json", "scores.csv", "report.md"):
        assert (tmp_path / name).read_bytes() == (run_out / name).read_bytes()
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "evaluate"


@pytest.mark.parametrize("damage", ["truncate", "drop_line", "bad_json", "missing_key", "bad_type", "empty"])
def test_evaluate_rejects_damaged_blocks(run_out, tmp_path, capsys, damage):
    text = (run_out / "blocks.jsonl").read_text()
    lines = text.splitlines()
    if damage == "truncate":
        text = text[: len(text) - 37]
    elif damage == "drop_line":
        text = "\n".join(lines[:-1]) + "\n"
    elif damage == "bad_json":
        text = "\n".join(lines[:5] + ["{not json"] + lines[6:]) + "\n"
    elif damage == "missing_key":
        rec = json.loads(lines[0])
        del rec["switch"]
        text = "\n".join([json.dumps(rec)] + lines[1:]) + "\n"
    elif damage == "bad_type":
        rec = json.loads(lines[0])
        rec["switch"] = "yes"
        text = "\n".join([json.dumps(rec)] + lines[1:]) + "\n"
    else:
        text = ""
    bad = tmp_path / "blocks.jsonl"
    bad.write_text(text)
    assert cli.main(["evaluate", "--blocks", str(bad), "--out", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err.strip()
    assert err.startswith("blocks:") and "\n" not in err


def test_missing_auxiliary_sector(fixture_dir, tmp_path, capsys):
    cfg = yaml.safe_load((fixture_dir / "config.yaml").read_text())
    del cfg["auxiliary"]["Health Care"]
    shutil.copytree(fixture_dir / "data", tmp_path / "data")
    (tmp_path / "config.yaml").write_text(yaml.safe_dump(cfg))
    code = cli.main(["run", "--config", str(tmp_path / "config.yaml"), "--out", str(tmp_path / "o")])
    assert code == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("config: auxiliary ticker missing") and "\n" not in err
    assert not (tmp_path / "o").exists()


def test_missing_data_file(fixture_dir, tmp_path, capsys):
    cfg = yaml.safe_load((fixture_dir / "config.yaml").read_text())
    cfg["pool"][0]["prices"] = str(tmp_path / "nope.csv")
    cfg["auxiliary"] = {k: {**v, "prices": str(fixture_dir / v["prices"]), "reports": str(fixture_dir / v["reports"])}
                        for k, v in cfg["auxiliary"].items()}
    for e in cfg["pool"][1:]:
        e["prices"], e["reports"] = str(fixture_dir / e["prices"]), str(fixture_dir / e["reports"])
    cfg["pool"][0]["reports"] = str(fixture_dir / cfg["pool"][0]["reports"])
    (tmp_path / "config.yaml").write_text(yaml.safe_dump(cfg))
    assert cli.main(["run", "--config", str(tmp_path / "config.yaml"), "--out", str(tmp_path / "o")]) == 2
    assert capsys.readouterr().err.startswith("data:")


def test_unknown_config_key(fixture_dir, tmp_path, capsys):
    cfg = yaml.safe_load((fixture_dir / "config.yaml").read_text())
    cfg["switch"]["w_greed"] = 1.0
    (tmp_path / "config.yaml").write_text(yaml.safe_dump(cfg))
    assert cli.main(["run", "--config", str(tmp_path / "config.yaml"), "--out", str(tmp_path / "o")]) == 2
    assert capsys.readouterr().err.startswith("config:")


def test_ablation_blocks_not_significant(fixture_dir, tmp_path):
    run = tmp_path / "abl"
    args = ["run", "--config", str(fixture_dir / "config.yaml"), "--out", str(run), "--mode", "ablation", "--no-figures"]
    assert cli.main(args) == 0
    assert cli.main(["evaluate", "--blocks", str(run / "blocks.jsonl"), "--out", str(tmp_path / "ev"), "--no-figures"]) == 0
    res = json.loads((tmp_path / "ev" / "report.json").read_text())
    assert all(res[d]["p"] >= 0.05 for d in res)
    assert json.loads((run / "manifest.json").read_text())["mode"] == "ablation"


def test_fixture_subcommand(tmp_path):
    assert cli.main(["fixture", "--out", str(tmp_path), "--seed", "11", "--mode", "ablation"]) == 0
    cfg = yaml.safe_load((tmp_path / "config.yaml").read_text())
    assert cfg["seed"] == 11 and cfg["mode"] == "ablation"
    assert len(list((tmp_path / "data").glob("*.csv"))) == 20


def test_format_p():
    assert report.format_p(0.5) == "0.50"
    assert report.format_p(0.016) == "0.016"
    assert report.format_p(0.0003) == "0.0003"
    assert report.format_p(0.00002) == "0.00002"
    assert report.format_p(1e-9) == "<0.000001"
