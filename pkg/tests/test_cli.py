import numpy as np
import pytest

from resteer.cli import build_parser, flag_table, main
from resteer.tensorio import read_ct2

from conftest import DATA_DIR


def run_cli(*argv):
    return main(list(argv))


def tree_bytes(root):
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_unknown_subcommand_and_flag_exit_1(capsys):
    assert run_cli("transmogrify") == 1
    assert "usage" in capsys.readouterr().err.lower()
    assert run_cli("phantom", "--nam", "gradient") == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_no_arguments_exits_1(capsys):
    assert run_cli() == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_help_lists_every_flag(capsys):
    for sub, flags in flag_table().items():
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([sub, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in flags:
            if flag.startswith("--"):
                assert flag in text, f"{sub} --help missing {flag}"


def test_flag_table_covers_dotted_config_keys():
    flags = flag_table()["restore"]
    assert "--controller.lambda" in flags
    assert "--prior.strength" in flags
    assert "--fidelity.eta" in flags


def test_phantom_then_metrics_identity(tmp_path, capsys):
    p = tmp_path / "p.ct2"
    assert run_cli("phantom", "--name", "shepp-logan", "--size", "64", "--out", str(p)) == 0
    capsys.readouterr()
    assert np.array_equal(read_ct2(p), read_ct2(DATA_DIR / "shepp_logan_64.ct2"))
    assert run_cli("metrics", "--ref", str(p), "--cand", str(p)) == 0
    out = capsys.readouterr().out
    assert "psnr=inf" in out and "ssim=1.0" in out and "rmse=0.0" in out


def test_metrics_csv_format(tmp_path, capsys):
    p = tmp_path / "p.ct2"
    run_cli("phantom", "--name", "gradient", "--size", "32", "--out", str(p))
    capsys.readouterr()
    assert run_cli("metrics", "--ref", str(p), "--cand", str(p), "--format", "csv") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "psnr,ssim,rmse"
    assert lines[1].split(",") == ["inf", "1.0", "0.0"]


def test_degrade_restore_round_trip_deterministic(tmp_path, capsys):
    p = tmp_path / "p.ct2"
    run_cli("phantom", "--name", "shepp-logan", "--size", "32", "--out", str(p))
    obs = tmp_path / "obs"
    assert run_cli(
        "degrade", "--in", str(p), "--out", str(obs),
        "--op", "pixel-mask", "--keep", "0.6", "--noise-sigma", "0.02", "--seed", "5",
    ) == 0
    assert (obs / "operator.cfg").is_file()
    assert (obs / "mask.ct2").is_file()
    run_a = tmp_path / "run_a"
    run_b = tmp_path / "run_b"
    args = ["restore", "--in", str(obs), "--config", "", "--mode", "balanced",
            "--steps", "6", "--seed", "3"]
    args.remove("--config")
    args.remove("")
    assert run_cli(*args, "--out", str(run_a)) == 0
    assert run_cli(*args, "--out", str(run_b)) == 0
    capsys.readouterr()
    assert tree_bytes(run_a) == tree_bytes(run_b)
    assert (run_a / "final.ct2").is_file()


def test_restore_flag_overrides_config_file(tmp_path, capsys):
    p = tmp_path / "p.ct2"
    run_cli("phantom", "--name", "gradient", "--size", "16", "--out", str(p))
    obs = tmp_path / "obs"
    run_cli("degrade", "--in", str(p), "--out", str(obs), "--op", "identity-plus-noise",
            "--noise-sigma", "0.05", "--seed", "1")
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("steps = 4\ncontroller.lambda = 0.9\n")
    out = tmp_path / "run"
    assert run_cli("restore", "--in", str(obs), "--out", str(out),
                   "--config", str(cfgfile), "--controller.lambda", "0.1") == 0
    capsys.readouterr()
    echo = (out / "config.echo").read_text()
    assert "controller.lambda = 0.1" in echo
    assert "steps = 4" in echo


def test_restore_bad_config_exits_1_without_output(tmp_path, capsys):
    p = tmp_path / "p.ct2"
    run_cli("phantom", "--name", "gradient", "--size", "16", "--out", str(p))
    obs = tmp_path / "obs"
    run_cli("degrade", "--in", str(p), "--out", str(obs), "--op", "identity-plus-noise")
    out = tmp_path / "run"
    code = run_cli("restore", "--in", str(obs), "--out", str(out),
                   "--controller.lambda", "1.7")
    capsys.readouterr()
    assert code == 1
    assert not out.exists()


def test_missing_input_is_runtime_failure(tmp_path, capsys):
    code = run_cli("restore", "--in", str(tmp_path / "nope"), "--out", str(tmp_path / "run"))
    capsys.readouterr()
    assert code == 1  # missing observation dir is reported as invalid usage
    code = run_cli("metrics", "--ref", str(tmp_path / "a.ct2"), "--cand", str(tmp_path / "a.ct2"))
    capsys.readouterr()
    assert code == 2  # unreadable file is a runtime failure


def test_bench_writes_ablation_csv(tmp_path, capsys):
    out = tmp_path / "bench"
    assert run_cli("bench", "--suite", "default", "--out", str(out),
                   "--steps", "3", "--jobs", "4", "--no-run-dirs") == 0
    capsys.readouterr()
    lines = (out / "ablation.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 4 * 6  # header + 6 arms per case
    for case in ("noise", "inpaint", "kspace4x", "kspace8x"):
        assert sum(1 for l in lines if l.startswith(case + ",")) == 6
    assert (out / "metadata.txt").read_text().startswith("suite: default")


def test_sweep_writes_csv(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert run_cli("sweep", "--case", "inpaint", "--out", str(out),
                   "--points", "3", "--steps", "3", "--jobs", "4") == 0
    capsys.readouterr()
    lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "lambda,mean_alpha,psnr,residual,risk"
    assert len(lines) == 4
