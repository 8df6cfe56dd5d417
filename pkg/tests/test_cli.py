"""Command-line behavior: flags, presets, exit codes, emitted files."""

import json
import os

import numpy as np
import pytest

from dmcd.cli import _build_parser, _config_from_flags, main
from dmcd.metrics import mse
from dmcd.pipeline import load_image, save_image


def parse_demix(extra):
    return _build_parser().parse_args(
        ["demix", "--input", "in.png", "--out", "outdir"] + extra
    )


def write_png(path, arr):
    save_image(arr, str(path), mode="clamp")
    return str(path)


QUICK_FLAGS = [
    "--kernel", "delta:1", "--L", "4", "--S", "4",
    "--mu2", "1e16", "--nu-rho", "0", "--nu-eps", "0",
    "--max-iters", "50", "--cst-scales", "2", "--cst-directions", "4",
]


# =====================================================================
# Argument handling
# =====================================================================


def test_no_command_is_usage_error(capsys):
    assert main([]) == 1
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_demix_requires_input_and_out(capsys):
    assert main(["demix", "--out", "somewhere"]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["demix", "--input", "a.png"]) == 1
    assert "error:" in capsys.readouterr().err


def test_config_flag_conflicts_with_inline(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("input=a.png\noutput=dir\n")
    code = main(["demix", "--config", str(cfg), "--L", "4"])
    assert code == 1
    assert "--L" in capsys.readouterr().err


# =====================================================================
# Presets
# =====================================================================


def test_preset_fig2_parameters():
    config = _config_from_flags(parse_demix(["--preset", "fig2"]))
    assert config.kernel_kind == "gaussian" and config.l_blur == 20.0
    assert config.noise_sigma == 0.0
    p = config.solver
    assert p.L == 10 and p.S == 10
    assert all(getattr(p, f"beta{i}") == 1e10 for i in range(1, 8))
    assert p.alpha == 0.1 and p.mu1 == 1e10 and p.mu2 == 4e10
    assert p.nu_rho == 20.0 and p.nu_eps == 0.0


def test_preset_fig7_parameters():
    config = _config_from_flags(parse_demix(["--preset", "fig7"]))
    assert config.l_blur == 100.0 and config.noise_sigma == 0.0
    assert config.solver.nu_rho == 50.0 and config.solver.nu_eps == 0.0
    assert config.solver.mu2 == 3e10


def test_preset_fig8_parameters():
    config = _config_from_flags(parse_demix(["--preset", "fig8"]))
    assert config.l_blur == 50.0 and config.noise_sigma == 10.0
    assert config.solver.nu_rho == 15.0 and config.solver.nu_eps == 6.5
    assert config.solver.mu2 == 3e10


def test_explicit_flag_overrides_preset():
    config = _config_from_flags(
        parse_demix(["--preset", "fig2", "--mu2", "adaptive:0.5", "--L", "6"])
    )
    assert config.solver.adaptive_mu2 == 0.5
    assert config.solver.L == 6
    assert config.solver.S == 10  # untouched preset value survives


def test_bad_adaptive_fraction_is_usage_error(capsys):
    assert main(["demix", "--input", "a.png", "--out", "o",
                 "--mu2", "adaptive:lots"]) == 1
    assert "adaptive" in capsys.readouterr().err


# =====================================================================
# demix runs
# =====================================================================


def test_demix_inline_run(tmp_path, capsys):
    src = write_png(tmp_path / "in.png", np.full((24, 24), 77.0))
    out = str(tmp_path / "run")
    code = main(["demix", "--input", src, "--out", out] + QUICK_FLAGS)
    captured = capsys.readouterr()
    assert code == 0, captured.err
    assert "tau 1" in captured.out
    assert "mse" in captured.out.splitlines()[-1]
    for name in ("u.png", "v.png", "rho.png", "eps.png", "f_re.png",
                 "metrics.json"):
        assert os.path.exists(os.path.join(out, name)), name


def test_demix_config_run(tmp_path, capsys):
    src = write_png(tmp_path / "in.png", np.full((24, 24), 30.0))
    out = str(tmp_path / "run")
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"input={src}\noutput={out}\nkernel=delta:1\n"
        "L=4\nS=4\nmu2=1e16\nnu_rho=0\nnu_eps=0\n"
        "max_iters=50\ncst_scales=2\ncst_directions=4\n"
    )
    assert main(["demix", "--config", str(cfg)]) == 0
    assert os.path.exists(os.path.join(out, "metrics.json"))
    capsys.readouterr()


def test_demix_runtime_failure_exits_2(tmp_path, capsys):
    src = write_png(tmp_path / "in.png", np.full((24, 24), 20.0))
    blocker = tmp_path / "not_a_dir"
    blocker.write_text("occupied")
    code = main(["demix", "--input", src, "--out", str(blocker)] + QUICK_FLAGS)
    assert code == 2
    assert "runtime error:" in capsys.readouterr().err


# =====================================================================
# filterbank
# =====================================================================


def test_filterbank_unity_line(capsys):
    code = main(["filterbank", "--preset", "fig6", "--shape", "16", "16"])
    captured = capsys.readouterr()
    assert code == 0
    line = [l for l in captured.out.splitlines() if "unity residual" in l][0]
    assert float(line.split()[-1]) < 1e-10


def test_filterbank_export_spectra(tmp_path, capsys):
    out = str(tmp_path / "spectra")
    code = main(["filterbank", "--family", "xi-theta", "--I", "2", "--L", "2",
                 "--a", "2", "--c", "1", "--shape", "16", "16",
                 "--export-spectra", "--out", out])
    assert code == 0
    names = os.listdir(out)
    assert names and all(n.startswith("xi-theta_") for n in names)
    assert any(n.endswith(".png") for n in names)
    assert any(n.endswith(".csv") for n in names)
    capsys.readouterr()


def test_filterbank_analyze_round_trip(tmp_path, capsys):
    rng = np.random.default_rng(111)
    src = write_png(tmp_path / "tex.png", rng.uniform(0, 255, size=(32, 32)))
    out = str(tmp_path / "bands")
    code = main(["filterbank", "--preset", "fig6", "--input", src,
                 "--analyze", "--out", out])
    captured = capsys.readouterr()
    assert code == 0
    assert os.path.exists(os.path.join(out, "coeff_lowpass.png"))
    assert os.path.exists(os.path.join(out, "coeff_s2_d3.png"))
    line = [l for l in captured.out.splitlines() if "reconstruction error" in l][0]
    assert float(line.split()[-1]) < 1e-8


def test_filterbank_flag_validation(capsys):
    assert main(["filterbank", "--analyze", "--out", "x"]) == 1
    assert main(["filterbank", "--export-spectra"]) == 1
    assert main(["filterbank", "--family", "wavelet"]) == 1
    capsys.readouterr()


# =====================================================================
# metrics
# =====================================================================


def test_metrics_stdout_json(tmp_path, capsys):
    rng = np.random.default_rng(112)
    ref = write_png(tmp_path / "ref.png", rng.uniform(0, 255, size=(20, 20)))
    recon = write_png(tmp_path / "recon.png", rng.uniform(0, 255, size=(20, 20)))
    assert main(["metrics", "--ref", ref, "--recon", recon]) == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data) == {"mse", "mec"}
    assert data["mse"] == pytest.approx(mse(load_image(ref), load_image(recon)))


def test_metrics_with_texture_and_outfile(tmp_path, capsys):
    ref = write_png(tmp_path / "ref.png", np.full((20, 20), 90.0))
    recon = write_png(tmp_path / "recon.png", np.full((20, 20), 92.0))
    tex = tmp_path / "v.png"
    arr = np.zeros((20, 20))
    arr[:10] = 200.0
    write_png(tex, arr)
    out = str(tmp_path / "report.json")
    assert main(["metrics", "--ref", ref, "--recon", recon,
                 "--texture", str(tex), "--out", out]) == 0
    with open(out) as fh:
        data = json.load(fh)
    assert data["sparsity_percent"] == 50.0
    assert data["mse"] == 4.0
    capsys.readouterr()


def test_metrics_warns_on_partial_blocks(tmp_path, capsys):
    rng = np.random.default_rng(113)
    ref = write_png(tmp_path / "ref.png", rng.uniform(0, 255, size=(25, 25)))
    recon = write_png(tmp_path / "recon.png", rng.uniform(0, 255, size=(25, 25)))
    assert main(["metrics", "--ref", ref, "--recon", recon]) == 0
    captured = capsys.readouterr()
    assert "20x20" in captured.err
    json.loads(captured.out)


def test_metrics_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["metrics", "--ref", str(tmp_path / "a.png"),
                 "--recon", str(tmp_path / "b.png")]) == 1
    capsys.readouterr()
