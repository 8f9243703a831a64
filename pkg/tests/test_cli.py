import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from imggen import make_image
from wctransfer.cli import main
from wctransfer.tensors import load_image, save_image

MODEL = str(Path(__file__).parent / "fixtures" / "model")


@pytest.fixture
def images(tmp_path):
    paths = {}
    for name, seed in [("content", 100), ("style", 200), ("style_b", 201)]:
        p = tmp_path / f"{name}.png"
        save_image(p, make_image(seed))
        paths[name] = str(p)
    return paths


def run(*argv):
    return main([str(a) for a in argv])


# ---------------------------------------------------------------- stylize


def test_stylize_writes_png(tmp_path, images):
    out = tmp_path / "out.png"
    code = run(
        "stylize", "--weights", MODEL, "--content", images["content"],
        "--style", images["style"], "--out", out,
    )
    assert code == 0
    img = load_image(out)
    assert img.shape == (48, 48, 3)


def test_stylize_alpha_zero_matches_reconstruct(tmp_path, images):
    stylized = tmp_path / "s.png"
    rebuilt = tmp_path / "r.png"
    assert run(
        "stylize", "--weights", MODEL, "--content", images["content"],
        "--style", images["style"], "--alpha", 0, "--levels", "3",
        "--out", stylized,
    ) == 0
    assert run(
        "reconstruct", "--weights", MODEL, "--input", images["content"],
        "--level", 3, "--out", rebuilt,
    ) == 0
    assert stylized.read_bytes() == rebuilt.read_bytes()


def test_stylize_spatial_masks(tmp_path, images):
    h = w = 48
    left = np.zeros((h, w, 3), dtype=np.float32)
    left[:, : w // 2] = 1.0
    mask_a = tmp_path / "mask_a.png"
    mask_b = tmp_path / "mask_b.png"
    save_image(mask_a, left)
    save_image(mask_b, 1.0 - left)
    out = tmp_path / "out.png"
    code = run(
        "stylize", "--weights", MODEL, "--content", images["content"],
        "--style", images["style"], "--mask", mask_a,
        "--style", images["style_b"], "--mask", mask_b,
        "--levels", "2,1", "--out", out,
    )
    assert code == 0
    assert out.exists()


def test_stylize_mask_count_mismatch(tmp_path, images):
    mask = tmp_path / "m.png"
    save_image(mask, np.ones((48, 48, 3), dtype=np.float32))
    code = run(
        "stylize", "--weights", MODEL, "--content", images["content"],
        "--style", images["style"], "--style", images["style_b"],
        "--mask", mask, "--out", tmp_path / "out.png",
    )
    assert code == 2


def test_stylize_multiple_styles_need_masks(tmp_path, images):
    code = run(
        "stylize", "--weights", MODEL, "--content", images["content"],
        "--style", images["style"], "--style", images["style_b"],
        "--out", tmp_path / "out.png",
    )
    assert code == 2


def test_save_intermediates_writes_per_level(tmp_path, images):
    inter = tmp_path / "steps"
    code = run(
        "stylize", "--weights", MODEL, "--content", images["content"],
        "--style", images["style"], "--levels", "3,2,1",
        "--save-intermediates", inter, "--out", tmp_path / "out.png",
    )
    assert code == 0
    names = sorted(p.name for p in inter.iterdir())
    assert names == ["step01_level3.png", "step02_level2.png", "step03_level1.png"]


def test_constant_style_exits_numerical(tmp_path, images):
    flat = tmp_path / "flat.png"
    save_image(flat, np.full((48, 48, 3), 0.25, dtype=np.float32))
    code = run(
        "stylize", "--weights", MODEL, "--content", images["content"],
        "--style", flat, "--alpha", 1.0, "--out", tmp_path / "out.png",
    )
    assert code == 4


# --------------------------------------------------------------- weights


def test_missing_weights_names_both_sources(capsys, monkeypatch, tmp_path, images):
    monkeypatch.delenv("WCT_WEIGHTS", raising=False)
    code = run(
        "stylize", "--content", images["content"],
        "--style", images["style"], "--out", tmp_path / "out.png",
    )
    assert code == 2
    err = capsys.readouterr().err
    assert "--weights" in err and "WCT_WEIGHTS" in err


def test_weights_from_environment(monkeypatch, tmp_path, images):
    monkeypatch.setenv("WCT_WEIGHTS", MODEL)
    out = tmp_path / "out.png"
    assert run(
        "reconstruct", "--input", images["content"], "--level", 1, "--out", out
    ) == 0
    assert out.exists()


def test_corrupt_weights_exit_code(tmp_path, images):
    bad = tmp_path / "bad.wctw"
    bad.write_bytes(b"WCTW" + b"\x00" * 64)
    code = run(
        "reconstruct", "--weights", bad, "--input", images["content"],
        "--level", 1, "--out", tmp_path / "out.png",
    )
    assert code == 5


def test_inspect_weights_lists_tensors(capsys):
    assert run("inspect-weights", "--weights", MODEL) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].startswith("# 88 tensors")
    assert "channel_order=bgr" in lines[0]
    assert "conv1_1.weight 8x3x3x3 float32" in lines
    assert len(lines) == 89


# --------------------------------------------------------------- texture


def test_texture_deterministic_bytes(tmp_path, images):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    for out in (a, b):
        assert run(
            "texture", "--weights", MODEL, "--style", images["style"],
            "--size", "32x32", "--seed", 7, "--passes", 2, "--out", out,
        ) == 0
    assert a.read_bytes() == b.read_bytes()


def test_texture_interp_endpoint_matches_single(tmp_path, images):
    solo = tmp_path / "solo.png"
    mix = tmp_path / "mix.png"
    assert run(
        "texture", "--weights", MODEL, "--style", images["style"],
        "--size", "32x32", "--seed", 5, "--out", solo,
    ) == 0
    assert run(
        "texture-interp", "--weights", MODEL, "--style-a", images["style"],
        "--style-b", images["style_b"], "--beta", 1.0,
        "--size", "32x32", "--seed", 5, "--out", mix,
    ) == 0
    assert solo.read_bytes() == mix.read_bytes()


# ---------------------------------------------------------------- others


def test_metric_output_format(capsys, images):
    assert run(
        "metric", "--weights", MODEL, "--result", images["content"],
        "--style", images["style"],
    ) == 0
    out = capsys.readouterr().out.strip()
    m = re.fullmatch(r"L_s=([0-9.eE+-]+) log_L_s=([0-9.eE+-]+|-inf)", out)
    assert m, out
    assert float(m.group(1)) > 0.0


def test_metric_identical_images(capsys, images):
    assert run(
        "metric", "--weights", MODEL, "--result", images["style"],
        "--style", images["style"],
    ) == 0
    out = capsys.readouterr().out.strip()
    assert out == "L_s=0 log_L_s=-inf"


def test_whiten_viz_writes_output(tmp_path, images):
    out = tmp_path / "w.png"
    assert run(
        "whiten-viz", "--weights", MODEL, "--input", images["content"],
        "--level", 2, "--out", out,
    ) == 0
    img = load_image(out)
    assert img.shape == (48, 48, 3)


def test_missing_input_file_is_io_error(tmp_path):
    code = run(
        "reconstruct", "--weights", MODEL, "--input", tmp_path / "nope.png",
        "--level", 1, "--out", tmp_path / "out.png",
    )
    assert code == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["texture", "--weights", MODEL, "--style", "s.png", "--size", "banana", "--out", "o.png"],
        ["texture", "--weights", MODEL, "--style", "s.png", "--size", "0x32", "--out", "o.png"],
        ["stylize", "--weights", MODEL, "--content", "c.png", "--style", "s.png",
         "--levels", "5;4", "--out", "o.png"],
        ["stylize", "--weights", MODEL, "--content", "c.png", "--style", "s.png",
         "--levels", "9", "--out", "o.png"],
    ],
)
def test_bad_arguments_exit_usage(capsys, argv):
    assert main(argv) == 2
    capsys.readouterr()  # swallow argparse noise


def test_help_shows_defaults(capsys):
    assert main(["stylize", "--help"]) == 0
    out = capsys.readouterr().out
    assert "0.6" in out
    assert "5,4,3,2,1" in out


def test_console_script_smoke(tmp_path, images):
    out = tmp_path / "out.png"
    proc = subprocess.run(
        [sys.executable, "-m", "wctransfer.cli", "reconstruct",
         "--weights", MODEL, "--input", images["content"],
         "--level", "1", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
