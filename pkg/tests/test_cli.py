import numpy as np
import pytest

from upsample import cli, verify
from upsample.ops import ConvParams, subpixel_conv
from upsample.tensor import Tensor, max_abs_diff
from upsample.tensorfile import read_package, read_tensor, write_tensor
from upsample.transforms import mac_reduction_ratio_nn


def run(argv):
    return cli.main(argv)


def test_verify_zero_trials_vacuous_pass(capsys):
    assert run(["verify", "--trials", "0"]) == 0
    assert "VERIFY PASS" in capsys.readouterr().out


def test_verify_default_seed_passes(capsys):
    assert run(["verify", "--trials", "6", "--max-extent", "8"]) == 0
    out = capsys.readouterr().out
    assert "max-abs" in out and "VERIFY PASS" in out


def test_verify_injected_fault_fails(capsys, monkeypatch):
    def broken_revd(x, w, params):
        out = verify.DEFAULT_VARIANTS["standard"](x, w, params)
        return Tensor(out.data + np.float32(0.01))

    monkeypatch.setitem(verify.DEFAULT_VARIANTS, "revd", broken_revd)
    assert run(["verify", "--trials", "4", "--max-extent", "6"]) == 1
    assert "VERIFY FAIL" in capsys.readouterr().out


def test_transform_subpixel_and_infer_roundtrip(tmp_path, rng, capsys):
    conv = Tensor(rng.uniform(-1, 1, (12, 3, 3, 3)).astype(np.float32))
    x = Tensor(rng.uniform(-1, 1, (3, 8, 8)).astype(np.float32))
    kfile = tmp_path / "conv.upst"
    write_tensor(conv, kfile)
    pkg = tmp_path / "kernels.upkg"
    assert run(["transform", "--from", "subpixel", "--kernels", str(kfile),
                "--r", "2", "--out", str(pkg)]) == 0
    out = capsys.readouterr().out
    assert "S=2 K^D=6 P^D=2" in out

    kernels, prov = read_package(pkg)
    assert prov.source_algorithm == "sub-pixel"
    assert kernels.dims == (3, 3, 6, 6)

    xfile = tmp_path / "x.upst"
    write_tensor(x, xfile)
    yfile = tmp_path / "y.upst"
    assert run(["infer", "--input", str(xfile), "--package", str(pkg),
                "--variant", "revd2", "--out", str(yfile)]) == 0
    got = read_tensor(yfile)
    direct = subpixel_conv(x, conv, ConvParams(3, 1, 1), 2)
    assert got.dims == (3, 16, 16)
    assert max_abs_diff(got, direct) <= 1e-4


def test_transform_nn_resize_prints_mac_ratio(tmp_path, rng, capsys):
    conv = Tensor(rng.uniform(-1, 1, (3, 3, 3, 3)).astype(np.float32))
    kfile = tmp_path / "conv.upst"
    write_tensor(conv, kfile)
    pkg = tmp_path / "nn.upkg"
    assert run(["transform", "--from", "nn-resize", "--kernels", str(kfile),
                "--r", "2", "--out", str(pkg)]) == 0
    out = capsys.readouterr().out
    assert "0.444" in out
    assert f"{mac_reduction_ratio_nn(3, 2):.3f}" in out


def test_infer_all_variants_agree(tmp_path, rng):
    conv = Tensor(rng.uniform(-1, 1, (4, 2, 3, 3)).astype(np.float32))
    x = Tensor(rng.uniform(-1, 1, (2, 6, 6)).astype(np.float32))
    kfile, xfile, pkg = tmp_path / "c.upst", tmp_path / "x.upst", tmp_path / "p.upkg"
    write_tensor(conv, kfile)
    write_tensor(x, xfile)
    assert run(["transform", "--from", "subpixel", "--kernels", str(kfile),
                "--r", "2", "--out", str(pkg)]) == 0
    outputs = []
    for variant in ("standard", "revd", "revd2", "strd", "tdc"):
        yfile = tmp_path / f"y-{variant}.upst"
        assert run(["infer", "--input", str(xfile), "--package", str(pkg),
                    "--variant", variant, "--out", str(yfile)]) == 0
        outputs.append(read_tensor(yfile))
    for other in outputs[1:]:
        assert max_abs_diff(outputs[0], other) <= 1e-4


def test_infer_tile_legality_error_for_tdc(tmp_path, rng, capsys):
    conv = Tensor(rng.uniform(-1, 1, (4, 2, 3, 3)).astype(np.float32))
    x = Tensor(rng.uniform(-1, 1, (2, 14, 14)).astype(np.float32))
    kfile, xfile, pkg = tmp_path / "c.upst", tmp_path / "x.upst", tmp_path / "p.upkg"
    write_tensor(conv, kfile)
    write_tensor(x, xfile)
    run(["transform", "--from", "subpixel", "--kernels", str(kfile), "--r", "2",
         "--out", str(pkg)])
    code = run(["infer", "--input", str(xfile), "--package", str(pkg),
                "--variant", "tdc", "--tiles", "7x7", "--out", str(tmp_path / "y.upst")])
    assert code == 2
    assert "divisible" in capsys.readouterr().err


def test_infer_revd2_tiled_equals_untiled(tmp_path, rng):
    conv = Tensor(rng.uniform(-1, 1, (4, 2, 3, 3)).astype(np.float32))
    x = Tensor(rng.uniform(-1, 1, (2, 14, 14)).astype(np.float32))
    kfile, xfile, pkg = tmp_path / "c.upst", tmp_path / "x.upst", tmp_path / "p.upkg"
    write_tensor(conv, kfile)
    write_tensor(x, xfile)
    run(["transform", "--from", "subpixel", "--kernels", str(kfile), "--r", "2",
         "--out", str(pkg)])
    y1, y2 = tmp_path / "y1.upst", tmp_path / "y2.upst"
    assert run(["infer", "--input", str(xfile), "--package", str(pkg),
                "--variant", "revd2", "--tiles", "7x7", "--out", str(y1)]) == 0
    assert run(["infer", "--input", str(xfile), "--package", str(pkg),
                "--variant", "revd2", "--out", str(y2)]) == 0
    assert y1.read_bytes() == y2.read_bytes()


def test_analyze_csv_deterministic(tmp_path):
    args = ["analyze", "--algos", "C-SP,D-SP", "--r-range", "1..3", "--H", "64",
            "--csv", str(tmp_path / "a.csv"), "--svg", str(tmp_path / "a.svg")]
    assert run(args) == 0
    first_csv = (tmp_path / "a.csv").read_bytes()
    first_svg = (tmp_path / "a.svg").read_bytes()
    assert run(args) == 0
    assert (tmp_path / "a.csv").read_bytes() == first_csv
    assert (tmp_path / "a.svg").read_bytes() == first_svg
    text = first_csv.decode()
    assert text.splitlines()[4].startswith("algorithm,r,macs,")
    assert "D-SP/REVD2,2," in text
    assert first_svg.startswith(b"<svg ")


def test_analyze_default_workload_headline_ratio(tmp_path):
    # D-SP/C-SP normalized-latency ratio at r=2 on the bundled profile ~ 2.2
    csv = tmp_path / "full.csv"
    assert run(["analyze", "--algos", "C-SP,D-SP", "--r-range", "1..2",
                "--csv", str(csv)]) == 0
    rows = {}
    for line in csv.read_text().splitlines():
        if line.startswith("#") or line.startswith("algorithm"):
            continue
        fields = line.split(",")
        rows[(fields[0], int(fields[1]))] = fields
    ratio = float(rows[("C-SP", 2)][11]) / float(rows[("D-SP/REVD2", 2)][11])
    assert ratio == pytest.approx(2.2, rel=0.02)


def test_analyze_single_point_normalization(tmp_path, capsys):
    assert run(["analyze", "--algos", "D-SP", "--r-range", "1..1", "--H", "32"]) == 0
    out = capsys.readouterr().out
    row = [l for l in out.splitlines() if l.startswith("D-SP/REVD2,1,")][0]
    fields = row.split(",")
    assert float(fields[11]) == 1.0  # T_normalized
    assert float(fields[12]) == 1.0  # E_normalized


def test_analyze_unknown_profile_is_io_error(capsys):
    assert run(["analyze", "--profile", "nope"]) == 3
    assert "profile" in capsys.readouterr().err


def test_analyze_bad_r_range_is_usage_error(capsys):
    assert run(["analyze", "--r-range", "2..x"]) == 2


def test_tiling_command_reports(capsys):
    assert run(["tiling", "--lanes", "16", "--out-extent", "28", "--stride", "2",
                "--tile", "7"]) == 0
    out = capsys.readouterr().out
    assert "workloads: 16" in out and "utilization: 1.0000" in out
    assert "REVD=no" in out and "REVD2=yes" in out

    assert run(["tiling", "--lanes", "16", "--out-extent", "28", "--stride", "2",
                "--tile", "8"]) == 0
    assert "overhead: 1.30612" in capsys.readouterr().out

    assert run(["tiling", "--lanes", "16", "--out-extent", "28", "--stride", "2",
                "--tile", "6"]) == 0
    assert "utilization: 0.7812" in capsys.readouterr().out


def test_tiling_csv_row(tmp_path):
    csv = tmp_path / "t.csv"
    assert run(["tiling", "--lanes", "16", "--out-extent", "28", "--stride", "2",
                "--tile", "7", "--csv", str(csv)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("lanes,")
    assert lines[1].startswith("16,28,2,7,16,1,")


def test_tiling_illegal_algorithm_is_usage_error(capsys):
    code = run(["tiling", "--lanes", "16", "--out-extent", "28", "--stride", "2",
                "--tile", "7", "--algorithm", "TDC"])
    assert code == 2


def test_missing_input_file_is_io_error(tmp_path, capsys):
    code = run(["infer", "--input", str(tmp_path / "missing.upst"),
                "--package", str(tmp_path / "missing.upkg"), "--out", str(tmp_path / "y.upst")])
    assert code == 3


def test_corrupt_package_is_io_error(tmp_path, rng, capsys):
    x = Tensor(rng.uniform(-1, 1, (2, 4, 4)).astype(np.float32))
    xfile = tmp_path / "x.upst"
    write_tensor(x, xfile)
    bad = tmp_path / "bad.upkg"
    bad.write_bytes(b"JUNKJUNKJUNK")
    assert run(["infer", "--input", str(xfile), "--package", str(bad),
                "--out", str(tmp_path / "y.upst")]) == 3


def test_usage_error_exit_code_from_argparse():
    with pytest.raises(SystemExit) as exc:
        cli.main(["transform", "--from", "bogus", "--kernels", "x", "--r", "2", "--out", "y"])
    assert exc.value.code == 2


def test_profiles_listing(capsys):
    assert run(["profiles"]) == 0
    out = capsys.readouterr().out
    for name in ("gtx680", "memory-bound-extreme", "compute-bound-extreme"):
        assert name in out
    assert "B_tau" in out


def test_infer_output_matches_package_geometry(tmp_path, rng):
    # geometry mismatch between input and package -> usage error (shape)
    conv = Tensor(rng.uniform(-1, 1, (4, 2, 3, 3)).astype(np.float32))
    kfile, pkg = tmp_path / "c.upst", tmp_path / "p.upkg"
    write_tensor(conv, kfile)
    run(["transform", "--from", "subpixel", "--kernels", str(kfile), "--r", "2",
         "--out", str(pkg)])
    wrong_channels = Tensor(rng.uniform(-1, 1, (3, 6, 6)).astype(np.float32))
    xfile = tmp_path / "x.upst"
    write_tensor(wrong_channels, xfile)
    assert run(["infer", "--input", str(xfile), "--package", str(pkg),
                "--out", str(tmp_path / "y.upst")]) == 2
