"""Command-line interface.

Subcommands:

* ``verify``    randomized equivalence suite over all deconvolution variants
                and both kernel transformations
* ``transform`` rewrite trained conv kernels as deconvolution kernel packages
* ``infer``     run a deconvolution variant on a tensor file using a package
* ``analyze``   cost-model sweep to CSV (and optional SVG charts)
* ``tiling``    SIMD tiling legality / load-balance report
* ``profiles``  list available hardware profiles

Exit status: 0 success, 1 verification failure, 2 usage error, 3 I/O or
parse error.  Outputs carry no timestamps, so identical flags (and seed)
produce identical bytes.
"""
from __future__ import annotations

import argparse
import sys

from . import costmodel, deconv, report, tensorfile, tiling, transforms, verify
from .ops import GeometryError
from .tensor import DimensionError, ShapeError
from .transforms import InvalidKernelError

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

_USAGE_ERRORS = (
    GeometryError,
    ShapeError,
    DimensionError,
    InvalidKernelError,
    tiling.LegalityError,
    costmodel.DomainError,
)
_IO_ERRORS = (tensorfile.FormatError, costmodel.ProfileError, OSError)

DEFAULT_ALGOS = "C-SP,C-NN,D-SP/REVD2,D-SP/STRD,D-SP/TDC,D-NN/REVD2,D-NN/STRD,D-NN/TDC"


def _parse_r_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        if sep:
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(lo)]
    except ValueError:
        raise costmodel.DomainError(f"bad r range {text!r}, expected A..B or N") from None
    if not values or values[0] < 1:
        raise costmodel.DomainError(f"empty or non-positive r range {text!r}")
    return values


def _parse_tiles(text: str) -> tuple[int, int]:
    h, sep, w = text.lower().partition("x")
    try:
        if not sep:
            raise ValueError
        th, tw = int(h), int(w)
    except ValueError:
        raise GeometryError(f"bad tile spec {text!r}, expected HxW") from None
    if th < 1 or tw < 1:
        raise GeometryError(f"tile extents must be >= 1, got {text!r}")
    return th, tw


def _cmd_verify(args) -> int:
    result = verify.run_equivalence_suite(
        seed=args.seed,
        trials=args.trials,
        max_extent=args.max_extent,
        tolerance=args.tolerance,
    )
    for case in result.cases:
        status = "ok" if case.max_abs_error <= result.tolerance else "FAIL"
        print(f"{status:4s} {case.label}: max-abs {case.max_abs_error:.3e} ({case.detail})")
    if result.passed:
        print(
            f"VERIFY PASS: {len(result.cases)} cases, worst max-abs "
            f"{result.worst:.3e} <= {result.tolerance:g} (seed {args.seed})"
        )
        return EXIT_OK
    print(
        f"VERIFY FAIL: {len(result.failures)} of {len(result.cases)} cases exceed "
        f"{result.tolerance:g} (reproduce with --seed {args.seed})"
    )
    return EXIT_VERIFY_FAILED


def _cmd_transform(args) -> int:
    kernels = tensorfile.read_tensor(args.kernels)
    if len(kernels.dims) != 4 or kernels.dims[2] != kernels.dims[3]:
        raise ShapeError(f"kernel file must hold square rank-4 kernels, got {kernels.dims}")
    k = kernels.dims[2]
    if k % 2 == 0:
        raise InvalidKernelError(f"kernel size must be odd, got K={k}")
    p = (k - 1) // 2  # same-padded geometry is implied by the training setup
    r = args.r
    if args.source == "subpixel":
        derived = transforms.derive_params_subpixel(k, p, r)
        out_kernels = transforms.weight_shuffle(kernels, r)
        prov = tensorfile.provenance_for("sub-pixel", k, p, r, out_kernels)
    else:
        derived = transforms.derive_params_nn(k, p, r)
        out_kernels = transforms.weight_convolution(kernels, r)
        prov = tensorfile.provenance_for("nn-resize", k, p, r, out_kernels)
    tensorfile.write_package(out_kernels, prov, args.out)
    print(
        f"{args.source}: K={k} P={p} r={r} -> S={derived.stride} "
        f"K^D={derived.deconv_kernel_size} P^D={derived.deconv_padding}"
    )
    if args.source == "nn-resize":
        ratio = transforms.mac_reduction_ratio_nn(k, r)
        print(f"MAC reduction ratio (deconv/resize-conv): {ratio:.3f}")
    print(f"wrote package: {args.out} kernels {out_kernels.dims}")
    return EXIT_OK


_VARIANT_TILE_NAME = {"revd": "REVD", "revd2": "REVD2", "tdc": "TDC", "strd": "STRD-as-conv"}


def _cmd_infer(args) -> int:
    x = tensorfile.read_tensor(args.input)
    kernels, prov = tensorfile.read_package(args.package)
    params = deconv.DeconvParams(
        prov.deconv_kernel_size, prov.stride, prov.deconv_padding
    )
    tiles = None
    if args.tiles is not None:
        tile_h, tile_w = _parse_tiles(args.tiles)
        name = _VARIANT_TILE_NAME.get(args.variant)
        if name is not None:
            legality = tiling.tile_legality(params.stride, tile_h)
            legality_w = tiling.tile_legality(params.stride, tile_w)
            if not (legality[name] and legality_w[name]):
                raise tiling.LegalityError(
                    f"tile {args.tiles} is illegal for {args.variant} with stride "
                    f"{params.stride}: output tiling must be divisible by the stride"
                )
        if args.variant != "revd2":
            raise tiling.LegalityError(
                f"tiled dispatch is only supported for revd2 (variant {args.variant} "
                f"does not guarantee data-independent output tiles)"
            )
        o_h = params.out_extent(x.dims[1])
        o_w = params.out_extent(x.dims[2])
        tiles = deconv.grid_tiles(o_h, o_w, tile_h, tile_w)

    if args.variant == "standard":
        out = deconv.deconv_standard(x, kernels, params)
    elif args.variant == "revd":
        out = deconv.deconv_revd(x, kernels, params)
    elif args.variant == "revd2":
        out = deconv.deconv_revd2(x, kernels, params, tiles=tiles)
    elif args.variant == "strd":
        out = deconv.deconv_strd(x, kernels, params)
    else:
        sliced = transforms.tdc_transform_kernels(kernels, params.stride)
        out = deconv.deconv_tdc(x, sliced, params)
    tensorfile.write_tensor(out, args.out)
    tiled = f" tiles={args.tiles} ({len(tiles)} workloads)" if tiles else ""
    print(
        f"{args.variant}: {x.dims} -> {out.dims} "
        f"(S={params.stride} K^D={params.kernel_size} P^D={params.padding}){tiled}"
    )
    print(f"wrote tensor: {args.out}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    hw = costmodel.load_profile(args.profile)
    w = costmodel.WorkloadSpec(H=args.H, C=args.C, K=args.K, r=1)
    algos = [a for a in (s.strip() for s in args.algos.split(",")) if a]
    r_values = _parse_r_range(args.r_range)
    reports = costmodel.sweep(algos, r_values, w, hw)
    csv_text = report.sweep_csv(reports, w, hw)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(f"wrote CSV: {args.csv} ({len(reports)} rows)")
    else:
        print(csv_text, end="")
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(report.sweep_svg(reports, w, hw))
        print(f"wrote SVG: {args.svg}")
    return EXIT_OK


def _cmd_tiling(args) -> int:
    sc = tiling.TilingScenario(
        lanes=args.lanes, out_extent=args.out_extent, stride=args.stride, tile=args.tile
    )
    rep = tiling.analyze(sc, algorithm=args.algorithm)
    legality = tiling.tile_legality(sc.stride, sc.tile)
    legal = ", ".join(f"{name}={'yes' if ok else 'no'}" for name, ok in legality.items())
    print(f"scenario: lanes={sc.lanes} output={sc.out_extent}x{sc.out_extent} "
          f"stride={sc.stride} tile={sc.tile}")
    print(f"legality: {legal}")
    print(f"workloads: {rep.workloads}  passes: {rep.passes}  "
          f"utilization: {rep.utilization:.4f}  overhead: {rep.data_movement_overhead:.5f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("lanes,out_extent,stride,tile,workloads,passes,utilization,"
                     "data_movement_overhead,legal_for\n")
            fh.write(
                f"{sc.lanes},{sc.out_extent},{sc.stride},{sc.tile},{rep.workloads},"
                f"{rep.passes},{rep.utilization:.9e},{rep.data_movement_overhead:.9e},"
                f"{'|'.join(rep.legal_for)}\n"
            )
        print(f"wrote CSV: {args.csv}")
    return EXIT_OK


def _cmd_profiles(args) -> int:
    for name in costmodel.list_profiles():
        hw = costmodel.load_profile(name)
        print(
            f"{name}: tau_comp={hw.tau_comp:.4e} s/MAC tau_mem={hw.tau_mem:.4e} s/B "
            f"eps_comp={hw.eps_comp:.4e} J/MAC eps_mem={hw.eps_mem:.4e} J/B "
            f"pi0={hw.pi0:.4e} W B_tau={hw.time_balance:.3f} B_eps={hw.energy_balance:.3f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="upsample",
        description="Convolution-based upsampling algorithms, kernel transformations, "
        "and the analytical time/energy cost model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the randomized equivalence suite")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--max-extent", type=int, default=16)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("transform", help="convert trained conv kernels to a deconv package")
    p.add_argument("--from", dest="source", required=True, choices=["subpixel", "nn-resize"])
    p.add_argument("--kernels", required=True, help="input conv kernel tensor file")
    p.add_argument("--r", type=int, required=True, help="upsampling factor")
    p.add_argument("--out", required=True, help="output package file")
    p.set_defaults(fn=_cmd_transform)

    p = sub.add_parser("infer", help="run a deconvolution variant on a tensor file")
    p.add_argument("--input", required=True)
    p.add_argument("--package", required=True)
    p.add_argument(
        "--variant", default="revd2", choices=["standard", "revd", "revd2", "strd", "tdc"]
    )
    p.add_argument("--tiles", help="tile edge lengths HxW (revd2 only)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_infer)

    p = sub.add_parser("analyze", help="cost-model sweep to CSV/SVG")
    p.add_argument("--profile", default="gtx680")
    p.add_argument("--algos", default=DEFAULT_ALGOS)
    p.add_argument("--r-range", default="1..4")
    p.add_argument("--H", type=int, default=1024)
    p.add_argument("--C", type=int, default=3)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("tiling", help="SIMD tiling legality and load-balance report")
    p.add_argument("--lanes", type=int, required=True)
    p.add_argument("--out-extent", type=int, required=True)
    p.add_argument("--stride", type=int, required=True)
    p.add_argument("--tile", type=int, required=True)
    p.add_argument("--algorithm", choices=list(tiling.ALGORITHMS))
    p.add_argument("--csv")
    p.set_defaults(fn=_cmd_tiling)

    p = sub.add_parser("profiles", help="list available hardware profiles")
    p.set_defaults(fn=_cmd_profiles)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
