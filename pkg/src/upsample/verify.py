"""Randomized functional-equivalence suite.

Draws random geometries and values, executes every deconvolution variant on
the same arguments, and checks all pairwise max-abs differences against a
tolerance; also exercises both kernel transformations end-to-end against
their convolution-side references.  Seeded, so any failure is reproducible
from the printed parameter tuple.

The variant map is injectable so the harness itself can be tested by
substituting a deliberately broken implementation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping

import numpy as np

from . import deconv, ops, transforms
from .tensor import Tensor, max_abs_diff

VariantFn = Callable[[Tensor, Tensor, deconv.DeconvParams], Tensor]


def _tdc(x: Tensor, w: Tensor, params: deconv.DeconvParams) -> Tensor:
    sliced = transforms.tdc_transform_kernels(w, params.stride)
    return deconv.deconv_tdc(x, sliced, params)


DEFAULT_VARIANTS: dict[str, VariantFn] = {
    "standard": deconv.deconv_standard,
    "revd": deconv.deconv_revd,
    "revd2": deconv.deconv_revd2,
    "strd": deconv.deconv_strd,
    "tdc": _tdc,
}


@dataclass(frozen=True)
class CaseResult:
    label: str
    max_abs_error: float
    detail: str = ""


@dataclass
class SuiteResult:
    tolerance: float
    cases: list[CaseResult] = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max((c.max_abs_error for c in self.cases), default=0.0)

    @property
    def failures(self) -> list[CaseResult]:
        return [c for c in self.cases if c.max_abs_error > self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failures


def _draw_deconv_geometry(rng: np.random.Generator, max_extent: int):
    while True:
        i_c, o_c = (int(v) for v in rng.integers(1, 5, 2))
        i_h, i_w = (int(v) for v in rng.integers(2, max_extent + 1, 2))
        k = int(rng.integers(2, 7))
        s = int(rng.integers(1, 4))
        p = int(rng.integers(0, 3))
        if s * (i_h - 1) + k - 2 * p >= 1 and s * (i_w - 1) + k - 2 * p >= 1:
            return i_c, o_c, i_h, i_w, k, s, p


def run_equivalence_suite(
    seed: int = 42,
    trials: int = 50,
    max_extent: int = 16,
    tolerance: float = 1e-4,
    variants: Mapping[str, VariantFn] | None = None,
    include_transforms: bool = True,
) -> SuiteResult:
    """Run `trials` five-way deconvolution cases plus transformation cases."""
    variants = dict(DEFAULT_VARIANTS if variants is None else variants)
    rng = np.random.default_rng(seed)
    result = SuiteResult(tolerance=tolerance)

    for _ in range(trials):
        i_c, o_c, i_h, i_w, k, s, p = _draw_deconv_geometry(rng, max_extent)
        x = Tensor(rng.uniform(-1.0, 1.0, (i_c, i_h, i_w)).astype(np.float32))
        w = Tensor(rng.uniform(-1.0, 1.0, (i_c, o_c, k, k)).astype(np.float32))
        params = deconv.DeconvParams(k, s, p)
        outputs = {name: fn(x, w, params) for name, fn in variants.items()}
        worst, worst_pair = 0.0, ""
        for a, b in combinations(sorted(outputs), 2):
            d = max_abs_diff(outputs[a], outputs[b])
            if d > worst:
                worst, worst_pair = d, f"{a} vs {b}"
        result.cases.append(
            CaseResult(
                label=f"deconv K={k} S={s} P={p} IC={i_c} OC={o_c} in={i_h}x{i_w}",
                max_abs_error=worst,
                detail=worst_pair,
            )
        )

    if include_transforms and trials > 0:
        for _ in range(max(1, trials // 2)):
            k = int(rng.choice([3, 5]))
            r = int(rng.integers(1, 4))
            p = (k - 1) // 2
            i_c = int(rng.integers(1, 4))
            o_c = int(rng.integers(1, 4))
            h = int(rng.integers(2, 9))
            x = Tensor(rng.uniform(-1.0, 1.0, (i_c, h, h)).astype(np.float32))

            wsp = Tensor(rng.uniform(-1.0, 1.0, (r * r * o_c, i_c, k, k)).astype(np.float32))
            ref = ops.subpixel_conv(x, wsp, ops.ConvParams(k, 1, p), r)
            d = transforms.derive_params_subpixel(k, p, r)
            got = variants["standard"](
                x,
                transforms.weight_shuffle(wsp, r),
                deconv.DeconvParams(d.deconv_kernel_size, d.stride, d.deconv_padding),
            )
            result.cases.append(
                CaseResult(
                    label=f"weight-shuffle K={k} r={r} IC={i_c} OC={o_c} in={h}x{h}",
                    max_abs_error=max_abs_diff(ref, got),
                    detail="subpixel_conv vs deconv(weight_shuffle)",
                )
            )

            wnn = Tensor(rng.uniform(-1.0, 1.0, (o_c, i_c, k, k)).astype(np.float32))
            ref = ops.resize_conv(x, wnn, ops.ConvParams(k, 1, p), r)
            d = transforms.derive_params_nn(k, p, r)
            got = variants["standard"](
                x,
                transforms.weight_convolution(wnn, r),
                deconv.DeconvParams(d.deconv_kernel_size, d.stride, d.deconv_padding),
            )
            result.cases.append(
                CaseResult(
                    label=f"weight-convolution K={k} r={r} IC={i_c} OC={o_c} in={h}x{h}",
                    max_abs_error=max_abs_diff(ref, got),
                    detail="resize_conv vs deconv(weight_convolution)",
                )
            )

    return result
