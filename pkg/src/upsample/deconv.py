"""Five functionally equivalent deconvolution (transposed convolution) variants.

All variants compute the same upsampled output for kernels stored as
(in_channels, out_channels, K, K) and geometry O = S*(I-1) + K - 2P:

* ``deconv_standard`` strides over the input and scatter-accumulates into the
  output, producing overlapping sums when K > S.  This is the oracle the
  other variants are tested against.
* ``deconv_revd`` traverses the output space in S x S tiles, skipping stride
  holes with a precomputed per-tap offset table (2K modulo ops per call).
* ``deconv_revd2`` moves stride-hole skipping into the weight loop so every
  output pixel is computed independently; any rectangular output tiling
  (including edges not divisible by S) yields bitwise-identical results.
* ``deconv_strd`` inserts S-1 zeros between input pixels and runs a plain
  convolution with index-reversed, channel-swapped kernels.
* ``deconv_tdc`` executes S^2 phase convolutions with kernels sliced by
  ``transforms.tdc_transform_kernels`` and stitches each phase directly into
  its strided output positions during computation.

Out-of-range output writes (possible when P > 0) are silently discarded;
that is what crops the output to the closed-form extent.  Stride-hole
arithmetic uses mathematical (always non-negative) modulo.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ops import GeometryError, MacCounter, _conv_accumulate
from .tensor import ShapeError, Tensor


@dataclass(frozen=True)
class DeconvParams:
    """Deconvolution geometry: square kernel size K, stride S, padding P."""

    kernel_size: int
    stride: int
    padding: int

    def __post_init__(self):
        if self.kernel_size < 1:
            raise GeometryError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if self.stride < 1:
            raise GeometryError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise GeometryError(f"padding must be >= 0, got {self.padding}")

    def out_extent(self, in_extent: int) -> int:
        out = self.stride * (in_extent - 1) + self.kernel_size - 2 * self.padding
        if out < 1:
            raise GeometryError(
                f"non-positive output extent {out} for in={in_extent} "
                f"K={self.kernel_size} S={self.stride} P={self.padding}"
            )
        return out


def _check_deconv_args(input: Tensor, kernels: Tensor, params: DeconvParams):
    if input.data.ndim != 3:
        raise ShapeError(f"input must be rank 3, got dims {input.dims}")
    if kernels.data.ndim != 4:
        raise ShapeError(f"kernels must be rank 4, got dims {kernels.dims}")
    i_c, o_c, k_h, k_w = kernels.dims
    if k_h != k_w:
        raise ShapeError(f"kernels must be square, got {k_h}x{k_w}")
    if k_h != params.kernel_size:
        raise ShapeError(f"kernel extent {k_h} does not match K={params.kernel_size}")
    if i_c != input.dims[0]:
        raise ShapeError(f"kernel input channels {i_c} != input channels {input.dims[0]}")
    o_h = params.out_extent(input.dims[1])
    o_w = params.out_extent(input.dims[2])
    return o_c, o_h, o_w


def deconv_standard(
    input: Tensor,
    kernels: Tensor,
    params: DeconvParams,
    counter: MacCounter | None = None,
) -> Tensor:
    """Input-space deconvolution with overlapping output sums (the oracle)."""
    o_c, o_h, o_w = _check_deconv_args(input, kernels, params)
    i_c, i_h, i_w = input.dims
    k, s, p = params.kernel_size, params.stride, params.padding
    out = np.zeros((o_c, o_h, o_w), dtype=np.float64)
    # One (O_C, K, K) contribution block per input pixel, clipped into place.
    contrib = np.einsum(
        "chw,cokl->hwokl", input.data.astype(np.float64), kernels.data.astype(np.float64)
    )
    if counter is not None:
        counter.add(i_c * i_h * i_w * o_c * k * k)
    for ih in range(i_h):
        oh0 = s * ih - p
        kh_lo, kh_hi = max(0, -oh0), min(k, o_h - oh0)
        if kh_lo >= kh_hi:
            continue
        for iw in range(i_w):
            ow0 = s * iw - p
            kw_lo, kw_hi = max(0, -ow0), min(k, o_w - ow0)
            if kw_lo >= kw_hi:
                continue
            out[:, oh0 + kh_lo : oh0 + kh_hi, ow0 + kw_lo : ow0 + kw_hi] += contrib[
                ih, iw, :, kh_lo:kh_hi, kw_lo:kw_hi
            ]
    return Tensor(out.astype(np.float32))


def deconv_revd(
    input: Tensor,
    kernels: Tensor,
    params: DeconvParams,
    counter: MacCounter | None = None,
) -> Tensor:
    """Reverse-looping deconvolution: output traversal in S x S tiles.

    The per-tap output offset inside each tile is cached in two K-entry
    lookup tables, so only 2K modulo operations run per call.
    """
    o_c, o_h, o_w = _check_deconv_args(input, kernels, params)
    i_c, i_h, i_w = input.dims
    k, s, p = params.kernel_size, params.stride, params.padding
    # 2K-entry offset lookup (one table per spatial axis), built once per call
    offsets_h = [(s - (p - kk) % s) % s for kk in range(k)]
    offsets_w = [(s - (p - kk) % s) % s for kk in range(k)]

    def tap_span(offsets, kk: int, out_extent: int, in_extent: int):
        # outputs o = offsets[kk] + S*t with i = (o + P - kk)/S inside [0, in_extent)
        start = offsets[kk]
        i0 = (start + p - kk) // s
        if i0 < 0:
            start += s * (-i0)
            i0 = 0
        if start >= out_extent or i0 >= in_extent:
            return 0, 0, 0
        n = min((out_extent - 1 - start) // s + 1, in_extent - i0)
        return start, i0, n

    out = np.zeros((o_c, o_h, o_w), dtype=np.float64)
    x64 = input.data.astype(np.float64)
    w64 = kernels.data.astype(np.float64)
    for k_h in range(k):
        oh0, ih0, n_h = tap_span(offsets_h, k_h, o_h, i_h)
        if n_h == 0:
            continue
        for k_w in range(k):
            ow0, iw0, n_w = tap_span(offsets_w, k_w, o_w, i_w)
            if n_w == 0:
                continue
            if counter is not None:
                counter.add(n_h * n_w * i_c * o_c)
            view = x64[:, ih0 : ih0 + n_h, iw0 : iw0 + n_w]
            out[:, oh0 : oh0 + s * n_h : s, ow0 : ow0 + s * n_w : s] += np.einsum(
                "ihw,io->ohw", view, w64[:, :, k_h, k_w]
            )
    return Tensor(out.astype(np.float32))


def _tap_window(o: int, phase: int, p: int, s: int, k: int, in_extent: int):
    """Valid weight-space steps t for output index o at the given stride phase.

    Taps are kk = phase + S*t reading input i = q - t; returns (q, t_lo, t_hi)
    with t in [t_lo, t_hi) keeping both kk < K and 0 <= i < in_extent.
    """
    q = (o + p - phase) // s
    t_lo = max(0, q - in_extent + 1)
    t_hi = min(-(-(k - phase) // s), q + 1)
    return q, t_lo, t_hi


def _revd2_block(
    x64: np.ndarray,
    w64: np.ndarray,
    params: DeconvParams,
    out64: np.ndarray,
    rect: tuple[int, int, int, int],
    counter: MacCounter | None,
    offset_mode: str,
) -> None:
    """Fill one output rectangle; every pixel is computed independently."""
    k, s, p = params.kernel_size, params.stride, params.padding
    i_c, i_h, i_w = x64.shape
    o_c = w64.shape[1]
    kt = -(-k // s)
    h0, h1, w0, w1 = rect

    if offset_mode == "counter":
        j_w = (w0 + p) % s
        col_phases = []
        for _ in range(w0, w1):
            col_phases.append(j_w)
            j_w += 1
            if j_w >= s:
                j_w = 0
        j_h = (h0 + p) % s
    elif offset_mode == "modulo":
        col_phases = [(o_w + p) % s for o_w in range(w0, w1)]
    else:
        raise ValueError(f"unknown offset_mode {offset_mode!r}")

    cols = []
    for o_w, ph_w in zip(range(w0, w1), col_phases):
        q_w, tlo_w, thi_w = _tap_window(o_w, ph_w, p, s, k, i_w)
        cols.append((ph_w, q_w, tlo_w, thi_w))

    for o_h in range(h0, h1):
        if offset_mode == "counter":
            ph_h = j_h
            j_h += 1
            if j_h >= s:
                j_h = 0
        else:
            ph_h = (o_h + p) % s
        if counter is not None:
            counter.add((w1 - w0) * i_c * o_c * kt * kt)
        q_h, tlo_h, thi_h = _tap_window(o_h, ph_h, p, s, k, i_h)
        if tlo_h >= thi_h:
            continue
        wrow = w64[:, :, ph_h + s * tlo_h : ph_h + s * thi_h : s, :]
        xrow = x64[:, q_h - thi_h + 1 : q_h - tlo_h + 1, :][:, ::-1, :]
        for j, (ph_w, q_w, tlo_w, thi_w) in enumerate(cols):
            if tlo_w >= thi_w:
                continue
            xb = xrow[:, :, q_w - thi_w + 1 : q_w - tlo_w + 1][:, :, ::-1]
            wb = wrow[:, :, :, ph_w + s * tlo_w : ph_w + s * thi_w : s]
            out64[:, o_h, w0 + j] = np.einsum("ihw,iohw->o", xb, wb)


def grid_tiles(o_h: int, o_w: int, tile_h: int, tile_w: int) -> list[tuple[int, int, int, int]]:
    """Partition an (o_h, o_w) output into row-major rectangles of at most
    tile_h x tile_w pixels (edge tiles are smaller)."""
    if tile_h < 1 or tile_w < 1:
        raise GeometryError(f"tile extents must be >= 1, got {tile_h}x{tile_w}")
    rects = []
    for h0 in range(0, o_h, tile_h):
        for w0 in range(0, o_w, tile_w):
            rects.append((h0, min(h0 + tile_h, o_h), w0, min(w0 + tile_w, o_w)))
    return rects


def deconv_revd2(
    input: Tensor,
    kernels: Tensor,
    params: DeconvParams,
    counter: MacCounter | None = None,
    tiles: Iterable[tuple[int, int, int, int]] | None = None,
    offset_mode: str = "modulo",
) -> Tensor:
    """Improved reverse-looping deconvolution with per-pixel independence.

    ``tiles`` optionally lists disjoint (h0, h1, w0, w1) rectangles covering
    the output; they may be executed in any order (or concurrently) and the
    result is bitwise identical to the monolithic run.  ``offset_mode``
    selects between the modulo formulation and the counter replacement that
    removes per-pixel modulo arithmetic.
    """
    o_c, o_h, o_w = _check_deconv_args(input, kernels, params)
    x64 = input.data.astype(np.float64)
    w64 = kernels.data.astype(np.float64)
    out = np.zeros((o_c, o_h, o_w), dtype=np.float64)
    if tiles is None:
        rects: Sequence[tuple[int, int, int, int]] = [(0, o_h, 0, o_w)]
    else:
        rects = list(tiles)
        for h0, h1, w0, w1 in rects:
            if not (0 <= h0 <= h1 <= o_h and 0 <= w0 <= w1 <= o_w):
                raise GeometryError(
                    f"tile ({h0},{h1},{w0},{w1}) outside output {o_h}x{o_w}"
                )
    for rect in rects:
        _revd2_block(x64, w64, params, out, rect, counter, offset_mode)
    return Tensor(out.astype(np.float32))


def zero_insert(input: Tensor, stride: int) -> Tensor:
    """Place in[i_h, i_w] at (S*i_h, S*i_w) in a map of extent S*(I-1)+1."""
    if stride < 1:
        raise GeometryError(f"stride must be >= 1, got {stride}")
    c, h, w = input.dims
    z = np.zeros((c, stride * (h - 1) + 1, stride * (w - 1) + 1), dtype=np.float32)
    z[:, ::stride, ::stride] = input.data
    return Tensor(z)


def flip_kernels_for_conv(kernels: Tensor) -> Tensor:
    """Swap channel axes and reverse both spatial axes: deconv -> conv layout."""
    if kernels.data.ndim != 4:
        raise ShapeError(f"kernels must be rank 4, got dims {kernels.dims}")
    return Tensor(np.ascontiguousarray(kernels.data.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]))


def deconv_strd(
    input: Tensor,
    kernels: Tensor,
    params: DeconvParams,
    counter: MacCounter | None = None,
) -> Tensor:
    """Fractionally strided deconvolution: zero insertion + flipped-kernel conv.

    The convolution runs at stride 1 with padding K-1-P; when that is
    negative the zero-inserted map is cropped instead (large P trims the
    output rather than extending it).
    """
    _check_deconv_args(input, kernels, params)
    k, s, p = params.kernel_size, params.stride, params.padding
    z = zero_insert(input, s).data
    conv_pad = k - 1 - p
    if conv_pad < 0:
        crop = -conv_pad
        z = z[:, crop:-crop, crop:-crop]
        conv_pad = 0
    flipped = flip_kernels_for_conv(kernels)
    out = _conv_accumulate(z, flipped.data, 1, conv_pad, counter)
    return Tensor(out.astype(np.float32))


def deconv_tdc(
    input: Tensor,
    tdc_kernels: Tensor,
    params: DeconvParams,
    counter: MacCounter | None = None,
) -> Tensor:
    """Deconvolution as S^2 phase convolutions with transformed kernels.

    Phase (ph_h, ph_w) owns the output pixels with (o+P) mod S equal to the
    phase on each axis; its tile is a stride-1 convolution of the input with
    kernel slice n = S*ph_h + ph_w, written straight into the strided output
    locations (stitching happens during computation, not as a second pass).
    """
    if input.data.ndim != 3:
        raise ShapeError(f"input must be rank 3, got dims {input.dims}")
    if tdc_kernels.data.ndim != 5:
        raise ShapeError(f"TDC kernels must be rank 5, got dims {tdc_kernels.dims}")
    o_c, i_c, n_slices, k_t, k_t2 = tdc_kernels.dims
    k, s, p = params.kernel_size, params.stride, params.padding
    if n_slices != s * s:
        raise ShapeError(f"expected {s * s} kernel slices for S={s}, got {n_slices}")
    if k_t != k_t2 or k_t != -(-k // s):
        raise ShapeError(f"slice extent {k_t}x{k_t2} does not match ceil(K/S)={-(-k // s)}")
    if i_c != input.dims[0]:
        raise ShapeError(f"kernel input channels {i_c} != input channels {input.dims[0]}")
    o_h = params.out_extent(input.dims[1])
    o_w = params.out_extent(input.dims[2])
    i_h, i_w = input.dims[1], input.dims[2]
    out = np.zeros((o_c, o_h, o_w), dtype=np.float64)
    x = input.data

    def phase_span(phase: int, out_extent: int):
        first = (phase - p) % s
        if first >= out_extent:
            return first, 0, 0
        count = -(-(out_extent - first) // s)
        q0 = (first + p - phase) // s
        return first, count, q0

    full_h = i_h + k_t - 1  # full-padded conv extent per axis
    full_w = i_w + k_t - 1
    for ph_h in range(s):
        oh0, n_h, q0_h = phase_span(ph_h, o_h)
        for ph_w in range(s):
            ow0, n_w, q0_w = phase_span(ph_w, o_w)
            if counter is not None:
                counter.add(o_c * n_h * n_w * i_c * k_t * k_t)
            if n_h == 0 or n_w == 0:
                continue
            w_slice = tdc_kernels.data[:, :, s * ph_h + ph_w]
            conv = _conv_accumulate(x, w_slice, 1, k_t - 1, None)
            tile = np.zeros((o_c, n_h, n_w), dtype=np.float64)
            avail_h = max(0, min(n_h, full_h - q0_h))
            avail_w = max(0, min(n_w, full_w - q0_w))
            if avail_h and avail_w:
                tile[:, :avail_h, :avail_w] = conv[
                    :, q0_h : q0_h + avail_h, q0_w : q0_w + avail_w
                ]
            out[:, oh0::s, ow0::s] = tile
    return Tensor(out.astype(np.float32))
