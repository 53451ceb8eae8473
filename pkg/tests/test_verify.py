import numpy as np

from upsample import deconv, verify
from upsample.tensor import Tensor


def test_suite_passes_with_real_variants():
    result = verify.run_equivalence_suite(seed=123, trials=8, max_extent=8)
    assert result.passed
    assert result.worst <= 1e-4
    assert len(result.cases) == 8 + 2 * 4  # deconv cases + two transforms per slot


def test_suite_zero_trials_is_vacuous_pass():
    result = verify.run_equivalence_suite(seed=1, trials=0)
    assert result.passed
    assert result.cases == []


def test_suite_is_seed_deterministic():
    a = verify.run_equivalence_suite(seed=7, trials=5, max_extent=6)
    b = verify.run_equivalence_suite(seed=7, trials=5, max_extent=6)
    assert [(c.label, c.max_abs_error) for c in a.cases] == [
        (c.label, c.max_abs_error) for c in b.cases
    ]


def _strd_without_kernel_flip(x, w, params):
    # fault injection: skip the index reversal STRD requires
    from upsample.ops import _conv_accumulate

    z = deconv.zero_insert(x, params.stride)
    unflipped = np.ascontiguousarray(w.data.transpose(1, 0, 2, 3))
    conv_pad = params.kernel_size - 1 - params.padding
    zz = z.data
    if conv_pad < 0:
        crop = -conv_pad
        zz = zz[:, crop:-crop, crop:-crop]
        conv_pad = 0
    return Tensor(_conv_accumulate(zz, unflipped, 1, conv_pad).astype(np.float32))


def test_suite_catches_injected_fault():
    variants = dict(verify.DEFAULT_VARIANTS)
    variants["strd"] = _strd_without_kernel_flip
    result = verify.run_equivalence_suite(seed=42, trials=10, max_extent=8, variants=variants)
    assert not result.passed
    failing = result.failures
    assert failing and all("strd" in c.detail for c in failing)
