import math

import pytest
import torch
from torch_witness.utils import (HBAR, PLANCK, as_complex, as_double,
                                 pairwise_sum)


def test_constants():
    assert HBAR == pytest.approx(1.054571817e-34, rel=1e-9)
    assert PLANCK / HBAR == pytest.approx(2 * math.pi)


def test_casts():
    assert as_double([1, 2]).dtype == torch.double
    assert as_double(torch.tensor([1], dtype=torch.int)).dtype == torch.double
    out = as_complex(torch.tensor([1.0, -2.0]))
    assert out.dtype == torch.cdouble
    assert out.tolist() == [1, -2]
    assert as_complex([1j]).tolist() == [1j]


@pytest.mark.parametrize('size', [0, 1, 2, 5, 8, 13])
def test_pairwise_sum(size):
    x = torch.arange(size * 6, dtype=torch.double).view(size, 2, 3)
    out = pairwise_sum(x)
    assert out.size() == (2, 3)
    assert torch.allclose(out, x.sum(dim=0))


def test_pairwise_sum_is_batch_independent():
    x = torch.randn(40, 7, dtype=torch.double)
    assert torch.equal(pairwise_sum(x), pairwise_sum(x.clone()))
    assert torch.allclose(pairwise_sum(x), x.sum(dim=0), atol=1e-12)
