import torch
from torch_witness import to_dense, to_scipy


def test_convert_scipy():
    index = torch.tensor([[0, 0, 1, 2, 2], [0, 2, 1, 0, 1]])
    value = torch.tensor([1, 2, 4, 1, 3], dtype=torch.double)

    out = to_scipy(index, value, 3, 3)
    assert out.format == 'csr'
    assert out.shape == (3, 3)
    assert out.toarray().tolist() == [[1, 0, 2], [0, 4, 0], [1, 3, 0]]


def test_to_dense():
    index = torch.tensor([[0, 0, 1, 1], [1, 1, 0, 1]])
    value = torch.tensor([1, 2, 3, 4])

    out = to_dense(index, value, 2, 3)
    assert out.tolist() == [[0, 3, 0], [3, 4, 0]]
    assert torch.allclose(
        to_dense(index, value.double(), 2, 3),
        torch.sparse_coo_tensor(index, value.double(), (2, 3)).to_dense())
