import scipy.sparse
import torch


def to_scipy(index, value, m, n):
    """CSR copy of a sparse operator, as ARPACK consumes it."""
    assert not index.is_cuda and not value.is_cuda
    (row, col), data = index.detach().numpy(), value.detach().numpy()
    return scipy.sparse.csr_matrix((data, (row, col)), (m, n))


def to_dense(index, value, m, n):
    """Dense :obj:`[m, n]` matrix; duplicate entries are summed."""
    out = value.new_zeros((m * n, ) + value.size()[1:])
    out.index_add_(0, index[0] * n + index[1], value)
    return out.view((m, n) + value.size()[1:])
