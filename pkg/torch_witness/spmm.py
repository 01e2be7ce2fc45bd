import torch


def spmm(index, value, m, n, matrix):
    """Matrix product of sparse matrix with dense matrix.

    Args:
        index (:class:`LongTensor`): The index tensor of sparse matrix.
        value (:class:`Tensor`): The value tensor of sparse matrix.
        m (int): The first dimension of corresponding dense matrix.
        n (int): The second dimension of corresponding dense matrix.
        matrix (:class:`Tensor`): The dense matrix or vector.

    :rtype: :class:`Tensor`
    """
    assert n == matrix.size(0)

    row, col = index
    squeeze = matrix.dim() == 1
    matrix = matrix.unsqueeze(-1) if squeeze else matrix

    dtype = torch.promote_types(value.dtype, matrix.dtype)
    out = matrix[col].to(dtype) * value.to(dtype).unsqueeze(-1)
    out = torch.zeros((m, ) + matrix.size()[1:], dtype=dtype,
                      device=matrix.device).index_add_(0, row, out)

    return out.squeeze(-1) if squeeze else out
