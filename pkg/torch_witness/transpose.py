import torch

from torch_witness.coalesce import coalesce


def transpose(index, value, m, n, coalesced=True):
    """Transposes dimensions 0 and 1 of a sparse matrix.

    Args:
        index (:class:`LongTensor`): The index tensor of sparse matrix.
        value (:class:`Tensor`): The value tensor of sparse matrix.
        m (int): The first dimension of corresponding dense matrix.
        n (int): The second dimension of corresponding dense matrix.
        coalesced (bool, optional): If set to :obj:`False`, will not coalesce
            the output. (default: :obj:`True`)

    :rtype: (:class:`LongTensor`, :class:`Tensor`)
    """
    index = torch.stack([index[1], index[0]], dim=0)
    if coalesced:
        index, value = coalesce(index, value, n, m)
    return index, value


def adjoint(index, value, m, n, coalesced=True):
    """Hermitian conjugate of a sparse matrix; :math:`(b^\\dagger_i
    b_j)^\\dagger = b^\\dagger_j b_i`."""
    value = value.conj() if value.is_complex() else value
    return transpose(index, value, m, n, coalesced)
