import torch


def coalesce(index, value, m, n, drop_zeros=False):
    """Row-wise sorts :obj:`value` and sums duplicate entries.

    Args:
        index (:class:`LongTensor`): The index tensor of sparse matrix.
        value (:class:`Tensor`): The value tensor of sparse matrix.
        m (int): The first dimension of corresponding dense matrix.
        n (int): The second dimension of corresponding dense matrix.
        drop_zeros (bool, optional): If set to :obj:`True`, entries that sum
            to exactly zero are removed. (default: :obj:`False`)

    :rtype: (:class:`LongTensor`, :class:`Tensor`)
    """
    assert index.dim() == 2 and index.size(0) == 2
    assert value.size(0) == index.size(1)

    key = index[0] * n + index[1]
    key, inverse = torch.unique(key, sorted=True, return_inverse=True)

    out = value.new_zeros((key.numel(), ) + value.size()[1:])
    out.index_add_(0, inverse, value)

    if drop_zeros:
        mask = out != 0
        if out.dim() > 1:
            mask = mask.view(out.size(0), -1).any(dim=-1)
        key, out = key[mask], out[mask]

    return torch.stack([key // n, key % n], dim=0), out
