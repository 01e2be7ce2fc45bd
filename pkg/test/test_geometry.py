import math

import pytest
import torch
from torch_witness import (ArgumentError, chain_bonds, chain_positions,
                           corner_momentum)
from torch_witness.geometry import as_positions


def test_chain_positions():
    assert chain_positions(1).tolist() == [[0, 0, 0]]
    assert chain_positions(2).tolist() == [[0, 0, 0], [1, 0, 0]]
    assert chain_positions(3)[:, 0].tolist() == [-1, 0, 1]
    with pytest.raises(ArgumentError):
        chain_positions(0)


def test_chain_bonds():
    assert chain_bonds(2) == [(0, 1)]
    assert chain_bonds(3) == [(0, 1), (1, 2), (2, 0)]
    assert chain_bonds(3, periodic=False) == [(0, 1), (1, 2)]
    assert chain_bonds(1) == []


def test_corner_momentum():
    assert corner_momentum(2) == (math.pi, math.pi)
    assert corner_momentum(4) == (math.pi, math.pi)
    assert corner_momentum(3) == (pytest.approx(2 * math.pi / 3), math.pi)
    assert corner_momentum(3, periodic=False) == (math.pi, math.pi)


def test_as_positions():
    out = as_positions([[1], [4]], 2)
    assert out.tolist() == [[1, 0, 0], [4, 0, 0]]
    assert out.dtype == torch.long
    assert torch.equal(as_positions(None, 3), chain_positions(3))
    with pytest.raises(ArgumentError):
        as_positions([[0, 0, 0]], 2)
