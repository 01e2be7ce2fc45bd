import math
from itertools import product

import pytest
import torch
from torch_witness import (ArgumentError, CapacityError, hopping,
                           make_fock_basis, make_product_basis, number,
                           total_number, interaction, to_dense)
from torch_witness.fock import add, expectation, fixed_n_dimension

from .utils import devices


@pytest.mark.parametrize('L,N,dim', [(1, 5, 1), (3, 3, 10), (2, 0, 1),
                                     (4, 2, 10), (2, 4, 5)])
def test_fixed_n_dimension(L, N, dim):
    basis = make_fock_basis(L, N)
    assert basis.dim == dim == fixed_n_dimension(L, N)
    assert (basis.total_numbers() == N).all()
    assert (basis.keys[1:] > basis.keys[:-1]).all()


@pytest.mark.parametrize('device', devices)
def test_lexicographic_order(device):
    basis = make_fock_basis(3, 2, device=device)
    assert basis.occupations.tolist() == [
        [0, 0, 2], [0, 1, 1], [0, 2, 0], [1, 0, 1], [1, 1, 0], [2, 0, 0]
    ]
    assert basis.index((1, 0, 1)) == 3
    assert basis.state(5) == (2, 0, 0)
    with pytest.raises(ArgumentError):
        basis.index((1, 1, 1))
    assert make_fock_basis(2, 0).state(0) == (0, 0)


def test_product_basis():
    basis = make_product_basis(2, 2)
    assert basis.dim == 9
    assert not basis.is_fixed_n
    assert basis.occupations.tolist() == [
        list(x) for x in product(range(3), range(3))
    ]
    idx, found = basis.lookup(torch.tensor([[1, 2], [3, 0], [-1, 1]]))
    assert found.tolist() == [True, False, False]
    assert int(idx[0]) == 5


def test_capacity():
    with pytest.raises(CapacityError):
        make_fock_basis(12, 12, cap=1000)
    with pytest.raises(CapacityError):
        make_product_basis(40, 3)
    with pytest.raises(ArgumentError):
        make_fock_basis(0, 1)


def test_hopping():
    basis = make_fock_basis(2, 2)
    H = to_dense(*hopping(basis, 0, 1), basis.dim, basis.dim)
    # Basis order: |02>, |11>, |20>.
    s2 = math.sqrt(2)
    assert torch.allclose(
        H, torch.tensor([[0, 0, 0], [s2, 0, 0], [0, s2, 0]],
                        dtype=torch.double))
    assert torch.allclose(to_dense(*hopping(basis, 1, 0), 3, 3), H.t())


def test_hopping_truncated():
    basis = make_product_basis(2, 1)
    index, value = hopping(basis, 0, 1)
    # Only |01> -> |10> stays inside the truncation.
    assert index.tolist() == [[basis.index((1, 0))], [basis.index((0, 1))]]
    assert value.tolist() == [1]


def test_diagonal_operators():
    basis = make_fock_basis(3, 3)
    n0 = to_dense(*number(basis, 0), basis.dim, basis.dim)
    assert n0.diagonal().tolist() == basis.occupations[:, 0].tolist()
    N = to_dense(*total_number(basis), basis.dim, basis.dim)
    assert torch.equal(N, 3 * torch.eye(basis.dim, dtype=torch.double))
    U = to_dense(*interaction(basis), basis.dim, basis.dim).diagonal()
    assert U[basis.index((3, 0, 0))] == 3
    assert U[basis.index((2, 1, 0))] == 1
    assert U[basis.index((1, 1, 1))] == 0

    total = add([number(basis, i) for i in range(3)], basis.dim, basis.dim)
    assert torch.equal(to_dense(*total, basis.dim, basis.dim), N)


def test_expectation():
    basis = make_fock_basis(2, 1)
    psi = torch.tensor([1, 1j], dtype=torch.cdouble) / math.sqrt(2)
    op = hopping(basis, 0, 1)
    value = expectation(op, psi)
    rho = torch.outer(psi, psi.conj())
    assert torch.allclose(value, expectation(op, rho))
    assert torch.allclose(value, torch.tensor(-0.5j, dtype=torch.cdouble))
