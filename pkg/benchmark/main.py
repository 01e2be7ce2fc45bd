import time
import math

import argparse
import torch

from torch_witness import (BoseHubbardParams, make_fock_basis, one_body_dm,
                           bose_hubbard_ground_state, to_scipy, spmm)
from torch_witness.hubbard import hubbard_hamiltonian
from torch_witness.witness import interference_sum, phase_matrix

lattices = [(4, 4), (6, 6), (7, 7), (8, 6)]


def bold(text, flag=True):
    return f'\033[1m{text}\033[0m' if flag else text


def time_func(func, x):
    t = time.perf_counter()
    with torch.no_grad():
        for _ in range(iters):
            func(x)
    return time.perf_counter() - t


@torch.no_grad()
def correctness(L, N):
    basis = make_fock_basis(L, N, cap=10**6)
    index, value = hubbard_hamiltonian(basis, BoseHubbardParams(1.0, 2.0, L,
                                                                N))
    mat_scipy = to_scipy(index, value, basis.dim, basis.dim)
    x = torch.randn(basis.dim, dtype=torch.double)
    out1 = spmm(index, value, basis.dim, basis.dim, x)
    out2 = torch.from_numpy(mat_scipy @ x.numpy())
    assert torch.allclose(out1, out2, atol=1e-10)


def timing(L, N):
    basis = make_fock_basis(L, N, cap=10**6)
    p = BoseHubbardParams(1.0, 2.0, L, N)
    index, value = hubbard_hamiltonian(basis, p)
    mat_scipy = to_scipy(index, value, basis.dim, basis.dim)

    def spmm_scipy(x):
        return mat_scipy @ x.numpy()

    def spmm_own(x):
        return spmm(index, value, basis.dim, basis.dim, x)

    x = torch.randn(basis.dim, dtype=torch.double)
    t1, t2 = time_func(spmm_scipy, x), time_func(spmm_own, x)

    G = one_body_dm(bose_hubbard_ground_state(p))
    kx = torch.linspace(-math.pi, math.pi, grid, dtype=torch.double)
    K = torch.stack(torch.meshgrid(kx, kx, indexing='ij'), dim=-1)

    def witness_dense(K):
        return torch.stack([(G.matrix * phase_matrix(G.positions, k)).sum()
                            for k in K.view(-1, 2)])

    def witness_own(K):
        return interference_sum(G, K)

    t3 = time_func(witness_dense, K[:grid // 8])
    t3 *= 8
    t4 = time_func(witness_own, K)

    name = f'L={L}, N={N}'
    print(f'{bold(name)} (dim: {basis.dim}, nnz: {value.numel()}):')
    print('\t'.join([bold('Hamiltonian SciPy  '),
                     bold(f'{t1:.5f}', t1 <= t2)]))
    print('\t'.join([bold('Hamiltonian Own    '),
                     bold(f'{t2:.5f}', t2 < t1)]))
    print('\t'.join([bold('Witness per k      '),
                     bold(f'{t3:.5f}', t3 <= t4)]))
    print('\t'.join([bold('Witness batched    '),
                     bold(f'{t4:.5f}', t4 < t3)]))
    print()


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--iters', type=int, default=20)
    parser.add_argument('--grid', type=int, default=64)
    args = parser.parse_args()
    iters, grid = args.iters, args.grid

    for L, N in lattices:
        correctness(L, N)
        timing(L, N)
