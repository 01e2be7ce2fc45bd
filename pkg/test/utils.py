from functools import lru_cache

import torch

dtypes = [torch.float, torch.double, torch.int, torch.long]
complex_dtypes = [torch.cfloat, torch.cdouble]

devices = [torch.device('cpu')]
if torch.cuda.is_available():
    devices += [torch.device(f'cuda:{torch.cuda.current_device()}')]


def tensor(x, dtype, device):
    return None if x is None else torch.tensor(x, dtype=dtype, device=device)


def superfluid_dm(L=2, N=1.0):
    """One-body density matrix of the uniform superfluid on :obj:`L`
    chain sites holding :obj:`N` atoms in total."""
    from torch_witness import OneBodyDM, chain_positions
    matrix = torch.full((L, L), N / L, dtype=torch.cdouble)
    return OneBodyDM(matrix, chain_positions(L))


@lru_cache(maxsize=None)
def wannier_at(depth_s, n_q=128, n_planewaves=41):
    """Band structure and Wannier table at :obj:`depth_s`, shared between
    tests of the same session."""
    from torch_witness import LatticeParams, compute_wannier
    from torch_witness import solve_band_structure
    spectrum = solve_band_structure(LatticeParams(depth_s), n_bands=2,
                                    n_q=n_q, n_planewaves=n_planewaves)
    return spectrum, compute_wannier(spectrum)


def brute_force_correlator(basis, amplitudes, i, j):
    """:math:`\\langle\\psi|b^\\dagger_i b_j|\\psi\\rangle` by applying the
    ladder operators to every basis state in turn."""
    states = [tuple(row) for row in basis.occupations.tolist()]
    lookup = {s: n for n, s in enumerate(states)}
    out = 0j
    for n, occ in enumerate(states):
        if occ[j] == 0:
            continue
        target = list(occ)
        coefficient = target[j]**0.5
        target[j] -= 1
        coefficient *= (target[i] + 1)**0.5
        target[i] += 1
        m = lookup.get(tuple(target))
        if m is not None:
            out += complex(amplitudes[m]).conjugate() * coefficient * \
                complex(amplitudes[n])
    return out


def random_state(L, N, seed):
    from torch_witness import StateVector, make_fock_basis
    basis = make_fock_basis(L, N)
    gen = torch.Generator().manual_seed(seed)
    psi = torch.randn(basis.dim, dtype=torch.cdouble, generator=gen)
    return StateVector(basis, psi / psi.norm())
