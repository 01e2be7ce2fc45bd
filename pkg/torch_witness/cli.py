import argparse
import logging
import math
import os
import os.path as osp
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

import torch

from torch_witness.bands import bands_to_csv, solve_band_structure
from torch_witness.channels import sample_monotone_check
from torch_witness.config import (AnalyzeConfig, BandsConfig, ExamplesConfig,
                                  ReproduceConfig, RunConfig, SimulateConfig,
                                  VerifyConfig, load_config)
from torch_witness.errors import (ArgumentError, NumericalError, WitnessError,
                                  exit_code)
from torch_witness.fock import make_fock_basis
from torch_witness.geometry import corner_momentum
from torch_witness.hubbard import (BoseHubbardParams,
                                   bose_hubbard_ground_state,
                                   thermal_one_body_dm)
from torch_witness.imaging import (CalibrationParams, ImageStack,
                                   analyze_stack, default_region,
                                   default_wannier_factory,
                                   monte_carlo_budget, pixel_atoms,
                                   synthesize_frame)
from torch_witness.io import write_columns, write_json, write_matrix
from torch_witness.lattice import LatticeParams
from torch_witness.stack import read_stack, write_report, write_stack
from torch_witness.states import (OneBodyDM, build_coherent_mixture,
                                  build_symmetric_state, build_two_mode_psi,
                                  data_hiding_success, fock_state,
                                  one_body_dm)
from torch_witness.tof import TofParams, column_density, density_grid
from torch_witness.wannier import (compute_wannier, envelope_to_csv,
                                   wannier_to_csv)
from torch_witness.witness import (MomentumSpec, analytic_example_bound,
                                   entanglement_bound,
                                   verify_witness_nonnegativity)

logger = logging.getLogger(__name__)

# Sites of the two-party examples, Alice at (1, 0, 0) and Bob at (0, 1, 0).
EXAMPLE_POSITIONS = [[1, 0, 0], [0, 1, 0]]
COHERENT_TOL = 1e-5
# Truncation weight deficit of the coherent mixture, well inside
# COHERENT_TOL.
COHERENT_TRUNCATION = 1e-9


def _lattice(cfg) -> LatticeParams:
    return LatticeParams(cfg.depth, cfg.wavelength)


def cmd_bands(cfg: BandsConfig) -> Dict[str, str]:
    spectrum = solve_band_structure(_lattice(cfg), n_bands=cfg.n_bands,
                                    n_q=cfg.n_q,
                                    n_planewaves=cfg.n_planewaves)
    wannier = compute_wannier(spectrum, real_extent=cfg.real_extent,
                              resolution=cfg.resolution)
    paths = {
        'bands': osp.join(cfg.out, 'bands.csv'),
        'wannier': osp.join(cfg.out, 'wannier.csv'),
        'envelope': osp.join(cfg.out, 'envelope.csv'),
    }
    bands_to_csv(spectrum, paths['bands'])
    wannier_to_csv(wannier, paths['wannier'])
    envelope_to_csv(wannier, paths['envelope'])
    logger.info('wrote band tables for s = %g to %s', cfg.depth, cfg.out)
    return paths


def _even_occupation(L: int, N: int) -> List[int]:
    return [N // L + (1 if i < N % L else 0) for i in range(L)]


def simulated_one_body_dm(cfg: SimulateConfig) -> OneBodyDM:
    """One-body density matrix of the simulated lattice state in units
    :math:`J = 1`."""
    p = BoseHubbardParams(1.0, cfg.u_over_j, cfg.sites, cfg.atoms,
                          periodic=cfg.periodic)
    if cfg.state == 'fock':
        basis = make_fock_basis(cfg.sites, cfg.atoms)
        G = one_body_dm(
            fock_state(basis, _even_occupation(cfg.sites, cfg.atoms)))
    elif cfg.state == 'thermal':
        G = thermal_one_body_dm(p, cfg.temperature)
    else:
        G = one_body_dm(bose_hubbard_ground_state(p))
    if cfg.total_atoms is not None:
        if cfg.atoms == 0:
            raise ArgumentError('total_atoms needs a nonempty lattice state')
        G = OneBodyDM(G.matrix * (cfg.total_atoms / cfg.atoms), G.positions)
    return G


def cmd_simulate(cfg: SimulateConfig) -> str:
    lattice = _lattice(cfg)
    tof = TofParams.from_lattice(lattice, cfg.tof_time, cfg.approximation)
    calib = CalibrationParams(cfg.alpha, cfg.sigma_alpha, cfg.cross_section,
                              cfg.pixel_size, cfg.sigma_s_rel)

    G = simulated_one_body_dm(cfg)
    wannier = compute_wannier(solve_band_structure(lattice))
    field = column_density(G, wannier,
                           density_grid(tof, n_points=cfg.grid_points), tof)
    shape = (cfg.height, cfg.width)
    atoms = pixel_atoms(field, cfg.height, cfg.width, calib.pixel_size_delta)

    generator = torch.Generator()
    generator.manual_seed(cfg.seed)
    frames = [
        synthesize_frame(field, calib, cfg.mu0, cfg.noise,
                         generator=generator, shape=shape, atoms=atoms)
        for _ in range(cfg.frames)
    ]
    stack = ImageStack(frames, lattice, tof, calib, cfg.seed)
    path = write_stack(stack, cfg.out, cfg.format)

    k_hat = corner_momentum(cfg.sites, cfg.periodic)
    truth = entanglement_bound(G, MomentumSpec(k_hat, tof.tau))
    write_matrix(osp.join(cfg.out, 'one_body_dm.csv'), G.matrix)
    write_json(
        osp.join(cfg.out, 'truth.json'), {
            'n_total': G.n_total,
            'k_hat': list(k_hat),
            'tau': tof.tau,
            'e_of_k_hat': truth.e_of_k,
            'pixel_atoms': float(atoms.sum()),
            'positions': G.positions.tolist(),
        })
    return path


def _same_directory(a: str, b: str) -> bool:
    return osp.realpath(a) == osp.realpath(b)


def cmd_analyze(cfg: AnalyzeConfig) -> Dict[str, str]:
    stack = read_stack(cfg.stack)
    stack_dir = cfg.stack if osp.isdir(cfg.stack) else osp.dirname(cfg.stack)
    if _same_directory(cfg.out, stack_dir or '.'):
        raise ArgumentError('the report must not be written into the stack '
                            'directory')

    H, W = stack.shape
    delta = stack.calibration.pixel_size_delta
    region = cfg.region
    if region is None:
        region = default_region(H, W, stack.tof, delta, k=cfg.k_hat,
                                box=cfg.box)
    wannier_at = default_wannier_factory(stack.lattice)
    wannier = wannier_at(stack.lattice.depth_s)
    report = analyze_stack(stack, wannier, region, symmetry=cfg.symmetry,
                           wannier_at=wannier_at)

    extra = {'stack': osp.abspath(cfg.stack)}
    if cfg.monte_carlo_draws > 0:
        budget = monte_carlo_budget(stack, wannier, region,
                                    symmetry=cfg.symmetry,
                                    draws=cfg.monte_carlo_draws,
                                    seed=cfg.seed, wannier_at=wannier_at)
        extra['sigma_sys_monte_carlo'] = budget.sigma_sys
    return write_report(report, cfg.out, extra)


def _data_hiding_closed_form(N: int) -> float:
    c = [math.sqrt(math.comb(N, n) / 2**N) for n in range(N + 1)]
    return 0.25 * sum((c[n] + c[n - 1])**2 for n in range(1, N + 1))


def example_rows(cfg: ExamplesConfig) -> List[Tuple[str, float, float, float]]:
    """Closed-form and module values of the two-party examples as rows
    :obj:`(case, param, closed_form, module)`."""
    spec = MomentumSpec((math.pi, 0.0), tau=math.inf)
    rows = []
    for N in range(1, cfg.max_atoms + 1):
        G = one_body_dm(build_two_mode_psi(N), EXAMPLE_POSITIONS)
        rows.append(('two_mode_psi', N,
                     analytic_example_bound('two_mode_psi', N),
                     entanglement_bound(G, spec).e_of_k))
        symmetric = build_symmetric_state(2, N)
        G = one_body_dm(symmetric, EXAMPLE_POSITIONS)
        rows.append(('symmetric', N, analytic_example_bound('symmetric', N),
                     entanglement_bound(G, spec).e_of_k))
        rows.append(('data_hiding', N, _data_hiding_closed_form(N),
                     data_hiding_success(symmetric)))
    for alpha in cfg.alphas:
        rho = build_coherent_mixture(alpha, tol=COHERENT_TRUNCATION)
        G = one_body_dm(rho, EXAMPLE_POSITIONS)
        rows.append(('coherent_mixture', alpha,
                     analytic_example_bound('coherent_mixture', alpha),
                     entanglement_bound(G, spec).e_of_k))
    return rows


def dump_example_states(cfg: ExamplesConfig) -> List[str]:
    folder = osp.join(cfg.out, 'states')
    paths = []
    for N in range(1, cfg.max_atoms + 1):
        for name, state in [('two_mode_psi', build_two_mode_psi(N)),
                            ('symmetric', build_symmetric_state(2, N))]:
            paths.append(osp.join(folder, f'{name}_{N}.csv'))
            state.to_csv(paths[-1])
    for alpha in cfg.alphas:
        paths.append(osp.join(folder, f'coherent_mixture_{alpha:g}.csv'))
        build_coherent_mixture(alpha, tol=COHERENT_TRUNCATION).to_csv(
            paths[-1])
    logger.info('wrote %d example states to %s', len(paths), folder)
    return paths


def cmd_examples(cfg: ExamplesConfig) -> List[Tuple[str, float, float,
                                                    float]]:
    rows = example_rows(cfg)
    print(f'{"case":<18}{"param":>8}{"closed form":>16}{"module":>16}')
    failures = []
    for case, param, closed, module in rows:
        print(f'{case:<18}{param:>8g}{closed:>16.10f}{module:>16.10f}')
        tol = COHERENT_TOL if case == 'coherent_mixture' else cfg.tol
        if abs(closed - module) > tol * max(1.0, abs(closed)):
            failures.append((case, param))
    write_json(osp.join(cfg.out, 'examples.json'), [{
        'case': case,
        'param': param,
        'closed_form': closed,
        'module': module
    } for case, param, closed, module in rows])
    if cfg.dump_states:
        dump_example_states(cfg)
    if failures:
        raise NumericalError(f'module values disagree with the closed forms '
                             f'for {failures}')
    return rows


def bound_at_corner(p: BoseHubbardParams, tau: float,
                    temperature: Optional[float] = None) -> Tuple[float,
                                                                  float]:
    if temperature is None:
        G = one_body_dm(bose_hubbard_ground_state(p))
    else:
        G = thermal_one_body_dm(p, temperature)
    k_hat = corner_momentum(p.L, p.periodic)
    bound = entanglement_bound(G, MomentumSpec(k_hat, tau))
    return bound.e_of_k, bound.n_total


def cmd_reproduce(cfg: ReproduceConfig) -> Dict[str, str]:
    """Bound at the corner momentum across interaction strengths (ground
    states) and temperatures (Gibbs states)."""
    e_u, n_u = [], []
    for u in cfg.u_over_j:
        p = BoseHubbardParams(1.0, u, cfg.sites, cfg.atoms, cfg.periodic)
        e, n = bound_at_corner(p, cfg.tau)
        e_u.append(e)
        n_u.append(n)

    e_t, n_t = [], []
    p = BoseHubbardParams(1.0, cfg.thermal_u_over_j, cfg.sites, cfg.atoms,
                          cfg.periodic)
    for T in cfg.temperatures:
        e, n = bound_at_corner(p, cfg.tau, temperature=T)
        e_t.append(e)
        n_t.append(n)

    paths = {
        'u_over_j': osp.join(cfg.out, 'bound_vs_u_over_j.csv'),
        'temperature': osp.join(cfg.out, 'bound_vs_temperature.csv'),
    }
    write_columns(paths['u_over_j'], ['u_over_j', 'e_of_k_hat', 'n_total'],
                  [cfg.u_over_j, e_u, n_u])
    write_columns(paths['temperature'],
                  ['temperature', 'e_of_k_hat', 'n_total'],
                  [cfg.temperatures, e_t, n_t])
    logger.info('wrote sweeps to %s', cfg.out)
    return paths


def cmd_verify(cfg: VerifyConfig) -> Dict[str, str]:
    reports = [
        verify_witness_nonnegativity(L=cfg.sites, n_max=cfg.n_max,
                                     trials=cfg.trials, seed=cfg.seed,
                                     n_terms=cfg.n_terms, tau=cfg.tau),
        sample_monotone_check(
            L=min(cfg.sites, 2), n_max=cfg.n_max, n_states=cfg.n_states,
            n_channels=cfg.n_channels, tau=cfg.tau, seed=cfg.seed,
            n_terms=cfg.n_terms),
    ]
    os.makedirs(cfg.out, exist_ok=True)
    path = osp.join(cfg.out, 'verify.txt')
    with open(path, 'w') as f:
        for report in reports:
            f.write(report.to_text() + '\n')
            print(report.to_text())
    failed = [r.name for r in reports if not r.passed]
    if failed:
        raise NumericalError(f'property checks failed: {failed}')
    return {'verify': path}


COMMANDS: Dict[str, Tuple[Type[RunConfig], Callable]] = {
    'bands': (BandsConfig, cmd_bands),
    'simulate': (SimulateConfig, cmd_simulate),
    'analyze': (AnalyzeConfig, cmd_analyze),
    'examples': (ExamplesConfig, cmd_examples),
    'reproduce': (ReproduceConfig, cmd_reproduce),
    'verify': (VerifyConfig, cmd_verify),
}


def _add_lattice(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--depth', type=float, help='lattice depth s')
    parser.add_argument('--wavelength', type=float, help='meters')


def _add_calibration(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--alpha', type=float)
    parser.add_argument('--sigma-alpha', type=float)
    parser.add_argument('--cross-section', type=float)
    parser.add_argument('--pixel-size', type=float)
    parser.add_argument('--sigma-s-rel', type=float)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False,
                                     argument_default=argparse.SUPPRESS)
    common.add_argument('--config', help='JSON file with command fields')
    common.add_argument('--out', help='output directory')
    common.add_argument('--seed', type=int)
    common.add_argument('-v', '--verbose', action='store_true')

    parser = argparse.ArgumentParser(
        prog='torch-witness',
        description='Entanglement bounds for lattice bosons from '
        'time-of-flight images.')
    commands = parser.add_subparsers(dest='command', required=True)

    def command(name: str, help: str) -> argparse.ArgumentParser:
        return commands.add_parser(name, help=help, parents=[common],
                                   argument_default=argparse.SUPPRESS)

    p = command('bands', 'band structure, Wannier and envelope tables')
    _add_lattice(p)
    p.add_argument('--n-bands', type=int)
    p.add_argument('--n-q', type=int)
    p.add_argument('--n-planewaves', type=int)
    p.add_argument('--real-extent', type=float)
    p.add_argument('--resolution', type=int)

    p = command('simulate', 'synthesize an absorption-image stack')
    _add_lattice(p)
    _add_calibration(p)
    p.add_argument('--sites', type=int)
    p.add_argument('--atoms', type=int)
    p.add_argument('--U-over-J', '--u-over-j', dest='u_over_j', type=float)
    p.add_argument('--open', dest='periodic', action='store_false',
                   help='open chain instead of a ring')
    p.add_argument('--state', choices=['ground', 'thermal', 'fock'])
    p.add_argument('--temperature', type=float, help='units of J')
    p.add_argument('--total-atoms', type=float)
    p.add_argument('--frames', type=int)
    p.add_argument('--tof-time', type=float, help='seconds')
    p.add_argument('--approximation',
                   choices=['exact', 'stationary_phase', 'far_field'])
    p.add_argument('--grid-points', type=int)
    p.add_argument('--height', type=int)
    p.add_argument('--width', type=int)
    p.add_argument('--mu0', type=float)
    p.add_argument('--noise', type=float)
    p.add_argument('--format', choices=['olif', 'csv'])

    p = command('analyze', 'estimate the bound from an image stack')
    p.add_argument('stack', help='stack directory or manifest')
    p.add_argument('--region', type=int, nargs=2, action='append',
                   metavar=('I', 'J'), help='region pixel, repeatable')
    p.add_argument('--k-hat', type=float, nargs=2, metavar=('KX', 'KY'),
                   help='region centre in units of 1/a')
    p.add_argument('--box', type=int)
    p.add_argument('--no-symmetry', dest='symmetry', action='store_false')
    p.add_argument('--monte-carlo-draws', type=int)

    p = command('examples', 'analytic example bounds')
    p.add_argument('--max-atoms', type=int)
    p.add_argument('--alphas', type=float, nargs='+')
    p.add_argument('--tol', type=float)
    p.add_argument('--dump-states', action='store_true')

    p = command('reproduce', 'bound sweeps over U/J and temperature')
    p.add_argument('--sites', type=int)
    p.add_argument('--atoms', type=int)
    p.add_argument('--open', dest='periodic', action='store_false')
    p.add_argument('--tau', type=float)
    p.add_argument('--u-over-j', dest='u_over_j', type=float, nargs='+')
    p.add_argument('--temperatures', type=float, nargs='+')
    p.add_argument('--thermal-u-over-j', type=float)

    p = command('verify', 'sampled witness and monotonicity checks')
    p.add_argument('--sites', type=int)
    p.add_argument('--n-max', type=int)
    p.add_argument('--trials', type=int)
    p.add_argument('--n-states', type=int)
    p.add_argument('--n-channels', type=int)
    p.add_argument('--n-terms', type=int)
    p.add_argument('--tau', type=float)
    return parser


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO, stream=sys.stderr,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    name = args.pop('command')
    config_path = args.pop('config', None)
    setup_logging(args.pop('verbose', False))

    model, run = COMMANDS[name]
    try:
        cfg = load_config(model, config_path, args)
        logger.debug('%s configuration: %s', name, cfg.model_dump())
        run(cfg)
    except WitnessError as e:
        logger.error('%s', e)
        print(f'error: {e}', file=sys.stderr)
        return exit_code(e)
    return 0
