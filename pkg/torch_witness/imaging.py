import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import (Callable, Dict, List, Optional, Sequence, Tuple)

import torch
from scipy.interpolate import CubicSpline

from torch_witness.bands import solve_band_structure
from torch_witness.errors import (ArgumentError, ExcludedPixelError,
                                  GeometryError, NumericalError)
from torch_witness.io import write_columns
from torch_witness.lattice import LatticeParams
from torch_witness.tof import DensityField, TofParams
from torch_witness.utils import RB87_CROSS_SECTION, Final, pairwise_sum
from torch_witness.wannier import WannierTable, compute_wannier

logger = logging.getLogger(__name__)

DEFAULT_FRAME_SIZE: Final[int] = 401
EXCLUSION_FLOOR: Final[float] = 1e-6
FD_STEP: Final[float] = 0.01
RING_TIE_RTOL: Final[float] = 1e-12

Pixel = Tuple[int, int]
WannierFactory = Callable[[float], WannierTable]


@dataclass(frozen=True)
class CalibrationParams:
    """Imaging calibration.

    Args:
        alpha (float, optional): Atoms per pixel and unit optical density.
            (default: :obj:`0.112`)
        sigma_alpha (float, optional): Uncertainty of :obj:`alpha`.
            (default: :obj:`0.009`)
        cross_section (float, optional): Absorption cross section in square
            meters. (default: :obj:`2.907e-13`)
        pixel_size_delta (float, optional): Effective pixel size in meters.
            (default: :obj:`2.78e-6`)
        sigma_s_rel (float, optional): Relative uncertainty of the lattice
            depth. (default: :obj:`0.10`)
    """
    alpha: float = 0.112
    sigma_alpha: float = 0.009
    cross_section: float = RB87_CROSS_SECTION
    pixel_size_delta: float = 2.78e-6
    sigma_s_rel: float = 0.10

    def __post_init__(self):
        for name in ('alpha', 'cross_section', 'pixel_size_delta'):
            if not getattr(self, name) > 0:
                raise ArgumentError(f'{name} must be positive '
                                    f'(got {getattr(self, name)})')
        for name in ('sigma_alpha', 'sigma_s_rel'):
            if not getattr(self, name) >= 0:
                raise ArgumentError(f'{name} must be nonnegative '
                                    f'(got {getattr(self, name)})')


@dataclass(frozen=True)
class ImageFrame:
    """Optical densities :math:`\\mu_{ij}` of one absorption image; row
    :math:`i` runs along :math:`y`, column :math:`j` along :math:`x`, and
    pixel centres are symmetric about the optical axis."""
    mu: torch.Tensor
    pixel_size: float

    def __post_init__(self):
        if self.mu.dim() != 2:
            raise ArgumentError('frame must be a rectangular 2D array')
        if not torch.isfinite(self.mu).all():
            raise ArgumentError('frame holds non-finite values')
        if not self.pixel_size > 0:
            raise ArgumentError('pixel size must be positive')

    @property
    def height(self) -> int:
        return self.mu.size(0)

    @property
    def width(self) -> int:
        return self.mu.size(1)

    def pixel_centers(self) -> Tuple[torch.Tensor, torch.Tensor]:
        return pixel_axes(self.height, self.width, self.pixel_size)


@dataclass(frozen=True)
class ImageStack:
    frames: List[ImageFrame]
    lattice: LatticeParams
    tof: TofParams
    calibration: CalibrationParams
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.frames) == 0:
            raise ArgumentError('image stack holds no frame')
        shape = self.frames[0].mu.size()
        for frame in self.frames:
            if frame.mu.size() != shape:
                raise ArgumentError('frames differ in geometry')
            if abs(frame.pixel_size - self.calibration.pixel_size_delta) > \
                    1e-12 * self.calibration.pixel_size_delta:
                raise ArgumentError('frame pixel size differs from the '
                                    'calibration')

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.frames[0].mu.size())

    def mu(self) -> torch.Tensor:
        return torch.stack([f.mu.to(torch.double) for f in self.frames])


def pixel_axes(height: int, width: int,
               delta: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """Pixel-centre coordinates :obj:`(x, y)` in meters."""
    x = (torch.arange(width, dtype=torch.double) - (width - 1) / 2) * delta
    y = (torch.arange(height, dtype=torch.double) - (height - 1) / 2) * delta
    return x, y


# Beer-Lambert ################################################################


def optical_density_from_intensity(I_t, I_0, I_d=0.0) -> torch.Tensor:
    """:math:`\\mu = -\\ln[(I_t - I_d) / (I_0 - I_d)]` from transmitted,
    reference and dark intensities."""
    I_t, I_0 = torch.as_tensor(I_t), torch.as_tensor(I_0)
    ratio = (I_t - I_d) / (I_0 - I_d)
    if not (ratio > 0).all():
        raise ArgumentError('intensities must exceed the dark level')
    return -torch.log(ratio)


def atoms_from_optical_density(mu, mu0, calib: CalibrationParams):
    """Atoms per pixel :math:`n = \\alpha (\\mu - \\mu_0)`."""
    return calib.alpha * (torch.as_tensor(mu) - mu0)


def alpha_from_cross_section(delta: float, cross_section: float) -> float:
    """Ideal-imaging prefactor :math:`\\Delta^2 / \\sigma`."""
    if not (delta > 0 and cross_section > 0):
        raise ArgumentError('pixel size and cross section must be positive')
    return delta**2 / cross_section


# Synthesis ###################################################################


def _interpolation_matrix(points: torch.Tensor,
                          axis: torch.Tensor) -> torch.Tensor:
    n = axis.numel()
    step = float(axis[1] - axis[0])
    pos = (points - axis[0]) / step
    lo = pos.floor().long().clamp(0, n - 2)
    frac = pos - lo
    M = torch.zeros(points.numel(), n, dtype=torch.double)
    rows = torch.arange(points.numel())
    M[rows, lo] = 1 - frac
    M[rows, lo + 1] += frac
    return M


def _pixel_average_matrix(centers: torch.Tensor, delta: float,
                          axis: torch.Tensor, oversample: int) -> torch.Tensor:
    n = axis.numel()
    if n < 2:
        raise GeometryError('density grid needs at least two points per axis')
    steps = axis[1:] - axis[:-1]
    if (steps <= 0).any() or float((steps - steps[0]).abs().max()) > \
            1e-9 * float(steps[0]):
        raise GeometryError('density grid must be uniform and increasing')

    offsets = delta * ((torch.arange(oversample, dtype=torch.double) + 0.5) /
                       oversample - 0.5)
    points = (centers.view(-1, 1) + offsets.view(1, -1)).reshape(-1)
    slack = 1e-9 * float(steps[0])
    if float(points.min()) < float(axis[0]) - slack or \
            float(points.max()) > float(axis[-1]) + slack:
        raise GeometryError('pixel grid extends beyond the density grid')
    M = _interpolation_matrix(points, axis)
    return M.view(centers.numel(), oversample, n).mean(dim=1)


def pixel_atoms(field: DensityField, height: int, width: int, delta: float,
                oversample: int = 4) -> torch.Tensor:
    """Atoms per pixel, integrating the bilinear interpolant of
    :obj:`field` over each pixel by its sub-pixel midpoints."""
    if oversample < 1:
        raise ArgumentError(f'oversample must be positive (got {oversample})')
    x, y = pixel_axes(height, width, delta)
    Ax = _pixel_average_matrix(x, delta, field.x, oversample)
    Ay = _pixel_average_matrix(y, delta, field.y, oversample)
    return delta**2 * (Ay @ field.values @ Ax.t())


def synthesize_frame(field: DensityField, calib: CalibrationParams,
                     mu0_true: float, noise_sigma: float,
                     seed: Optional[int] = None,
                     generator: Optional[torch.Generator] = None,
                     shape: Tuple[int, int] = (DEFAULT_FRAME_SIZE,
                                               DEFAULT_FRAME_SIZE),
                     oversample: int = 4,
                     atoms: Optional[torch.Tensor] = None) -> ImageFrame:
    """Synthesizes an absorption image :math:`\\mu_{ij} = n_{ij} / \\alpha +
    \\mu_0 + \\eta_{ij}` with Gaussian noise :math:`\\eta`.

    Args:
        field (:class:`DensityField`): Column density in SI units.
        calib (:class:`CalibrationParams`): Calibration.
        mu0_true (float): Background optical density.
        noise_sigma (float): Standard deviation of the per-pixel noise.
        seed (int, optional): Seed of a fresh generator.
        generator (:class:`torch.Generator`, optional): Generator to draw
            from; takes precedence over :obj:`seed`.
        shape ((int, int), optional): Frame height and width.
            (default: :obj:`(401, 401)`)
        oversample (int, optional): Sub-pixel midpoints per axis.
            (default: :obj:`4`)
        atoms (:class:`Tensor`, optional): Precomputed atoms per pixel,
            skipping the integration of :obj:`field`.

    :rtype: :class:`ImageFrame`
    """
    if noise_sigma < 0:
        raise ArgumentError(f'noise_sigma must be nonnegative '
                            f'(got {noise_sigma})')
    height, width = shape
    delta = calib.pixel_size_delta
    if atoms is None:
        atoms = pixel_atoms(field, height, width, delta, oversample)
    mu = atoms / calib.alpha + mu0_true
    if noise_sigma > 0:
        if generator is None:
            generator = torch.Generator()
            generator.manual_seed(0 if seed is None else seed)
        mu = mu + noise_sigma * torch.randn(
            mu.size(), dtype=torch.double, generator=generator)
    return ImageFrame(mu, delta)


# Background ##################################################################


def ring_index(height: int, width: int) -> torch.Tensor:
    """Index of the concentric one-pixel-thick square ring each pixel lies
    on, counted from the border inwards."""
    i = torch.arange(height).view(-1, 1)
    j = torch.arange(width).view(1, -1)
    return torch.minimum(torch.minimum(i, height - 1 - i),
                         torch.minimum(j, width - 1 - j))


def background_rings(frame: ImageFrame) -> Tuple[torch.Tensor, torch.Tensor]:
    """Mean optical density of every complete ring and the ring map."""
    if frame.height < 7 or frame.width < 7:
        raise ArgumentError(f'background estimation needs at least 7 x 7 '
                            f'pixels (got {frame.height} x {frame.width})')
    rings = ring_index(frame.height, frame.width)
    # Complete rings enclose an interior; the degenerate centre is skipped.
    num = (min(frame.height, frame.width) - 1) // 2
    mu = frame.mu.to(torch.double)
    flat = rings.view(-1)
    sums = torch.zeros(num + 1, dtype=torch.double).index_add_(
        0, flat, mu.view(-1))
    counts = torch.bincount(flat, minlength=num + 1).to(torch.double)
    return (sums / counts)[:num], rings


def estimate_background(frame: ImageFrame, return_ring: bool = False):
    """Background :math:`\\mu_0` as the smallest ring mean (ties go to the
    outermost ring) and :math:`\\sigma_{\\mu_0}` as the root-mean-square
    deviation of that ring from :math:`\\mu_0`.

    :rtype: (float, float) or (float, float, int)
    """
    means, rings = background_rings(frame)
    low = means.min()
    # Equal ring means may differ in the last ulp after sum/count.
    tied = means <= low + RING_TIE_RTOL * max(float(low.abs()), 1.0)
    ring = int(tied.nonzero()[0])
    mu0 = float(means[ring])
    values = frame.mu.to(torch.double)[rings == ring]
    sigma = math.sqrt(float(((values - mu0)**2).mean()))
    return (mu0, sigma, ring) if return_ring else (mu0, sigma)


# Geometry of the analysis ####################################################


def pixel_momenta(height: int, width: int, tof: TofParams,
                  delta: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """Far-field wavevectors (units :math:`1/a`) of the pixel centres,
    :math:`k = 2\\pi^2 x / (\\tau a)`."""
    x, y = pixel_axes(height, width, delta)
    scale = 2 * math.pi**2 / (tof.tau * tof.spacing_a)
    return scale * x, scale * y


def reciprocal_shift_pixels(tof: TofParams, delta: float) -> float:
    """Pixel distance between wavevectors differing by :math:`2\\pi/a`."""
    return tof.tau * tof.spacing_a / (math.pi * delta)


def default_region(height: int, width: int, tof: TofParams, delta: float,
                   k: Optional[Tuple[float, float]] = None,
                   box: int = 5) -> List[Pixel]:
    """:obj:`box` x :obj:`box` pixels centred on the pixel nearest to the
    wavevector :obj:`k` (default :math:`(\\pi/a, \\pi/a)`)."""
    if box < 1 or box % 2 != 1:
        raise ArgumentError(f'box must be a positive odd number (got {box})')
    kx, ky = (math.pi, math.pi) if k is None else k
    per_k = tof.tau * tof.spacing_a / (2 * math.pi**2 * delta)
    ci = int(round((height - 1) / 2 + ky * per_k))
    cj = int(round((width - 1) / 2 + kx * per_k))
    half = box // 2
    if ci - half < 0 or cj - half < 0 or ci + half >= height or \
            cj + half >= width:
        raise ArgumentError('analysis region falls outside the frame')
    return [(i, j) for i in range(ci - half, ci + half + 1)
            for j in range(cj - half, cj + half + 1)]


def symmetry_orbits(height: int, width: int, shift: float,
                    excluded: Optional[torch.Tensor] = None
                    ) -> Tuple[torch.Tensor, torch.Tensor]:
    """Pixel orbits under :math:`k_{x,y} \\to \\pm k_{x,y}` combined with
    shifts by :math:`0, \\pm 2\\pi/a` per axis, snapped to the nearest
    pixel.

    Returns :obj:`targets` and :obj:`valid` of shape :obj:`[T, H * W]`:
    column :math:`p` lists the flat indices of the orbit of pixel
    :math:`p`; members outside the frame, excluded members and duplicates
    are marked invalid.
    """
    cy, cx = (height - 1) / 2, (width - 1) / 2
    dy = (torch.arange(height, dtype=torch.double) - cy).view(-1, 1)
    dx = (torch.arange(width, dtype=torch.double) - cx).view(1, -1)
    targets = []
    for sy in (1, -1):
        for sx in (1, -1):
            for my in (-1, 0, 1):
                for mx in (-1, 0, 1):
                    ty = torch.round(cy + sy * dy + my * shift).long()
                    tx = torch.round(cx + sx * dx + mx * shift).long()
                    ty, tx = torch.broadcast_tensors(ty, tx)
                    ok = (ty >= 0) & (ty < height) & (tx >= 0) & (tx < width)
                    target = ty.clamp(0, height - 1) * width + \
                        tx.clamp(0, width - 1)
                    if excluded is not None:
                        ok &= ~excluded.view(-1)[target]
                    targets.append(torch.where(ok, target, -1).view(-1))

    targets, _ = torch.sort(torch.stack(targets), dim=0)
    valid = targets >= 0
    valid[1:] &= targets[1:] != targets[:-1]
    return targets.clamp(min=0), valid


def symmetrize_map(values: torch.Tensor, targets: torch.Tensor,
                   valid: torch.Tensor) -> torch.Tensor:
    """Replaces every pixel by the mean over its valid orbit members; pixels
    without any valid member become NaN."""
    flat = values.reshape(-1)
    member = torch.where(valid, flat[targets], torch.zeros_like(flat[targets]))
    count = valid.sum(dim=0)
    out = member.sum(dim=0) / count.clamp(min=1)
    out = torch.where(count > 0, out, torch.full_like(out, math.nan))
    return out.view(values.size())


def region_weights(region: Sequence[Pixel], height: int, width: int,
                   orbits: Optional[Tuple[torch.Tensor, torch.Tensor]] = None
                   ) -> torch.Tensor:
    """Effective per-pixel weights :math:`w_q` with :math:`\\bar{E}_A =
    \\sum_q w_q E_q`, shape :obj:`[H, W]`."""
    w = torch.zeros(height * width, dtype=torch.double)
    share = 1.0 / len(region)
    for i, j in region:
        p = i * width + j
        if orbits is None:
            w[p] += share
            continue
        targets, valid = orbits
        members = targets[:, p][valid[:, p]]
        if members.numel() == 0:
            raise ArgumentError(f'pixel {(i, j)} has an empty orbit')
        w.index_add_(0, members,
                     torch.full((members.numel(), ), share / members.numel(),
                                dtype=torch.double))
    return w.view(height, width)


# Envelope on the detector ####################################################


def _axis_envelope(wannier: WannierTable, tof: TofParams, x: torch.Tensor,
                   exact: bool = False) -> torch.Tensor:
    # Per-axis factor of f in 1/m; the product over both axes is f in 1/m^2.
    phi = math.pi * x / (tof.tau * tof.spacing_a)
    wtilde = wannier.transform(phi) if exact else wannier.interpolate(phi)
    return (2 * math.pi**2 / tof.tau) * wtilde.abs()**2 / tof.spacing_a


def _axis_envelope_slope(wannier: WannierTable, tof: TofParams,
                         x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    scale = math.pi / (tof.tau * tof.spacing_a)
    phi = scale * x
    wtilde = wannier.transform(phi)
    slope = wannier.transform(phi, derivative=True)
    prefactor = 2 * math.pi**2 / (tof.tau * tof.spacing_a)
    value = prefactor * wtilde.abs()**2
    grad = prefactor * 2 * (wtilde.conj() * slope).real * scale
    return value, grad


def inverse_envelope(wannier: WannierTable, tof: TofParams, height: int,
                     width: int, delta: float) -> torch.Tensor:
    """:math:`g_{ij} = 1 / f(x_j, y_i)` at the pixel centres in square
    meters per atom."""
    x, y = pixel_axes(height, width, delta)
    f = _axis_envelope(wannier, tof, y).view(-1, 1) * \
        _axis_envelope(wannier, tof, x).view(1, -1)
    return 1 / f


def gradient_bound(wannier: WannierTable, tof: TofParams, height: int,
                   width: int, delta: float) -> torch.Tensor:
    """:math:`\\epsilon_{ij}`: largest :math:`|\\nabla g|` over the corners,
    edge midpoints and centre of every pixel."""
    x, y = pixel_axes(height, width, delta)
    offsets = delta * torch.tensor([-0.5, 0.0, 0.5], dtype=torch.double)
    xs = (x.view(-1, 1) + offsets.view(1, -1)).reshape(-1)
    ys = (y.view(-1, 1) + offsets.view(1, -1)).reshape(-1)
    ex, dex = _axis_envelope_slope(wannier, tof, xs)
    ey, dey = _axis_envelope_slope(wannier, tof, ys)
    ex, dex = ex.view(1, 1, width, 3), dex.view(1, 1, width, 3)
    ey, dey = ey.view(height, 3, 1, 1), dey.view(height, 3, 1, 1)
    gx = -dex / (ex**2 * ey)
    gy = -dey / (ex * ey**2)
    return (gx**2 + gy**2).sqrt().amax(dim=(1, 3))


def default_wannier_factory(lattice: LatticeParams) -> WannierFactory:

    def factory(depth_s: float) -> WannierTable:
        spectrum = solve_band_structure(lattice.with_depth(depth_s))
        return compute_wannier(spectrum)

    return factory


def depth_derivative(wannier_at: WannierFactory, tof: TofParams,
                     depth_s: float, height: int, width: int,
                     delta: float) -> torch.Tensor:
    """:math:`\\partial_s g_{ij}` by central difference with step
    :math:`0.01 s`."""
    if depth_s <= 0:
        raise ArgumentError('depth derivative needs a positive depth')
    step = FD_STEP * depth_s
    g_plus = inverse_envelope(wannier_at(depth_s + step), tof, height, width,
                              delta)
    g_minus = inverse_envelope(wannier_at(depth_s - step), tof, height, width,
                               delta)
    out = (g_plus - g_minus) / (2 * step)
    return out


# Error budget ################################################################


@dataclass(frozen=True)
class BudgetInputs:
    """Per-frame region bounds and per-pixel quantities entering the error
    budget. Pixel quantities are flat over the pixels with nonzero
    weight."""
    e_frames: torch.Tensor
    weights: torch.Tensor
    g: torch.Tensor
    sigma_g: torch.Tensor
    n_bar: torch.Tensor
    eps: torch.Tensor
    sigma_mu0: torch.Tensor
    alpha: float
    sigma_alpha: float
    delta: float
    n_pixels: int


def error_budget(inputs: BudgetInputs
                 ) -> Tuple[Optional[float], float, float]:
    """Statistical, systematic and discretization uncertainties of
    :math:`\\bar{E}_A`.

    The statistical part is the standard error over frames and needs at
    least two of them; otherwise :obj:`None` is returned in its place.

    :rtype: (float or None, float, float)
    """
    M = inputs.e_frames.numel()
    e_bar = float(pairwise_sum(inputs.e_frames)) / M
    if M >= 2:
        dev = (inputs.e_frames - e_bar)**2
        sigma_stat = math.sqrt(float(pairwise_sum(dev)) / (M * (M - 1)))
    else:
        sigma_stat = None

    w, d2 = inputs.weights, inputs.delta**2
    alpha_term = (inputs.sigma_alpha * e_bar / inputs.alpha)**2
    lever = float(pairwise_sum(w * inputs.g)) / d2 - inputs.n_pixels
    mu0_term = (inputs.alpha / M)**2 * lever**2 * \
        float(pairwise_sum(inputs.sigma_mu0**2))
    g_term = float(pairwise_sum((w * inputs.sigma_g * inputs.n_bar)**2)) / \
        d2**2
    sigma_sys = math.sqrt(alpha_term + mu0_term + g_term)

    disc = w * inputs.eps * inputs.n_bar / (math.sqrt(6) * inputs.delta)
    sigma_disc = math.sqrt(float(pairwise_sum(disc**2)))
    return sigma_stat, sigma_sys, sigma_disc


def total_sigma(sigma_stat: Optional[float], sigma_sys: float,
                sigma_disc: float) -> float:
    stat = 0.0 if sigma_stat is None else sigma_stat
    return math.sqrt(stat**2 + sigma_sys**2 + sigma_disc**2)


# Analysis ####################################################################


@dataclass
class BoundReport:
    """Estimated bound :math:`\\bar{E}_A` over region :obj:`region` with its
    uncertainty budget (atoms). :obj:`sigma_stat` is :obj:`None` for stacks
    of a single frame."""
    e_bar_A: float
    n_bar: float
    sigma_stat: Optional[float]
    sigma_sys: float
    sigma_disc: float
    sigma_total: float
    region: List[Pixel]
    per_pixel_map: torch.Tensor
    sigma_map: torch.Tensor
    weights: torch.Tensor
    k_x: torch.Tensor
    k_y: torch.Tensor
    symmetry: bool
    num_frames: int
    excluded_pixels: List[Pixel] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'e_bar_A': self.e_bar_A,
            'n_bar': self.n_bar,
            'sigma_stat': self.sigma_stat,
            'sigma_stat_available': self.sigma_stat is not None,
            'sigma_sys': self.sigma_sys,
            'sigma_disc': self.sigma_disc,
            'sigma_total': self.sigma_total,
            'region': [[i, j] for i, j in self.region],
            'symmetry': self.symmetry,
            'num_frames': self.num_frames,
            'num_excluded_pixels': len(self.excluded_pixels),
            'notes': list(self.notes),
        }

    def map_to_csv(self, path) -> None:
        H, W = self.per_pixel_map.size()
        I, J = torch.meshgrid(torch.arange(H), torch.arange(W), indexing='ij')
        KY, KX = torch.meshgrid(self.k_y, self.k_x, indexing='ij')
        write_columns(path, ['i', 'j', 'k_x', 'k_y', 'E', 'sigma_total'],
                      [I, J, KX, KY, self.per_pixel_map, self.sigma_map])


@dataclass(frozen=True)
class _Prepared:
    g: torch.Tensor
    excluded: torch.Tensor
    weights: torch.Tensor
    orbits: Optional[Tuple[torch.Tensor, torch.Tensor]]
    mu: torch.Tensor
    mu0: torch.Tensor
    sigma_mu0: torch.Tensor
    region: List[Pixel]
    excluded_pixels: List[Pixel]
    notes: List[str]


def _prepare(stack: ImageStack, wannier: WannierTable,
             region: Optional[Sequence[Pixel]], symmetry: bool,
             exclusion: float) -> _Prepared:
    H, W = stack.shape
    delta = stack.calibration.pixel_size_delta
    if region is None:
        region = default_region(H, W, stack.tof, delta)
    region = [(int(i), int(j)) for i, j in region]
    if len(region) == 0:
        raise ArgumentError('analysis region must not be empty')
    for i, j in region:
        if not (0 <= i < H and 0 <= j < W):
            raise ArgumentError(f'region pixel {(i, j)} outside the frame')

    g = inverse_envelope(wannier, stack.tof, H, W, delta)
    f = 1 / g
    excluded = f < exclusion * float(f.max())
    bad = [p for p in region if bool(excluded[p])]
    if bad:
        raise ExcludedPixelError(
            f'{len(bad)} region pixel(s) lie below the envelope floor', bad)
    excluded_pixels = [tuple(p) for p in excluded.nonzero().tolist()]
    notes = []
    if excluded_pixels:
        message = (f'{len(excluded_pixels)} pixel(s) below the envelope '
                   f'floor excluded from the maps')
        warnings.warn(message)
        notes.append(message)

    orbits = None
    if symmetry:
        orbits = symmetry_orbits(H, W,
                                 reciprocal_shift_pixels(stack.tof, delta),
                                 excluded)
        notes.append('symmetry averaging on')
    else:
        notes.append('symmetry averaging off')
    weights = region_weights(region, H, W, orbits)

    backgrounds = [estimate_background(frame) for frame in stack.frames]
    mu0 = torch.tensor([b[0] for b in backgrounds], dtype=torch.double)
    sigma_mu0 = torch.tensor([b[1] for b in backgrounds], dtype=torch.double)

    return _Prepared(g, excluded, weights, orbits, stack.mu(), mu0, sigma_mu0,
                     region, excluded_pixels, notes)


def _frame_bounds(prep: _Prepared, alpha: float, delta: float,
                  g: Optional[torch.Tensor] = None
                  ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    g = prep.g if g is None else g
    M = prep.mu.size(0)
    n = alpha * (prep.mu - prep.mu0.view(-1, 1, 1))
    N = pairwise_sum(n.reshape(M, -1).t())
    E = N.view(-1, 1, 1) - g * n / delta**2
    return n, N, E


def analyze_stack(stack: ImageStack, wannier: WannierTable,
                  region: Optional[Sequence[Pixel]] = None,
                  symmetry: bool = True,
                  wannier_at: Optional[WannierFactory] = None,
                  exclusion: float = EXCLUSION_FLOOR) -> BoundReport:
    """Estimates the entanglement bound from an absorption-image stack.

    Every frame is background-corrected by its ring estimate, converted to
    atoms :math:`n_{ij} = \\alpha (\\mu_{ij} - \\mu_0)`, and mapped to
    :math:`E_{ij} = N - g_{ij} n_{ij} / \\Delta^2`. Region bounds are
    averaged over frames and carry the full error budget.

    Args:
        stack (:class:`ImageStack`): Image stack with its metadata.
        wannier (:class:`WannierTable`): Wannier table at the stack depth.
        region (list of (int, int), optional): Pixel region :math:`A`.
            (default: :obj:`5 x 5` box at :math:`(\\pi/a, \\pi/a)`)
        symmetry (bool, optional): Average over symmetry-related pixels.
            (default: :obj:`True`)
        wannier_at (callable, optional): Maps a depth to its Wannier table,
            used for :math:`\\partial_s g`. Defaults to a fresh band solve.
        exclusion (float, optional): Relative envelope floor below which
            pixels are excluded. (default: :obj:`1e-6`)

    :rtype: :class:`BoundReport`
    """
    calib = stack.calibration
    H, W = stack.shape
    delta, alpha = calib.pixel_size_delta, calib.alpha
    prep = _prepare(stack, wannier, region, symmetry, exclusion)
    M = stack.num_frames

    n, N, E = _frame_bounds(prep, alpha, delta)
    E = E.masked_fill(prep.excluded, math.nan)
    support = (prep.weights > 0).view(-1)
    w = prep.weights.view(-1)[support]
    e_frames = E.reshape(M, -1)[:, support] @ w

    e_bar = float(pairwise_sum(e_frames)) / M
    n_bar_total = float(pairwise_sum(N)) / M
    n_bar = pairwise_sum(n) / M

    depth_s = stack.lattice.depth_s
    sigma_s = calib.sigma_s_rel * depth_s
    if depth_s > 0 and sigma_s > 0:
        wannier_at = wannier_at or default_wannier_factory(stack.lattice)
        dg = depth_derivative(wannier_at, stack.tof, depth_s, H, W, delta)
        if not torch.isfinite(dg[~prep.excluded]).all():
            raise NumericalError('depth derivative of the envelope is not '
                                 'finite')
        sigma_g = sigma_s * dg.abs()
    else:
        sigma_g = torch.zeros(H, W, dtype=torch.double)
    eps = gradient_bound(wannier, stack.tof, H, W, delta)

    inputs = BudgetInputs(e_frames, w,
                          prep.g.view(-1)[support],
                          sigma_g.view(-1)[support],
                          n_bar.view(-1)[support],
                          eps.view(-1)[support], prep.sigma_mu0, alpha,
                          calib.sigma_alpha, delta, H * W)
    sigma_stat, sigma_sys, sigma_disc = error_budget(inputs)
    sigma_total = total_sigma(sigma_stat, sigma_sys, sigma_disc)

    per_pixel = pairwise_sum(E) / M
    if M >= 2:
        stat_map = (pairwise_sum((E - per_pixel)**2) / (M * (M - 1))).sqrt()
    else:
        stat_map = torch.zeros_like(per_pixel)
    sys_map = (calib.sigma_alpha * per_pixel / alpha)**2 + \
        (alpha / M)**2 * (prep.g / delta**2 - H * W)**2 * \
        float(pairwise_sum(prep.sigma_mu0**2)) + \
        (sigma_g * n_bar / delta**2)**2
    disc_map = (eps * n_bar / (math.sqrt(6) * delta))**2
    sigma_map = (stat_map**2 + sys_map + disc_map).sqrt()
    if prep.orbits is not None:
        per_pixel = symmetrize_map(per_pixel, *prep.orbits)
    per_pixel = per_pixel.masked_fill(prep.excluded, math.nan)
    sigma_map = sigma_map.masked_fill(prep.excluded, math.nan)

    k_x, k_y = pixel_momenta(H, W, stack.tof, delta)
    logger.info('analyzed %d frame(s): E_A = %.6g +- %.3g (N = %.6g)', M,
                e_bar, sigma_total, n_bar_total)
    return BoundReport(e_bar, n_bar_total, sigma_stat, sigma_sys, sigma_disc,
                       sigma_total, prep.region, per_pixel, sigma_map,
                       prep.weights, k_x, k_y, symmetry, M,
                       prep.excluded_pixels, prep.notes)


@dataclass(frozen=True)
class MonteCarloBudget:
    sigma_sys: float
    e_bar_mean: float
    samples: torch.Tensor


def monte_carlo_budget(stack: ImageStack, wannier: WannierTable,
                       region: Optional[Sequence[Pixel]] = None,
                       symmetry: bool = True, draws: int = 500,
                       seed: int = 0,
                       wannier_at: Optional[WannierFactory] = None,
                       n_nodes: int = 9, span: float = 3.0,
                       exclusion: float = EXCLUSION_FLOOR
                       ) -> MonteCarloBudget:
    """Resamples the calibration :math:`\\alpha`, every frame background
    :math:`\\mu_0^{(n)}` and the lattice depth :math:`s` within their
    uncertainties and reports the spread of :math:`\\bar{E}_A`.

    :math:`g(s)` is interpolated by a cubic spline through :obj:`n_nodes`
    solved depths spanning :obj:`span` standard deviations.

    :rtype: :class:`MonteCarloBudget`
    """
    if draws < 2:
        raise ArgumentError(f'draws must be at least 2 (got {draws})')
    calib = stack.calibration
    H, W = stack.shape
    delta, alpha = calib.pixel_size_delta, calib.alpha
    prep = _prepare(stack, wannier, region, symmetry, exclusion)
    M = stack.num_frames

    support = (prep.weights > 0).view(-1)
    w = prep.weights.view(-1)[support]
    mu = prep.mu.reshape(M, -1)
    total_mu = pairwise_sum(mu.t())
    mu_q = mu[:, support]

    generator = torch.Generator()
    generator.manual_seed(seed)
    depth_s = stack.lattice.depth_s
    sigma_s = calib.sigma_s_rel * depth_s

    alphas = alpha + calib.sigma_alpha * torch.randn(
        draws, dtype=torch.double, generator=generator)
    shifts = prep.sigma_mu0.view(1, -1) * torch.randn(
        draws, M, dtype=torch.double, generator=generator)
    depths = depth_s + sigma_s * torch.randn(draws, dtype=torch.double,
                                             generator=generator)

    if sigma_s > 0:
        wannier_at = wannier_at or default_wannier_factory(stack.lattice)
        nodes = torch.linspace(depth_s - span * sigma_s,
                               depth_s + span * sigma_s, n_nodes,
                               dtype=torch.double)
        if float(nodes[0]) <= 0:
            raise ArgumentError('depth uncertainty reaches s <= 0')
        g_nodes = torch.stack([
            inverse_envelope(wannier_at(float(s)), stack.tof, H, W,
                             delta).view(-1)[support] for s in nodes
        ])
        spline = CubicSpline(nodes.numpy(), g_nodes.numpy(), axis=0)
        g_draws = torch.from_numpy(
            spline(depths.clamp(float(nodes[0]), float(nodes[-1])).numpy()))
    else:
        g_draws = prep.g.view(-1)[support].expand(draws, -1)

    mu0 = prep.mu0.view(1, -1) + shifts
    N = alphas.view(-1, 1) * (total_mu.view(1, -1) - H * W * mu0)
    n_q = alphas.view(-1, 1, 1) * (mu_q.view(1, M, -1) - mu0.view(draws, M, 1))
    weighted = (g_draws * w.view(1, -1)).view(draws, 1, -1)
    e_frames = N - (weighted * n_q).sum(dim=-1) / delta**2
    e_bar = e_frames.mean(dim=1)

    sigma = float(e_bar.std())
    logger.info('Monte-Carlo budget over %d draws: sigma_sys = %.4g', draws,
                sigma)
    return MonteCarloBudget(sigma, float(e_bar.mean()), e_bar)
