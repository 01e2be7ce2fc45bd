import logging
import os.path as osp
from typing import Dict, Optional

from torch_witness.errors import ArgumentError, ManifestError
from torch_witness.imaging import (BoundReport, CalibrationParams, ImageFrame,
                                   ImageStack)
from torch_witness.io import (read_frame_csv, read_frame_raw, read_json,
                              write_frame_csv, write_frame_raw, write_json)
from torch_witness.lattice import LatticeParams
from torch_witness.tof import TofParams
from torch_witness.utils import RB87_CROSS_SECTION

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'
FORMATS = {'olif': '.olif', 'csv': '.csv'}
MANIFEST_VERSION = 1


def _metadata(stack: ImageStack) -> Dict:
    calib = stack.calibration
    return {
        'pixel_size_delta': calib.pixel_size_delta,
        'alpha': calib.alpha,
        'sigma_alpha': calib.sigma_alpha,
        'cross_section': calib.cross_section,
        'depth_s': stack.lattice.depth_s,
        'sigma_s': calib.sigma_s_rel * stack.lattice.depth_s,
        'sigma_s_rel': calib.sigma_s_rel,
        'wavelength': stack.lattice.wavelength,
        'mass': stack.lattice.mass,
        'tof_time': stack.tof.time,
        'seed': stack.seed,
    }


def write_stack(stack: ImageStack, directory: str, fmt: str = 'olif') -> str:
    """Writes :obj:`stack` into :obj:`directory` as one frame file per image
    plus a JSON manifest, and returns the manifest path.

    Args:
        stack (:class:`ImageStack`): Image stack.
        directory (str): Output directory.
        fmt (str, optional): Frame format, :obj:`"olif"` (raw float32 with a
            16 byte header) or :obj:`"csv"`. (default: :obj:`"olif"`)

    :rtype: str
    """
    if fmt not in FORMATS:
        raise ArgumentError(f'frame format must be one of {sorted(FORMATS)} '
                            f'(got {fmt!r})')
    width = len(str(stack.num_frames - 1))
    names = []
    for n, frame in enumerate(stack.frames):
        name = f'frame_{n:0{width}d}{FORMATS[fmt]}'
        path = osp.join(directory, name)
        if fmt == 'olif':
            write_frame_raw(path, frame.mu)
        else:
            write_frame_csv(path, frame.mu)
        names.append(name)

    height, width = stack.shape
    manifest = {
        'version': MANIFEST_VERSION,
        'format': fmt,
        'height': height,
        'width': width,
        'frames': names,
        'metadata': _metadata(stack),
    }
    path = osp.join(directory, MANIFEST)
    write_json(path, manifest)
    logger.info('wrote %d frame(s) to %s', stack.num_frames, directory)
    return path


def _require(table: Dict, key: str, path: str):
    if key not in table:
        raise ManifestError(f'{path}: missing key {key!r}')
    return table[key]


def read_stack(path: str, approximation: str = 'far_field') -> ImageStack:
    """Reads an image stack from a manifest file or a directory holding
    :obj:`manifest.json`.

    Args:
        path (str): Manifest file or stack directory.
        approximation (str, optional): Propagator attached to the stack's
            :class:`TofParams`. (default: :obj:`"far_field"`)

    :rtype: :class:`ImageStack`
    """
    if osp.isdir(path):
        path = osp.join(path, MANIFEST)
    manifest = read_json(path)
    directory = osp.dirname(osp.abspath(path))

    fmt = _require(manifest, 'format', path)
    if fmt not in FORMATS:
        raise ManifestError(f'{path}: unknown frame format {fmt!r}')
    names = _require(manifest, 'frames', path)
    if not isinstance(names, list) or len(names) == 0:
        raise ManifestError(f'{path}: frame list must be nonempty')
    meta = _require(manifest, 'metadata', path)
    height = _require(manifest, 'height', path)
    width = _require(manifest, 'width', path)

    try:
        calib = CalibrationParams(
            alpha=float(_require(meta, 'alpha', path)),
            sigma_alpha=float(_require(meta, 'sigma_alpha', path)),
            cross_section=float(meta.get('cross_section', RB87_CROSS_SECTION)),
            pixel_size_delta=float(_require(meta, 'pixel_size_delta', path)),
            sigma_s_rel=float(_require(meta, 'sigma_s_rel', path)),
        )
        lattice = LatticeParams(float(_require(meta, 'depth_s', path)),
                                float(_require(meta, 'wavelength', path)),
                                float(_require(meta, 'mass', path)))
        tof = TofParams.from_lattice(lattice,
                                     float(_require(meta, 'tof_time', path)),
                                     approximation)
    except ManifestError:
        raise
    except (TypeError, ValueError) as e:
        raise ManifestError(f'{path}: invalid metadata: {e}') from e

    frames = []
    for name in names:
        frame_path = osp.join(directory, name)
        if not osp.isfile(frame_path):
            raise ManifestError(f'{path}: frame file {name!r} not found')
        mu = read_frame_raw(frame_path) if fmt == 'olif' else \
            read_frame_csv(frame_path)
        if tuple(mu.size()) != (height, width):
            raise ManifestError(f'{frame_path}: frame is {tuple(mu.size())}, '
                                f'manifest says {(height, width)}')
        try:
            frames.append(ImageFrame(mu, calib.pixel_size_delta))
        except ArgumentError as e:
            raise ManifestError(f'{frame_path}: {e}') from e

    seed: Optional[int] = meta.get('seed')
    logger.info('read %d frame(s) of %d x %d pixels from %s', len(frames),
                height, width, directory)
    return ImageStack(frames, lattice, tof, calib, seed)


def write_report(report: BoundReport, directory: str,
                 extra: Optional[Dict] = None) -> Dict[str, str]:
    """Writes :obj:`report.json` and the per-pixel map :obj:`map.csv`."""
    content = report.to_dict()
    if extra:
        content.update(extra)
    paths = {
        'report': osp.join(directory, 'report.json'),
        'map': osp.join(directory, 'map.csv'),
    }
    write_json(paths['report'], content)
    report.map_to_csv(paths['map'])
    logger.info('wrote report to %s', paths['report'])
    return paths
