"""
Static SVG pictures of planar hypersurfaces and cycles, dual subdivisions and
grid functions (contours of a 2-D slice).
"""

import logging
from typing import Dict, List, Optional, Tuple

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

from errors import DimensionMismatchError, RangeError
from grids import GridFunction
from intersection import TropicalCycle
from polyhedra import PolyhedralCell, WeightedComplex
from tropical import DualSubdivision, TropicalHypersurface

logger = logging.getLogger(__name__)

# fixed ids and no timestamp: identical inputs give identical bytes
plt.rcParams['svg.hashsalt'] = 'tropical-hessian-toolkit'
plt.rcParams['font.size'] = 9
plt.rcParams['figure.figsize'] = [4.0, 4.0]

_SVG_METADATA = {'Date': None}


def _floats(v) -> np.ndarray:
    return np.array([float(x) for x in v])


def _window(cells: List[PolyhedralCell]) -> Tuple[np.ndarray, np.ndarray]:
    corners = [_floats(v) for c in cells for v in c.vertices]
    if not corners:
        return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    pts = np.array(corners)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = max(1.0, 0.5 * float(np.max(hi - lo)))
    return lo - pad, hi + pad


def _ray_length(start: np.ndarray, direction: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Parameter where start + t direction leaves the window"""
    t = np.inf
    for s, d, a, b in zip(start, direction, lo, hi):
        if d > 0:
            t = min(t, (b - s) / d)
        elif d < 0:
            t = min(t, (a - s) / d)
    return float(t)


def _cell_segment(cell: PolyhedralCell, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Endpoints of a one-dimensional cell clipped to the window"""
    structure = cell.structure
    verts = [_floats(v) for v in cell.vertices]
    if len(verts) == 2:
        return np.array(verts)
    start = verts[0]
    if structure.rays:
        d = _floats(structure.rays[0])
        d = d / np.linalg.norm(d)
        return np.array([start, start + _ray_length(start, d, lo, hi) * d])
    d = _floats(structure.lineality[0])
    d = d / np.linalg.norm(d)
    return np.array([start - _ray_length(start, -d, lo, hi) * d, start + _ray_length(start, d, lo, hi) * d])


def _draw_complex(ax, C: WeightedComplex):
    if C.n != 2:
        raise DimensionMismatchError(f"only planar complexes can be drawn, got n={C.n}")
    lo, hi = _window(list(C.cells))
    for cell in C.cells:
        label = str(cell.weight) if cell.weight is not None else ''
        if cell.dim == 0:
            x, y = _floats(cell.vertices[0])
            ax.plot([x], [y], 'o', color='tab:red', markersize=4)
            ax.annotate(label, (x, y), textcoords='offset points', xytext=(4, 4))
            continue
        seg = _cell_segment(cell, lo, hi)
        ax.plot(seg[:, 0], seg[:, 1], '-', color='tab:blue', linewidth=1.2)
        mid = seg.mean(axis=0)
        ax.annotate(label, tuple(mid), textcoords='offset points', xytext=(3, 3), color='tab:blue')
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])


def _draw_subdivision(ax, S: DualSubdivision):
    if S.base.n != 2:
        raise DimensionMismatchError(f"only planar subdivisions can be drawn, got n={S.base.n}")
    for face, _ in S.faces(1):
        pts = np.array([_floats(v) for v in face.vertices])
        ax.plot(pts[:, 0], pts[:, 1], '-', color='k', linewidth=1.0)
    for face, members in S.faces(2):
        centre = np.mean([_floats(v) for v in face.vertices], axis=0)
        ax.annotate(str(len(members)), tuple(centre), ha='center', va='center', color='0.5')
    pts = np.array([_floats(p) for p in S.base.vertices])
    ax.plot(pts[:, 0], pts[:, 1], 'o', color='k', markersize=3)
    ax.set_aspect('equal')


def _grid_slice(u: GridFunction, slice_at: Optional[Dict[int, int]]):
    if u.n == 2:
        return u.axes, u.values
    if u.n < 2 or slice_at is None or len(slice_at) != u.n - 2:
        raise RangeError(f"a {u.n}-dimensional grid needs a slice fixing {u.n - 2} axes")
    index = tuple(slice_at.get(k, slice(None)) for k in range(u.n))
    free = [k for k in range(u.n) if k not in slice_at]
    return [u.axes[k] for k in free], u.values[index]


def _draw_grid(ax, u: GridFunction, slice_at: Optional[Dict[int, int]]):
    axes, values = _grid_slice(u, slice_at)
    X, Y = np.meshgrid(axes[0], axes[1], indexing='ij')
    contours = ax.contour(X, Y, values, levels=12, linewidths=0.8)
    ax.clabel(contours, fontsize=6)
    ax.set_aspect('equal')


def render_svg(obj, path: str, slice_at: Optional[Dict[int, int]] = None) -> str:
    """Write a static SVG of a hypersurface, cycle, subdivision or grid function"""
    fig = plt.figure()
    ax = fig.add_subplot(1, 1, 1)
    try:
        if isinstance(obj, TropicalHypersurface):
            _draw_complex(ax, obj.complex)
        elif isinstance(obj, TropicalCycle):
            _draw_complex(ax, obj.complex)
        elif isinstance(obj, WeightedComplex):
            _draw_complex(ax, obj)
        elif isinstance(obj, DualSubdivision):
            _draw_subdivision(ax, obj)
        elif isinstance(obj, GridFunction):
            _draw_grid(ax, obj, slice_at)
        else:
            raise RangeError(f"cannot draw a {type(obj).__name__}")
        ax.spines['right'].set_visible(False)
        ax.spines['top'].set_visible(False)
        fig.savefig(path, format='svg', metadata=_SVG_METADATA)
    finally:
        plt.close(fig)
    logger.debug("rendered %s", path)
    return path
