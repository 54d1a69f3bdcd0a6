"""Figure and image export: windowed grayscale PNGs, trace plots, comparison panels."""

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from PIL import Image  # noqa: E402


def save_grayscale(path, img, window=None):
    """Write a real 2D image as 8-bit grayscale PNG; returns the (lo, hi) window used."""
    img = np.asarray(img, dtype=np.float64)
    if window is None:
        lo, hi = float(img.min()), float(img.max())
    else:
        lo, hi = float(window[0]), float(window[1])
    span = hi - lo if hi > lo else 1.0
    scaled = np.clip((img - lo) / span, 0.0, 1.0)
    Image.fromarray((scaled * 255).round().astype(np.uint8), mode="L").save(path)
    return lo, hi


def write_trace(path, rows, header):
    """Plain-text table: '# <header>' then one space-separated row per entry."""
    with open(path, "w") as f:
        f.write("# " + " ".join(header) + "\n")
        for row in rows:
            f.write(" ".join(f"{v:.8e}" if isinstance(v, float) else str(v) for v in row))
            f.write("\n")


def read_trace(path):
    """Read a table written by write_trace; returns (header, array)."""
    with open(path) as f:
        first = f.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing trace header")
        header = first[1:].split()
        data = np.loadtxt(f, ndmin=2)
    if data.size and data.shape[1] != len(header):
        raise ValueError(f"{path}: column count does not match header")
    return header, data


def plot_trace(trace_path, out_path):
    """Line plot of every trace column against the first (step) column."""
    header, data = read_trace(trace_path)
    if data.size == 0:
        raise ValueError(f"{trace_path}: empty trace")
    step = data[:, 0]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for j in range(1, data.shape[1]):
        col = data[:, j]
        ax.plot(step, col, label=header[j], linewidth=1.0)
    positive = data[:, 1:][np.isfinite(data[:, 1:])]
    if positive.size and (positive > 0).all():
        ax.set_yscale("log")
    ax.set_xlabel(header[0])
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=140)
    plt.close(fig)


def _zoom_bounds(roi, shape):
    if roi is not None:
        return roi
    r, c = shape
    return (r // 4, 3 * r // 4, c // 4, 3 * c // 4)


def comparison_figure(path, ref_mag, recons, roi=None, error_window=0.2):
    """Panel figure: rows = full view / ROI zoom / error map, columns = methods."""
    names = list(recons)
    ncols = len(names) + 1
    r0, r1, c0, c1 = _zoom_bounds(roi, ref_mag.shape)
    vmax = float(ref_mag.max())
    fig, axes = plt.subplots(3, ncols, figsize=(2.2 * ncols, 6.8), squeeze=False)

    def off(ax):
        ax.set_xticks([])
        ax.set_yticks([])

    axes[0, 0].imshow(ref_mag, cmap="gray", vmin=0, vmax=vmax)
    axes[0, 0].set_title("reference", fontsize=9)
    axes[1, 0].imshow(ref_mag[r0:r1, c0:c1], cmap="gray", vmin=0, vmax=vmax)
    axes[2, 0].imshow(np.zeros_like(ref_mag), cmap="inferno", vmin=0, vmax=error_window)
    for row in range(3):
        off(axes[row, 0])

    for j, name in enumerate(names, start=1):
        mag = recons[name]
        err = np.abs(mag - ref_mag)
        axes[0, j].imshow(mag, cmap="gray", vmin=0, vmax=vmax)
        axes[0, j].set_title(name, fontsize=9)
        axes[1, j].imshow(mag[r0:r1, c0:c1], cmap="gray", vmin=0, vmax=vmax)
        axes[2, j].imshow(err, cmap="inferno", vmin=0, vmax=error_window)
        for row in range(3):
            off(axes[row, j])

    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
