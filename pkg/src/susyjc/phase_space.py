"""Cavity-field density matrix, Wigner functions, and cat-lobe detection.

Two Wigner routes are kept deliberately independent:

* :func:`wigner_closed` evaluates the alternating displaced-parity series
  with the closed-form propagator scalars and the in-house displacement
  kernel tables (Laguerre recurrences, fused overflow-safe products).
* :func:`wigner_oracle` displaces an explicitly given density matrix using
  displacement-operator matrix elements built from scipy's Laguerre and
  log-gamma routines, so the two paths share no special-function code.

The parity-series prefactor is 1/pi, under which the grid integral of a
normalized state is 1/2 (not 1); see README conventions.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .fock import GridSpec, TruncationWarning, displacement_kernel_table, \
    sqrt_factorial_ratio_array
from .model import ModelParams
from .propagator import scalar_tables
from .states import InitialCondition, QubitFieldState

DENSITY_HERMITICITY_TOL = 1e-10
DENSITY_TRACE_TOL = 1e-8
DENSITY_EIGENVALUE_FLOOR = -1e-8


def reduced_density(state: QubitFieldState) -> np.ndarray:
    """Field density matrix after tracing out the qubit: ee^+ + gg^+."""
    return np.outer(state.e, state.e.conj()) + np.outer(state.g, state.g.conj())


def check_field_density(rho: np.ndarray) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity of a field density."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > DENSITY_HERMITICITY_TOL:
        raise ValueError(f"density matrix not Hermitian (residual {herm:.3e})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > DENSITY_TRACE_TOL:
        raise ValueError(f"density matrix trace {tr} differs from 1")
    lo = float(np.min(np.linalg.eigvalsh(rho)))
    if lo < DENSITY_EIGENVALUE_FLOOR:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


@dataclass(frozen=True)
class WignerGrid:
    """Sampled Wigner values over a rectangular grid, shape (n_im, n_re)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.n_im, self.spec.n_re):
            raise ValueError("value array shape must be (n_im, n_re)")
        if not np.all(np.isfinite(v)):
            raise ValueError("Wigner values must be finite")
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        """Riemann-sum integral over the sampled window."""
        return float(np.sum(self.values) * self.spec.cell_area())

    def write_csv(self, path):
        """Rows re,im,w; im ascending outer, re ascending inner; 17 digits."""
        s = self.spec
        re, im = s.re_axis(), s.im_axis()
        with open(path, "w", newline="") as fh:
            fh.write("re,im,w\n")
            for i in range(s.n_im):
                for j in range(s.n_re):
                    fh.write(f"{re[j]:.17g},{im[i]:.17g},{self.values[i, j]:.17g}\n")

    def write_pgm(self, path, maxval: int = 65535):
        """ASCII portable graymap with the value mapping recorded in comments.

        Values are mapped linearly: w_min -> 0, w_max -> maxval, rows written
        top-to-bottom with the imaginary axis descending (image convention).
        """
        lo = float(np.min(self.values))
        hi = float(np.max(self.values))
        span = hi - lo if hi > lo else 1.0
        pixels = np.rint((self.values - lo) / span * maxval).astype(int)
        s = self.spec
        with open(path, "w", newline="") as fh:
            fh.write("P2\n")
            fh.write(f"# grid re [{s.re_min:.17g}, {s.re_max:.17g}] x {s.n_re}, "
                     f"im [{s.im_min:.17g}, {s.im_max:.17g}] x {s.n_im}\n")
            fh.write(f"# linear map: w={lo:.17g} -> 0, w={hi:.17g} -> {maxval}\n")
            fh.write(f"{s.n_re} {s.n_im}\n{maxval}\n")
            for i in range(s.n_im - 1, -1, -1):
                fh.write(" ".join(str(p) for p in pixels[i]) + "\n")


def _closed_series_vectors(init: InitialCondition, params: ModelParams,
                           t: float) -> np.ndarray:
    """Coefficient vectors of the four branch series, stacked (4, N+1).

    Rows: excited-branch survival, ground-branch arrivals from c,
    excited-branch arrivals from d, ground-branch survival.  Entries whose
    source index lies beyond the cutoff are zero; that mass is exactly the
    ladder leakage tracked by the propagator.
    """
    k, n_max = params.k, init.n_max
    tab = scalar_tables(params, t, n_max)
    sq = sqrt_factorial_ratio_array(np.arange(n_max + 1), k)
    c, d = init.c, init.d
    u = np.zeros((4, n_max + 1), dtype=complex)
    u[0] = c * tab.phase_minus * np.conj(tab.stay_minus)
    u[1, :n_max + 1 - k] = (c[k:] * (tab.phase_plain * tab.swap_plain * sq)[:n_max + 1 - k])
    u[2, k:] = (d[:n_max + 1 - k] * (tab.phase_plain * tab.swap_plain * sq)[:n_max + 1 - k])
    u[3] = d * tab.phase_plain * tab.stay_plain
    return u


def _combine_series(r: np.ndarray, init: InitialCondition) -> np.ndarray:
    """Fold the alternating parity sum of the four series into W values.

    r has shape (batch, 4, S); returns the unnormalized per-point sums.
    """
    signs = np.where(np.arange(r.shape[2]) % 2 == 0, 1.0, -1.0)
    ae, ag = init.alpha_e, init.alpha_g
    per_s = (abs(ae) ** 2 * (np.abs(r[:, 0]) ** 2 + np.abs(r[:, 1]) ** 2)
             + abs(ag) ** 2 * (np.abs(r[:, 2]) ** 2 + np.abs(r[:, 3]) ** 2)
             + 2 * np.real(ae * np.conj(ag)
                           * (r[:, 0] * np.conj(r[:, 2]) + r[:, 1] * np.conj(r[:, 3]))))
    return per_s @ signs


def _closed_chunk(args) -> np.ndarray:
    u, init, alpha_flat, kernel_table = args
    dim = u.shape[1]
    table = kernel_table(alpha_flat, dim)          # (B, n, s)
    r = np.matmul(u[None, :, :], table)            # (B, 4, s)
    sums = _combine_series(r, init)
    return np.exp(-np.abs(alpha_flat) ** 2) / (math.pi * init.weight_norm**2) * sums


def _batches(n_points: int, dim: int) -> int:
    # keep each kernel table below ~128 MB of complex entries
    return max(1, (1 << 22) // (dim * dim))


def wigner_closed(init: InitialCondition, params: ModelParams, t: float,
                  grid: GridSpec, workers: int | None = None,
                  kernel_table=displacement_kernel_table) -> WignerGrid:
    """Wigner function of the evolved cavity field, from the closed-form series.

    Evaluates the alternating parity series per grid point with the series
    index truncated at the state cutoff.  All four branch series share one
    displacement-kernel table per point.  ``workers`` distributes grid chunks
    over processes; results are identical regardless of worker count.
    """
    alpha = grid.alpha_grid().ravel()
    u = _closed_series_vectors(init, params, t)
    step = _batches(alpha.size, init.n_max + 1)
    chunks = [(u, init, alpha[i:i + step], kernel_table)
              for i in range(0, alpha.size, step)]
    if workers and workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_closed_chunk, chunks))
    else:
        parts = [_closed_chunk(c) for c in chunks]
    values = np.concatenate(parts).reshape(grid.n_im, grid.n_re)
    return WignerGrid(spec=grid, values=values)


def _displacement_overlaps(alpha_flat: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """<s|D(-alpha)|v_j> for every point, Fock index s and column of vectors.

    Matrix elements follow the closed displaced-number formula, with
    magnitudes assembled in log space (scipy gammaln) so no intermediate
    over- or underflows, and scipy's Laguerre evaluator for the polynomial
    part.  Returns shape (B, dim, n_vec).
    """
    dim = vectors.shape[0]
    rows = np.arange(dim)[:, None]      # s
    cols = np.arange(dim)[None, :]      # n
    smin = np.minimum(rows, cols)
    dabs = np.abs(rows - cols)
    x = np.abs(alpha_flat) ** 2
    lag = eval_genlaguerre(smin[None, :, :], dabs[None, :, :], x[:, None, None])
    log_ratio = 0.5 * (gammaln(smin + 1) - gammaln(np.maximum(rows, cols) + 1))
    absa = np.abs(alpha_flat)
    log_absa = np.log(np.where(absa > 0, absa, 1.0))
    log_mag = (dabs[None, :, :] * log_absa[:, None, None]
               + log_ratio[None, :, :] - x[:, None, None] / 2)
    zero_alpha = (absa == 0)[:, None, None] & (dabs > 0)[None, :, :]
    mag = np.where(zero_alpha, 0.0, np.exp(log_mag))
    ang = np.angle(alpha_flat)
    # s > n rows carry (-alpha)^(s-n), s < n columns conj(alpha)^(n-s)
    arg = np.where(rows > cols, ang + math.pi, -ang[:, None, None] / np.where(True, 1, 1))
    arg = np.where((rows > cols)[None, :, :],
                   (ang + math.pi)[:, None, None],
                   -ang[:, None, None])
    d_elements = mag * lag * np.exp(1j * dabs[None, :, :] * arg)
    return np.matmul(d_elements, vectors)


def _oracle_chunk(args) -> np.ndarray:
    alpha_flat, vectors = args
    overlaps = _displacement_overlaps(alpha_flat, vectors)
    signs = np.where(np.arange(vectors.shape[0]) % 2 == 0, 1.0, -1.0)
    return np.einsum("bsj,s->b", np.abs(overlaps) ** 2, signs) / math.pi


def wigner_oracle(rho: np.ndarray, grid: GridSpec,
                  workers: int | None = None) -> WignerGrid:
    """Displaced-parity Wigner transform of an explicit field density matrix.

    Independent of the closed-form path: the density is eigendecomposed and
    each grid point displaces the eigenvector columns with matrix elements
    built from scipy special functions.  Warns when the displaced support
    approaches the Fock cutoff.
    """
    rho = check_field_density(rho)
    dim = rho.shape[0]
    mean_n = float(np.real(np.sum(np.arange(dim) * np.diag(rho))))
    alpha = grid.alpha_grid().ravel()
    reach = float(np.max(np.abs(alpha) ** 2)) + mean_n
    if reach > 0.8 * (dim - 1):
        warnings.warn(TruncationWarning(
            f"displaced support ~{reach:.1f} is within 20% of the cutoff {dim - 1}; "
            "Wigner values near the window edge may be truncated",
            tail_mass=reach / (dim - 1),
        ))
    vals, vecs = np.linalg.eigh(rho)
    keep = vals > 1e-14
    vectors = vecs[:, keep] * np.sqrt(vals[keep])[None, :]
    step = _batches(alpha.size, dim)
    chunks = [(alpha[i:i + step], vectors) for i in range(0, alpha.size, step)]
    if workers and workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_oracle_chunk, chunks))
    else:
        parts = [_oracle_chunk(c) for c in chunks]
    values = np.concatenate(parts).reshape(grid.n_im, grid.n_re)
    return WignerGrid(spec=grid, values=values)


def _bilinear(grid: WignerGrid, re: np.ndarray, im: np.ndarray) -> np.ndarray:
    s = grid.spec
    fx = (re - s.re_min) / (s.re_max - s.re_min) * (s.n_re - 1)
    fy = (im - s.im_min) / (s.im_max - s.im_min) * (s.n_im - 1)
    fx = np.clip(fx, 0, s.n_re - 1)
    fy = np.clip(fy, 0, s.n_im - 1)
    x0 = np.clip(np.floor(fx).astype(int), 0, s.n_re - 2)
    y0 = np.clip(np.floor(fy).astype(int), 0, s.n_im - 2)
    tx, ty = fx - x0, fy - y0
    v = grid.values
    return ((1 - ty) * ((1 - tx) * v[y0, x0] + tx * v[y0, x0 + 1])
            + ty * ((1 - tx) * v[y0 + 1, x0] + tx * v[y0 + 1, x0 + 1]))


def count_lobes(grid: WignerGrid, radius: float, threshold: float = 0.5,
                samples: int = 720) -> int:
    """Count contiguous above-threshold arcs on the circle |alpha| = radius.

    The circle is sampled with bilinear interpolation; an arc counts when the
    value exceeds threshold times the circle maximum.  The wrap-around at the
    angular seam is handled, so a lobe straddling angle zero is counted once.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    theta = np.linspace(0, 2 * math.pi, samples, endpoint=False)
    ring = _bilinear(grid, radius * np.cos(theta), radius * np.sin(theta))
    peak = float(np.max(ring))
    if peak <= 0:
        return 0
    above = ring > threshold * peak
    if not np.any(above):
        return 0
    if np.all(above):
        return 1
    # rotate so the scan starts off-lobe, then count rising edges
    start = int(np.argmin(above))
    rolled = np.roll(above, -start)
    return int(np.sum(rolled[1:] & ~rolled[:-1]) + (1 if rolled[0] else 0))
