"""Truncated Fock-space primitives.

Everything here works on plain numpy arrays of complex amplitudes indexed by
photon number n = 0..N.  Factorial-like quantities are evaluated as running
products (of square roots where possible) so that cutoffs of a few hundred
stay well inside double-precision range; no gamma-function calls are made.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class TruncationWarning(UserWarning):
    """Amplitude mass near the Fock cutoff is not negligible.

    Carries the offending mass in ``tail_mass`` so callers can react
    programmatically instead of parsing the message.
    """

    def __init__(self, message: str, tail_mass: float):
        super().__init__(message)
        self.tail_mass = tail_mass


def factorial_ratio(n: int, k: int) -> float:
    """(n+k)!/n! as the running product (n+1)(n+2)...(n+k).

    Exact for integers as long as the value is representable; raises
    OverflowError instead of returning inf.
    """
    if n < 0 or k < 1:
        raise ValueError(f"need n >= 0 and k >= 1, got n={n}, k={k}")
    out = 1.0
    for j in range(1, k + 1):
        out *= n + j
    if math.isinf(out):
        raise OverflowError(f"(n+k)!/n! overflows for n={n}, k={k}")
    return out


def sqrt_factorial_ratio(n: int, k: int) -> float:
    """sqrt((n+k)!/n!) as a product of square roots, extending dynamic range."""
    if n < 0 or k < 1:
        raise ValueError(f"need n >= 0 and k >= 1, got n={n}, k={k}")
    out = 1.0
    for j in range(1, k + 1):
        out *= math.sqrt(n + j)
    if math.isinf(out):
        raise OverflowError(f"sqrt((n+k)!/n!) overflows for n={n}, k={k}")
    return out


def factorial_ratio_array(n, k: int) -> np.ndarray:
    """(n+k)!/n! elementwise over an integer array n."""
    n = np.asarray(n, dtype=float)
    out = np.ones_like(n)
    for j in range(1, k + 1):
        out = out * (n + j)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"(n+k)!/n! overflows somewhere in array for k={k}")
    return out


def sqrt_factorial_ratio_array(n, k: int) -> np.ndarray:
    """sqrt((n+k)!/n!) elementwise over an integer array n."""
    n = np.asarray(n, dtype=float)
    out = np.ones_like(n)
    for j in range(1, k + 1):
        out = out * np.sqrt(n + j)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"sqrt((n+k)!/n!) overflows somewhere in array for k={k}")
    return out


def assoc_laguerre(s: int, a: int, x: float) -> float:
    """Associated Laguerre polynomial L_s^a(x) by the three-term recurrence in s.

    Parameters
    ----------
    s : int
        Degree, s >= 0.
    a : int
        Superscript.  Values a < -s are rejected; callers needing that range
        must go through the symmetry of :func:`displacement_kernel`.
    x : float
        Argument, x >= 0.
    """
    if s < 0:
        raise ValueError(f"degree must be non-negative, got s={s}")
    if a < -s:
        raise ValueError(
            f"superscript a={a} < -s={-s} is outside the supported range; "
            "use the displacement-kernel symmetry instead"
        )
    if x < 0:
        raise ValueError(f"argument must be non-negative, got x={x}")
    if s == 0:
        return 1.0
    prev = 1.0
    cur = 1.0 + a - x
    for m in range(1, s):
        prev, cur = cur, ((2 * m + 1 + a - x) * cur - (m + a) * prev) / (m + 1)
    return cur


def laguerre_table(x, dim: int) -> np.ndarray:
    """L_s^d(x) for all 0 <= s, d < dim, batched over the points in x.

    Returns an array of shape (len(x), dim, dim) indexed [point, s, d].
    The recurrence runs over s with the whole d-axis vectorized.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = np.arange(dim, dtype=float)[None, :]
    xc = x[:, None]
    table = np.empty((x.shape[0], dim, dim))
    table[:, 0, :] = 1.0
    if dim > 1:
        table[:, 1, :] = 1.0 + d - xc
    for s in range(1, dim - 1):
        table[:, s + 1, :] = (
            (2 * s + 1 + d - xc) * table[:, s, :] - (s + d) * table[:, s - 1, :]
        ) / (s + 1)
    return table


def displacement_kernel(alpha: complex, n: int, s: int) -> complex:
    """Overlap kernel conj(alpha)^(n-s) sqrt(s!/n!) L_s^(n-s)(|alpha|^2).

    Equals exp(+|alpha|^2/2) <s|D(-alpha)|n> with D the Glauber displacement
    operator.  For n < s the value is obtained from the symmetry
    kernel(alpha, n, s) = conj(kernel(-alpha, s, n)), which keeps the
    Laguerre superscript non-negative.  The power of conj(alpha) and the
    factorial ratio are accumulated in one fused product so neither factor
    overflows on its own.
    """
    if n < 0 or s < 0:
        raise ValueError(f"Fock indices must be non-negative, got n={n}, s={s}")
    if n < s:
        return complex(np.conj(displacement_kernel(-alpha, s, n)))
    ac = np.conj(complex(alpha))
    acc = 1.0 + 0.0j
    for j in range(1, n - s + 1):
        acc *= ac / math.sqrt(s + j)
    return acc * assoc_laguerre(s, n - s, abs(alpha) ** 2)


def displacement_kernel_table(alpha, dim: int) -> np.ndarray:
    """Batched kernel table K[point, n, s] for all Fock index pairs below dim.

    Same values as :func:`displacement_kernel`, laid out for the grid sums of
    the Wigner series: one (dim, dim) table per phase-space point, computed
    with the fused power/ratio product and the s-recurrence Laguerre table so
    the whole batch is a handful of vectorized passes.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    npts = alpha.shape[0]
    lag = laguerre_table(np.abs(alpha) ** 2, dim)
    # fused[b, s, d] = conj(alpha_b)^d * sqrt(s!/(s+d)!), built along d
    fused = np.empty((npts, dim, dim), dtype=complex)
    fused[:, :, 0] = 1.0
    ac = np.conj(alpha)[:, None]
    s_idx = np.arange(dim, dtype=float)[None, :]
    for d in range(1, dim):
        fused[:, :, d] = fused[:, :, d - 1] * (ac / np.sqrt(s_idx + d))
    half = fused * lag  # kernel at (n, s) = (s+d, s)
    rows = np.arange(dim)[:, None]
    cols = np.arange(dim)[None, :]
    smin = np.minimum(rows, cols)
    dabs = np.abs(rows - cols)
    gathered = half[:, smin, dabs]
    upper = cols > rows  # n < s half, filled via the conjugation symmetry
    signed = np.where((dabs % 2 == 1) & upper, -1.0, 1.0)
    return np.where(upper, signed * np.conj(gathered), gathered)


def displacement_kernel_table_swapped(alpha, dim: int) -> np.ndarray:
    """Kernel table computed entirely through the conjugation symmetry.

    Builds the table at -alpha and conjugate-transposes the Fock axes.
    Mathematically identical to :func:`displacement_kernel_table`; exists so
    the two evaluation routes can be compared numerically.
    """
    table = displacement_kernel_table(-np.atleast_1d(np.asarray(alpha, dtype=complex)), dim)
    return np.conj(np.swapaxes(table, 1, 2))


def coherent_amplitudes(gamma: complex, n_max: int, k: int = 1,
                        tail_tol: float = 1e-12) -> np.ndarray:
    """Fock amplitudes exp(-|gamma|^2/2) gamma^n / sqrt(n!) for n = 0..n_max.

    Built by the running recurrence c_n = c_{n-1} gamma / sqrt(n), which never
    leaves the unit disc in magnitude.  (Some sources print gamma^n/n! for
    this state; that form does not normalize and is not used here.)

    Emits a :class:`TruncationWarning` when the mass above n_max - 2k exceeds
    tail_tol, since downstream k-photon ladder action pushes that mass past
    the cutoff.
    """
    if n_max < 1:
        raise ValueError(f"need n_max >= 1, got {n_max}")
    gamma = complex(gamma)
    c0 = math.exp(-abs(gamma) ** 2 / 2)
    steps = gamma / np.sqrt(np.arange(1, n_max + 1))
    amps = np.cumprod(np.concatenate([[c0 + 0j], steps]))
    guard = max(n_max - 2 * k, 0)
    tail = float(np.sum(np.abs(amps[guard + 1:]) ** 2))
    if tail > tail_tol:
        warnings.warn(TruncationWarning(
            f"coherent state |gamma|={abs(gamma):.4g} keeps {tail:.3e} of its "
            f"mass above n = {guard}; increase the cutoff (n_max={n_max})",
            tail_mass=tail,
        ))
    return amps


def number_basis(n: int, n_max: int) -> np.ndarray:
    """Amplitude vector of the number state |n> at cutoff n_max."""
    if not 0 <= n <= n_max:
        raise ValueError(f"need 0 <= n <= n_max, got n={n}, n_max={n_max}")
    v = np.zeros(n_max + 1, dtype=complex)
    v[n] = 1.0
    return v


def apply_raise_k(v: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Apply (a^dagger)^k: out[n+k] = sqrt((n+k)!/n!) v[n].

    Amplitudes raised past the cutoff are dropped; their squared mass is
    returned as the leakage side channel (second element).
    """
    v = np.asarray(v, dtype=complex)
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    n_max = v.shape[0] - 1
    out = np.zeros_like(v)
    keep = n_max - k + 1  # source indices 0..n_max-k survive
    if keep > 0:
        src = np.arange(keep)
        out[k:] = sqrt_factorial_ratio_array(src, k) * v[:keep]
    lost_src = np.arange(max(keep, 0), n_max + 1)
    leaked = float(np.sum(factorial_ratio_array(lost_src, k) * np.abs(v[lost_src]) ** 2))
    return out, leaked


def apply_lower_k(v: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Apply a^k: out[n] = sqrt((n+k)!/n!) v[n+k]; v[0..k-1] are annihilated.

    Lowering cannot push mass past the cutoff, so the leakage entry is
    always 0.0 (kept for interface symmetry with :func:`apply_raise_k`).
    """
    v = np.asarray(v, dtype=complex)
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    n_max = v.shape[0] - 1
    out = np.zeros_like(v)
    keep = n_max - k + 1
    if keep > 0:
        dst = np.arange(keep)
        out[:keep] = sqrt_factorial_ratio_array(dst, k) * v[k:]
    return out, 0.0


@dataclass(frozen=True)
class GridSpec:
    """Rectangular sampling window in the complex phase-space plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int
    n_im: int

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("grid bounds must satisfy min < max on both axes")
        if self.n_re < 2 or self.n_im < 2:
            raise ValueError("need at least 2 samples per axis")

    def re_axis(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.n_re)

    def im_axis(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.n_im)

    def alpha_grid(self) -> np.ndarray:
        """Complex sample points, shape (n_im, n_re)."""
        return self.re_axis()[None, :] + 1j * self.im_axis()[:, None]

    def cell_area(self) -> float:
        dre = (self.re_max - self.re_min) / (self.n_re - 1)
        dim = (self.im_max - self.im_min) / (self.n_im - 1)
        return dre * dim
