"""Joint qubit-field operators on the truncated space.

All joint matrices are dense complex arrays of dimension 2(N+1) x 2(N+1)
ordered as the excited-qubit block followed by the ground-qubit block, each
with Fock index ascending.  Diagonal-function hooks let the rotating
Hamiltonian carry arbitrary Stark-type (F), Kerr-type (G) and
intensity-coupling (f) profiles; the closed-form propagator path only covers
the default family F = 0, G = chi n^2, f = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fock import sqrt_factorial_ratio_array

DiagonalFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters, all in units of the cavity frequency.

    delta  qubit-cavity detuning
    g      coupling strength (>= 0)
    chi    Kerr strength (enters the default G(n) = chi n^2)
    k      photon order of the exchange term (positive integer)

    F_spec/G_spec/f_spec override the diagonal functions; when given they
    replace the defaults F(n) = 0, G(n) = chi n^2, f(n) = 1 entirely.
    """

    delta: float
    g: float
    chi: float = 0.0
    k: int = 1
    F_spec: Optional[DiagonalFn] = None
    G_spec: Optional[DiagonalFn] = None
    f_spec: Optional[DiagonalFn] = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"photon order k must be a positive integer, got {self.k}")
        if self.g < 0:
            raise ValueError(f"coupling g must be non-negative, got {self.g}")

    @property
    def has_custom_specs(self) -> bool:
        return any(s is not None for s in (self.F_spec, self.G_spec, self.f_spec))

    def F(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.F_spec is None:
            return np.zeros_like(n)
        return np.asarray(self.F_spec(n), dtype=float)

    def G(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.G_spec is None:
            return self.chi * n**2
        return np.asarray(self.G_spec(n), dtype=float)

    def f(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.f_spec is None:
            return np.ones_like(n)
        return np.asarray(self.f_spec(n), dtype=float)


def _check_dim(params: ModelParams, n_max: int):
    if n_max + 1 < 2 * params.k + 2:
        raise ValueError(
            f"Fock dimension {n_max + 1} too small for k={params.k}; "
            f"need at least {2 * params.k + 2}"
        )


def lower_k_matrix(k: int, n_max: int) -> np.ndarray:
    """Dense a^k on the truncated space: entries sqrt((n+k)!/n!) at (n, n+k)."""
    dim = n_max + 1
    m = np.zeros((dim, dim), dtype=complex)
    src = np.arange(dim - k)
    m[src, src + k] = sqrt_factorial_ratio_array(src, k)
    return m


def raise_k_matrix(k: int, n_max: int) -> np.ndarray:
    """Dense (a^dagger)^k, the conjugate transpose of :func:`lower_k_matrix`."""
    return lower_k_matrix(k, n_max).conj().T


def assemble_joint(ee: np.ndarray, eg: np.ndarray, ge: np.ndarray,
                   gg: np.ndarray) -> np.ndarray:
    """Stack four Fock-space blocks into the joint (e-block first) matrix."""
    return np.block([[ee, eg], [ge, gg]])


def joint_blocks(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split a joint matrix back into (ee, eg, ge, gg) Fock blocks."""
    dim = m.shape[0] // 2
    return m[:dim, :dim], m[:dim, dim:], m[dim:, :dim], m[dim:, dim:]


def build_H0(params: ModelParams, n_max: int) -> np.ndarray:
    """Rotating Hamiltonian: k-photon exchange that conserves n + k sigma_z/2.

    e-diagonal delta/2 + G(n) + F(n), g-diagonal -delta/2 + G(n) - F(n);
    the e<->g coupling is g a^k f(n) on the sigma_+ side.
    """
    _check_dim(params, n_max)
    n = np.arange(n_max + 1, dtype=float)
    ee = np.diag(params.delta / 2 + params.G(n) + params.F(n)).astype(complex)
    gg = np.diag(-params.delta / 2 + params.G(n) - params.F(n)).astype(complex)
    fdiag = np.diag(params.f(n)).astype(complex)
    eg = params.g * lower_k_matrix(params.k, n_max) @ fdiag
    ge = params.g * fdiag @ raise_k_matrix(params.k, n_max)
    return assemble_joint(ee, eg, ge, gg)


def build_H0_shifted_kerr(params: ModelParams, n_max: int) -> np.ndarray:
    """Rotating Kerr Hamiltonian with the branch-shifted self-interaction.

    The Kerr diagonal is evaluated at n + k on the excited branch and n - k on
    the ground branch, which is exactly the arrangement whose SUSY partner is
    the plain-diagonal counter-rotating Hamiltonian of :func:`build_H`.  This
    is the family covered by the closed-form propagator.
    """
    _check_dim(params, n_max)
    if params.has_custom_specs:
        raise ValueError("shifted-Kerr form is defined for the default G(n) = chi n^2 only")
    k = params.k
    n = np.arange(n_max + 1, dtype=float)
    ee = np.diag(params.delta / 2 + params.chi * (n + k) ** 2).astype(complex)
    gg = np.diag(-params.delta / 2 + params.chi * (n - k) ** 2).astype(complex)
    eg = params.g * lower_k_matrix(k, n_max)
    ge = params.g * raise_k_matrix(k, n_max)
    return assemble_joint(ee, eg, ge, gg)


def build_H(params: ModelParams, n_max: int) -> np.ndarray:
    """Counter-rotating Hamiltonian: excitation transfer creates k photons.

    With default diagonal specs this is the Kerr/multiphoton family
    delta/2 sigma_z + chi n^2 + g[a^k sigma_- + (a^dagger)^k sigma_+].
    With explicit specs the diagonals carry the partner shifts
    G(n-k) + F(n-k) (excited) and G(n+k) - F(n+k) (ground).
    """
    _check_dim(params, n_max)
    k = params.k
    n = np.arange(n_max + 1, dtype=float)
    if params.has_custom_specs:
        ediag = params.delta / 2 + params.G(n - k) + params.F(n - k)
        gdiag = -params.delta / 2 + params.G(n + k) - params.F(n + k)
    else:
        ediag = params.delta / 2 + params.chi * n**2
        gdiag = -params.delta / 2 + params.chi * n**2
    ee = np.diag(ediag).astype(complex)
    gg = np.diag(gdiag).astype(complex)
    fdiag = np.diag(params.f(n)).astype(complex)
    eg = params.g * fdiag @ raise_k_matrix(k, n_max)
    ge = params.g * lower_k_matrix(k, n_max) @ fdiag
    return assemble_joint(ee, eg, ge, gg)


def build_Bk(k: int, n_max: int) -> np.ndarray:
    """Block-diagonal SUSY operator: (a^dagger)^k on e, a^k on g."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    zero = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    return assemble_joint(raise_k_matrix(k, n_max), zero, zero, lower_k_matrix(k, n_max))


def hermiticity_residual(m: np.ndarray) -> float:
    """Largest entry magnitude of M - M^dagger."""
    return float(np.max(np.abs(m - m.conj().T)))


def _interior_indices(n_max: int, upto: int) -> np.ndarray:
    keep = np.arange(upto + 1)
    return np.concatenate([keep, keep + n_max + 1])


def intertwining_residual(params: ModelParams, n_max: int, guard: int) -> float:
    """Max-entry residual of Bk H0_shifted - H Bk on the guarded interior.

    Rows and columns with Fock index above n_max - guard - k are excluded:
    raising past the cutoff makes the identity meaningless there.  guard must
    be at least k.
    """
    k = params.k
    if guard < k:
        raise ValueError(f"guard must be >= k ({k}), got {guard}")
    top = n_max - guard - k
    if top < 0:
        raise ValueError(f"guard {guard} leaves no interior at n_max={n_max}")
    bk = build_Bk(k, n_max)
    h0 = build_H0_shifted_kerr(params, n_max)
    h = build_H(params, n_max)
    resid = bk @ h0 - h @ bk
    idx = _interior_indices(n_max, top)
    return float(np.max(np.abs(resid[np.ix_(idx, idx)])))


def constant_of_motion(which: str, k: int, n_max: int) -> np.ndarray:
    """Diagonal conserved operator: n + k sigma_z/2 ("C0") or n - k sigma_z/2 ("C").

    "C0" commutes with the rotating Hamiltonians, "C" with the
    counter-rotating one.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    n = np.arange(n_max + 1, dtype=float)
    if which == "C0":
        ed, gd = n + k / 2, n - k / 2
    elif which == "C":
        ed, gd = n - k / 2, n + k / 2
    else:
        raise ValueError(f'which must be "C0" or "C", got {which!r}')
    zero = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    return assemble_joint(np.diag(ed).astype(complex), zero, zero,
                          np.diag(gd).astype(complex))


def commutator_interior_residual(a: np.ndarray, b: np.ndarray, n_max: int,
                                 guard: int) -> float:
    """Max-entry magnitude of [A, B] away from the top `guard` Fock levels."""
    comm = a @ b - b @ a
    top = n_max - guard
    if top < 0:
        raise ValueError("guard leaves no interior")
    idx = _interior_indices(n_max, top)
    return float(np.max(np.abs(comm[np.ix_(idx, idx)])))
