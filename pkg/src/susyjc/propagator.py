"""Closed-form time evolution for the Kerr/multiphoton pair of Hamiltonians.

Both propagators factor into 2x2 blocks over Fock index, so evolving a state
costs O(N) per time point.  Three scalars per index drive everything:

    phase  unit-modulus Kerr phase  exp(-i chi t n(n+k))
    stay   amplitude to remain in the current qubit branch
    swap   amplitude weight of the k-photon branch exchange

Indices run from -k upward; negative indices only ever feed pure-phase
factors (their block partner lies outside the space) and use the reduced
frequency rule without the coupling term.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .fock import factorial_ratio, sqrt_factorial_ratio_array
from .model import ModelParams
from .states import OpRecord, QubitFieldState

#: below this |omega t| the sine ratio switches to its Taylor series
SIN_RATIO_CUTOFF = 1e-4


class PropagatorScalars(NamedTuple):
    phase: complex
    stay: complex
    swap: complex


def sin_ratio(omega, t: float):
    """sin(omega t)/omega with the removable singularity handled by series.

    For |omega t| < SIN_RATIO_CUTOFF the five-term Taylor expansion
    t (1 - z^2/6 + z^4/120 - z^6/5040 + z^8/362880), z = omega t, is used;
    the switchover is continuous far below double precision.
    """
    omega = np.asarray(omega, dtype=float)
    z = omega * t
    small = np.abs(z) < SIN_RATIO_CUTOFF
    z2 = z * z
    series = t * (1 - z2 / 6 * (1 - z2 / 20 * (1 - z2 / 42 * (1 - z2 / 72))))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.where(small, t, np.sin(z) / np.where(small, 1.0, omega))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def _require_closed_form(params: ModelParams):
    if params.has_custom_specs:
        raise ValueError(
            "closed-form propagation covers only the default diagonal family "
            "F = 0, G = chi n^2, f = 1; use the dense oracle for custom specs"
        )


def _half_splitting(m, params: ModelParams):
    """delta/2 + chi (m k + k^2/2): half the diagonal gap of the m-th block."""
    m = np.asarray(m, dtype=float)
    return params.delta / 2 + params.chi * (m * params.k + params.k**2 / 2)


def rabi_frequency(m: int, params: ModelParams) -> float:
    """Dressed oscillation frequency of the m-th invariant block.

    For m >= 0 this is sqrt(g^2 (m+k)!/m! + [delta/2 + chi(mk + k^2/2)]^2).
    For -k <= m < 0 the coupling term is absent and the (possibly negative)
    half-splitting itself is returned; downstream use is through the even
    combinations cos(omega t) and sin(omega t)/omega, so the sign never
    matters.
    """
    _require_closed_form(params)
    if m < -params.k:
        raise ValueError(f"index m={m} below -k={-params.k} never occurs")
    gap = float(_half_splitting(m, params))
    if m < 0:
        return gap
    return float(np.sqrt(params.g**2 * factorial_ratio(m, params.k) + gap**2))


def propagator_scalars(n: int, t: float, params: ModelParams) -> PropagatorScalars:
    """The (phase, stay, swap) triple at one Fock index and time."""
    _require_closed_form(params)
    k = params.k
    if n < -k:
        raise ValueError(f"index n={n} below -k={-k} never occurs")
    omega = rabi_frequency(n, params)
    gap = float(_half_splitting(n, params))
    ratio = sin_ratio(omega, t)
    phase = complex(np.exp(-1j * params.chi * t * n * (n + k)))
    stay = complex(np.cos(omega * t) + 1j * gap * ratio)
    swap = complex(-1j * params.g * ratio)
    return PropagatorScalars(phase, stay, swap)


@dataclass(frozen=True)
class ScalarTables:
    """Vectorized (phase, stay, swap) over block index m = -k..n_max.

    Arrays are addressed at position m + k.  ``minus`` views give the
    m = n - k entries for n = 0..n_max, ``plain`` views the m = n entries.
    """

    k: int
    phase: np.ndarray
    stay: np.ndarray
    swap: np.ndarray

    @property
    def phase_minus(self) -> np.ndarray:
        return self.phase[:-self.k]

    @property
    def stay_minus(self) -> np.ndarray:
        return self.stay[:-self.k]

    @property
    def swap_minus(self) -> np.ndarray:
        return self.swap[:-self.k]

    @property
    def phase_plain(self) -> np.ndarray:
        return self.phase[self.k:]

    @property
    def stay_plain(self) -> np.ndarray:
        return self.stay[self.k:]

    @property
    def swap_plain(self) -> np.ndarray:
        return self.swap[self.k:]


def scalar_tables(params: ModelParams, t: float, n_max: int) -> ScalarTables:
    """Evaluate the propagator scalars for every block index at one time."""
    _require_closed_form(params)
    k = params.k
    m = np.arange(-k, n_max + 1, dtype=float)
    gap = _half_splitting(m, params)
    omega = np.where(
        m >= 0,
        np.sqrt(params.g**2 * factorial_ratio_array(np.maximum(m, 0), k) + gap**2),
        gap,
    )
    ratio = sin_ratio(omega, t)
    phase = np.exp(-1j * params.chi * t * m * (m + k))
    stay = np.cos(omega * t) + 1j * gap * ratio
    swap = -1j * params.g * ratio
    return ScalarTables(k=k, phase=phase, stay=stay, swap=swap)


@dataclass(frozen=True)
class BlockPropagator:
    """Assembled evolution weights at one time.

    diag_e[n], diag_g[n] multiply the branch amplitudes in place.  cross[n]
    is the weight of the n-th exchange block (already including the ladder
    matrix element); for the counter-rotating direction it couples
    g[n] -> e[n+k] and e[n+k] -> g[n], for the rotating direction
    g[n+k] -> e[n] and e[n] -> g[n+k].
    """

    diag_e: np.ndarray
    diag_g: np.ndarray
    cross: np.ndarray
    k: int
    counter: bool

    @property
    def n_max(self) -> int:
        return self.diag_e.shape[0] - 1

    def matrix(self) -> np.ndarray:
        """Dense joint matrix, for verification only."""
        dim = self.n_max + 1
        u = np.zeros((2 * dim, 2 * dim), dtype=complex)
        ne = np.arange(dim)
        u[ne, ne] = self.diag_e
        u[dim + ne, dim + ne] = self.diag_g
        src = np.arange(dim - self.k)
        if self.counter:
            u[src + self.k, dim + src] = self.cross[src]
            u[dim + src, src + self.k] = self.cross[src]
        else:
            u[src, dim + src + self.k] = self.cross[src]
            u[dim + src + self.k, src] = self.cross[src]
        return u


def block_weights(params: ModelParams, t: float, n_max: int,
                  counter: bool = True) -> BlockPropagator:
    """Build the four block weight vectors for one time point."""
    tab = scalar_tables(params, t, n_max)
    n = np.arange(n_max + 1)
    sqrt_ratio = sqrt_factorial_ratio_array(n, params.k)
    cross = sqrt_ratio * tab.phase_plain * tab.swap_plain
    if counter:
        diag_e = tab.phase_minus * np.conj(tab.stay_minus)
        diag_g = tab.phase_plain * tab.stay_plain
    else:
        diag_e = tab.phase_plain * np.conj(tab.stay_plain)
        diag_g = tab.phase_minus * tab.stay_minus
    return BlockPropagator(diag_e=diag_e, diag_g=diag_g, cross=cross,
                           k=params.k, counter=counter)


def _apply(state: QubitFieldState, bp: BlockPropagator) -> QubitFieldState:
    k, n_max = bp.k, state.n_max
    keep = n_max + 1 - k
    e_out = bp.diag_e * state.e
    g_out = bp.diag_g * state.g
    if bp.counter:
        e_out[k:] += bp.cross[:keep] * state.g[:keep]
        g_out[:keep] += bp.cross[:keep] * state.e[k:]
        leaked = float(np.sum(np.abs(bp.cross[keep:] * state.g[keep:]) ** 2))
    else:
        e_out[:keep] += bp.cross[:keep] * state.g[k:]
        g_out[k:] += bp.cross[:keep] * state.e[:keep]
        leaked = float(np.sum(np.abs(bp.cross[keep:] * state.e[keep:]) ** 2))
    out = QubitFieldState(e_out, g_out)
    return replace(out, record=OpRecord(leakage=leaked, norm=out.norm()))


def propagate_counter(state: QubitFieldState, t: float,
                      params: ModelParams) -> QubitFieldState:
    """Evolve under the counter-rotating Kerr/multiphoton Hamiltonian.

    Exact up to one global phase and the truncation of the top k ground-branch
    components (reported as leakage on the result).
    """
    return _apply(state, block_weights(params, t, state.n_max, counter=True))


def propagate_rotating(state: QubitFieldState, t: float,
                       params: ModelParams) -> QubitFieldState:
    """Evolve under the branch-shifted rotating Kerr Hamiltonian."""
    return _apply(state, block_weights(params, t, state.n_max, counter=False))
