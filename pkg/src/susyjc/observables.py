"""Expectation values of qubit-diagonal operators, in closed form.

For operators diag(p(n), q(n)) in the qubit basis the time dependence enters
only through the propagator scalars, so a full time series costs O(N) per
point without ever materializing the evolved state.  Direct evaluation on a
propagated state is provided alongside as the cross-check route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import ModelParams
from .propagator import scalar_tables
from .fock import sqrt_factorial_ratio_array
from .states import InitialCondition, QubitFieldState

#: mean photon numbers below this make Mandel Q undefined (vacuum field)
MEAN_PHOTON_FLOOR = 1e-9


@dataclass(frozen=True)
class DiagonalObservable:
    """Qubit-diagonal operator diag(p(n), q(n)); p, q map index arrays to reals."""

    p: Callable[[np.ndarray], np.ndarray]
    q: Callable[[np.ndarray], np.ndarray]


def sigma_z() -> DiagonalObservable:
    return DiagonalObservable(p=lambda n: np.ones_like(n),
                              q=lambda n: -np.ones_like(n))


def number_power(j: int) -> DiagonalObservable:
    if j < 1:
        raise ValueError(f"power must be >= 1, got {j}")
    return DiagonalObservable(p=lambda n: n**j, q=lambda n: n**j)


def expect_diagonal_closed(init: InitialCondition, params: ModelParams, t: float,
                           obs: DiagonalObservable) -> float:
    """Closed-form <diag(p, q)> at time t under the counter-rotating evolution.

    The series runs over the state cutoff; amplitudes beyond it are zero by
    construction, so the truncation error is controlled entirely by the
    initial tail mass.
    """
    k = params.k
    n_max = init.n_max
    tab = scalar_tables(params, t, n_max)
    n = np.arange(n_max + k + 1, dtype=float)
    p_ext = np.asarray(obs.p(n), dtype=float)
    q_ext = np.asarray(obs.q(n), dtype=float)
    p_n, q_n = p_ext[:n_max + 1], q_ext[:n_max + 1]
    p_up = p_ext[k:]

    cross_amp = np.real(-1j * sqrt_factorial_ratio_array(
        np.arange(n_max + 1), k) * tab.swap_plain)

    c, d = init.c, init.d
    c_up = np.zeros_like(c)
    c_up[:n_max + 1 - k] = c[k:]

    stay_minus2 = np.abs(tab.stay_minus) ** 2
    stay_plain2 = np.abs(tab.stay_plain) ** 2
    cross2 = cross_amp**2

    q_term = p_n * np.abs(c) ** 2 * stay_minus2 + q_n * np.abs(c_up) ** 2 * cross2
    r_term = q_n * np.abs(d) ** 2 * stay_plain2 + p_up * np.abs(d) ** 2 * cross2
    ae, ag = init.alpha_e, init.alpha_g
    t_term = cross_amp * (p_up - q_n) * np.imag(
        ae * np.conj(ag) * c_up * np.conj(d) * np.conj(tab.stay_plain))

    total = abs(ae) ** 2 * q_term.sum() + abs(ag) ** 2 * r_term.sum() + 2 * t_term.sum()
    return float(total / init.weight_norm**2)


def expect_diagonal_direct(state: QubitFieldState, obs: DiagonalObservable) -> float:
    """<diag(p, q)> evaluated directly on branch amplitudes."""
    n = np.arange(state.n_max + 1, dtype=float)
    return float(np.sum(np.asarray(obs.p(n), dtype=float) * np.abs(state.e) ** 2)
                 + np.sum(np.asarray(obs.q(n), dtype=float) * np.abs(state.g) ** 2))


def atomic_inversion(init: InitialCondition, params: ModelParams, t: float) -> float:
    """<sigma_z>(t) = P_excited - P_ground."""
    return expect_diagonal_closed(init, params, t, sigma_z())


def expect_n_power(init: InitialCondition, params: ModelParams, t: float,
                   j: int) -> float:
    """<n^j>(t) for j >= 1."""
    return expect_diagonal_closed(init, params, t, number_power(j))


def mandel_q(init: InitialCondition, params: ModelParams, t: float) -> float:
    """Mandel Q = (<n^2> - <n>^2)/<n> - 1; NaN when the field is vacuum-like."""
    mean = expect_n_power(init, params, t, 1)
    if mean < MEAN_PHOTON_FLOOR:
        return math.nan
    second = expect_n_power(init, params, t, 2)
    return (second - mean**2) / mean - 1.0


def c_expectation(init: InitialCondition, params: ModelParams, t: float) -> float:
    """<n - k sigma_z/2>(t), the conserved charge of the counter-rotating system."""
    return (expect_n_power(init, params, t, 1)
            - params.k / 2 * atomic_inversion(init, params, t))


def first_local_min(times: np.ndarray, values: np.ndarray) -> Optional[tuple[float, float]]:
    """Earliest interior sample strictly below both neighbors, or None.

    Ties are broken toward earlier times by construction (first match wins).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be matching 1-d arrays")
    if times.shape[0] < 3:
        raise ValueError("need at least 3 samples")
    interior = np.flatnonzero((values[1:-1] < values[:-2]) & (values[1:-1] < values[2:]))
    if interior.size == 0:
        return None
    i = int(interior[0]) + 1
    return float(times[i]), float(values[i])
