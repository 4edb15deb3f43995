"""Independent ground-truth evolution by dense Hermitian eigendecomposition.

One decomposition per Hamiltonian is cached and reused across times and
states, so cross-checking a whole time grid costs one eigh plus a few
matrix-vector products per point.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .states import OpRecord, QubitFieldState

HERMITICITY_TOL = 1e-10


class EigenPropagator:
    """exp(-iHt) applied through H = V diag(w) V^dagger."""

    def __init__(self, h: np.ndarray):
        h = np.asarray(h, dtype=complex)
        residual = float(np.max(np.abs(h - h.conj().T)))
        scale = max(float(np.max(np.abs(h))), 1.0)
        if residual > HERMITICITY_TOL * scale:
            raise ValueError(f"matrix is not Hermitian (residual {residual:.3e})")
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(h)

    def evolve_vector(self, v: np.ndarray, t: float) -> np.ndarray:
        coeff = self.eigenvectors.conj().T @ v
        return self.eigenvectors @ (np.exp(-1j * self.eigenvalues * t) * coeff)

    def evolve(self, state: QubitFieldState, t: float) -> QubitFieldState:
        out = QubitFieldState.from_joint(self.evolve_vector(state.joint(), t))
        return QubitFieldState(out.e, out.g, OpRecord(norm=out.norm()))


_CACHE: dict[str, EigenPropagator] = {}
_CACHE_LIMIT = 16


def _propagator_for(h: np.ndarray) -> EigenPropagator:
    key = hashlib.sha1(np.ascontiguousarray(h).tobytes()).hexdigest()
    prop = _CACHE.get(key)
    if prop is None:
        prop = EigenPropagator(h)
        if len(_CACHE) >= _CACHE_LIMIT:
            _CACHE.pop(next(iter(_CACHE)))
        _CACHE[key] = prop
    return prop


def evolve_oracle(h: np.ndarray, state: QubitFieldState, t: float) -> QubitFieldState:
    """Evolve a joint state under any Hermitian joint matrix.

    Decompositions are cached by matrix content, so repeated calls for the
    same Hamiltonian at different times are cheap.
    """
    if h.shape[0] != 2 * (state.n_max + 1):
        raise ValueError(
            f"matrix dimension {h.shape[0]} does not match state cutoff {state.n_max}"
        )
    return _propagator_for(h).evolve(state, t)


def phase_align(a: QubitFieldState, b: QubitFieldState) -> tuple[QubitFieldState, float]:
    """Rotate b by one global phase to match a, then measure their distance.

    The phase is fixed at b's largest-magnitude amplitude: b is multiplied by
    the unit factor that makes that entry's phase equal a's at the same index.
    Returns the aligned copy of b and the max entrywise |a - b_aligned|.
    """
    av, bv = a.joint(), b.joint()
    idx = int(np.argmax(np.abs(bv)))
    if bv[idx] == 0:
        return b, float(np.max(np.abs(av - bv)))
    ref = av[idx]
    phase = (ref / abs(ref)) * (bv[idx] / abs(bv[idx])).conjugate() if ref != 0 else 1.0
    aligned = b.scaled(phase)
    residual = float(np.max(np.abs(av - aligned.joint())))
    return aligned, residual
