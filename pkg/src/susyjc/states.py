"""Joint qubit-field states and the maps between the two partner systems.

A state is a pair of Fock amplitude vectors (excited branch, ground branch)
sharing one cutoff.  Every mapping returns a fresh state carrying an
:class:`OpRecord` so truncation effects (leaked or dropped mass) stay
observable instead of silently vanishing.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .fock import (apply_lower_k, apply_raise_k, coherent_amplitudes,
                   number_basis, sqrt_factorial_ratio_array)


@dataclass(frozen=True)
class OpRecord:
    """Side channel attached to state-producing operations.

    leakage       squared mass pushed past the Fock cutoff by raising
    dropped_mass  squared mass removed by a domain restriction
    norm          Euclidean norm of the produced state
    """

    leakage: float = 0.0
    dropped_mass: float = 0.0
    norm: float = 1.0


@dataclass(frozen=True)
class QubitFieldState:
    """Two complex Fock amplitude vectors: excited and ground qubit branches."""

    e: np.ndarray
    g: np.ndarray
    record: OpRecord = field(default=OpRecord(), compare=False)

    def __post_init__(self):
        e = np.asarray(self.e, dtype=complex)
        g = np.asarray(self.g, dtype=complex)
        if e.shape != g.shape or e.ndim != 1:
            raise ValueError("branch vectors must be 1-d and share one cutoff")
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(g))):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "g", g)

    @property
    def n_max(self) -> int:
        return self.e.shape[0] - 1

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.e) ** 2 + np.abs(self.g) ** 2)))

    def joint(self) -> np.ndarray:
        """Flat 2(N+1) vector, excited block first."""
        return np.concatenate([self.e, self.g])

    @classmethod
    def from_joint(cls, v: np.ndarray, record: OpRecord | None = None) -> "QubitFieldState":
        v = np.asarray(v, dtype=complex)
        dim = v.shape[0] // 2
        rec = record if record is not None else OpRecord(norm=float(np.linalg.norm(v)))
        return cls(v[:dim], v[dim:], rec)

    def schmidt_coefficients(self) -> np.ndarray:
        """Singular values of the 2 x (N+1) amplitude matrix, descending."""
        return np.linalg.svd(np.vstack([self.e, self.g]), compute_uv=False)

    def scaled(self, factor: complex) -> "QubitFieldState":
        out = QubitFieldState(self.e * factor, self.g * factor)
        return replace(out, record=replace(self.record, norm=out.norm()))


@dataclass(frozen=True)
class InitialCondition:
    """Weighted two-branch decomposition alpha_e |e>|c> + alpha_g |g>|d>.

    c and d are unit-norm field vectors; the branch weights stay explicit
    because the closed-form observable, Wigner and fidelity series need them
    separately from the assembled state.
    """

    alpha_e: complex
    alpha_g: complex
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex)
        d = np.asarray(self.d, dtype=complex)
        if c.shape != d.shape or c.ndim != 1:
            raise ValueError("field vectors must be 1-d and share one cutoff")
        weight = abs(self.alpha_e) ** 2 + abs(self.alpha_g) ** 2
        if weight == 0:
            raise ValueError("at least one branch weight must be nonzero")
        for name, v in (("c", c), ("d", d)):
            nrm = float(np.linalg.norm(v))
            if abs(nrm - 1.0) > 1e-8:
                raise ValueError(f"field vector {name} must be unit norm, got {nrm}")
        object.__setattr__(self, "alpha_e", complex(self.alpha_e))
        object.__setattr__(self, "alpha_g", complex(self.alpha_g))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def n_max(self) -> int:
        return self.c.shape[0] - 1

    @property
    def weight_norm(self) -> float:
        return math.sqrt(abs(self.alpha_e) ** 2 + abs(self.alpha_g) ** 2)

    def state(self) -> QubitFieldState:
        return build_initial(self.alpha_e, self.alpha_g, self.c, self.d)

    def is_separable(self) -> bool:
        """True when the joint state factorizes: a single branch, or c = d."""
        if self.alpha_e == 0 or self.alpha_g == 0:
            return True
        return bool(np.allclose(self.c, self.d, atol=1e-10, rtol=0.0))

    def field_vector(self) -> np.ndarray:
        """The common field vector of a separable condition."""
        if self.alpha_e == 0:
            return self.d
        if self.alpha_g == 0:
            return self.c
        if not self.is_separable():
            raise ValueError("initial condition is not separable; no single field vector")
        return self.c


def build_initial(alpha_e: complex, alpha_g: complex, c: np.ndarray,
                  d: np.ndarray) -> QubitFieldState:
    """Assemble the normalized joint state from branch weights and unit vectors."""
    cond = InitialCondition(alpha_e, alpha_g, c, d)
    scale = 1.0 / cond.weight_norm
    state = QubitFieldState(cond.alpha_e * scale * cond.c,
                            cond.alpha_g * scale * cond.d)
    return replace(state, record=OpRecord(norm=state.norm()))


def susy_map(state: QubitFieldState, k: int) -> QubitFieldState:
    """Apply the block ladder map: (a^dagger)^k on e, a^k on g.

    The output is intentionally not renormalized; raising leakage past the
    cutoff is recorded on the result.
    """
    e_out, leaked = apply_raise_k(state.e, k)
    g_out, _ = apply_lower_k(state.g, k)
    out = QubitFieldState(e_out, g_out)
    return replace(out, record=OpRecord(leakage=leaked, norm=out.norm()))


def rotating_preimage(state: QubitFieldState, k: int) -> QubitFieldState:
    """Invert :func:`susy_map` where possible.

    e-branch components with n < k have no preimage under k-fold raising;
    they are zeroed and their squared mass reported as dropped_mass.  On the
    admissible support, susy_map(rotating_preimage(s, k), k) returns s
    exactly.  Raising the g-branch can push its top k components past the
    cutoff; that mass is recorded as leakage.
    """
    n_max = state.n_max
    dropped = float(np.sum(np.abs(state.e[:k]) ** 2))
    e_out = np.zeros_like(state.e)
    src = np.arange(k, n_max + 1)
    e_out[:n_max + 1 - k] = state.e[src] / sqrt_factorial_ratio_array(src - k, k)
    g_out = np.zeros_like(state.g)
    dst = np.arange(k, n_max + 1)
    g_out[dst] = state.g[dst - k] / sqrt_factorial_ratio_array(dst - k, k)
    leaked = float(np.sum(np.abs(state.g[n_max + 1 - k:]) ** 2))
    out = QubitFieldState(e_out, g_out)
    return replace(out, record=OpRecord(leakage=leaked, dropped_mass=dropped,
                                        norm=out.norm()))


_INITIAL_RE = re.compile(r"^\s*([a-z-]+)\s*\(\s*([^)]*)\s*\)\s*$")


def _parse_number(text: str) -> complex:
    try:
        return complex(text.strip())
    except ValueError as exc:
        raise ValueError(f"cannot parse number {text.strip()!r}") from exc


def parse_initial(spec: str, n_max: int, k: int = 1,
                  tail_tol: float = 1e-12) -> InitialCondition:
    """Build an initial condition from its textual form.

    Grammar:
        excited-coherent(gamma)
        ground-coherent(gamma)
        superposition(alpha_e, alpha_g, gamma_e, gamma_g)
        fock(branch, n)          branch in {e, g}

    Numbers may be complex in Python syntax (e.g. ``1+0.5j``).
    """
    m = _INITIAL_RE.match(spec)
    if not m:
        raise ValueError(f"malformed initial-state spec {spec!r}")
    name, raw_args = m.group(1), m.group(2)
    args = [a for a in (p.strip() for p in raw_args.split(",")) if a]
    if name == "excited-coherent":
        if len(args) != 1:
            raise ValueError("excited-coherent takes exactly one argument")
        c = coherent_amplitudes(_parse_number(args[0]), n_max, k=k, tail_tol=tail_tol)
        return InitialCondition(1.0, 0.0, c, c)
    if name == "ground-coherent":
        if len(args) != 1:
            raise ValueError("ground-coherent takes exactly one argument")
        d = coherent_amplitudes(_parse_number(args[0]), n_max, k=k, tail_tol=tail_tol)
        return InitialCondition(0.0, 1.0, d, d)
    if name == "superposition":
        if len(args) != 4:
            raise ValueError("superposition takes alpha_e, alpha_g, gamma_e, gamma_g")
        ae, ag = _parse_number(args[0]), _parse_number(args[1])
        c = coherent_amplitudes(_parse_number(args[2]), n_max, k=k, tail_tol=tail_tol)
        d = coherent_amplitudes(_parse_number(args[3]), n_max, k=k, tail_tol=tail_tol)
        return InitialCondition(ae, ag, c, d)
    if name == "fock":
        if len(args) != 2 or args[0] not in ("e", "g"):
            raise ValueError("fock takes (branch, n) with branch in {e, g}")
        v = number_basis(int(args[1]), n_max)
        if args[0] == "e":
            return InitialCondition(1.0, 0.0, v, v)
        return InitialCondition(0.0, 1.0, v, v)
    raise ValueError(f"unknown initial-state form {name!r}")
