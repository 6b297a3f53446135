"""Pure-decoherence dynamics of the NV electron and its nuclear register.

The electron is the first tensor factor with basis order (|up>, |down>) =
(m_s=0, m_s=-1); nuclear spins follow in bath order. The coupling uses the
shifted operator S_z = |up><up|, so only the |up> branch of each nucleus
rotates while the |down> branch stays frozen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .bath import BathConfig, BathError
from .qmath import I2, SZ, DensityOperator, as_pure_state, kron_all

IZ = 0.5 * SZ
P_UP = np.diag([1.0, 0.0]).astype(complex)
# well inside the 1/(50 max|A|) stability bound; global error ~1e-9 over tens of us
RK4_STEPS_PER_PERIOD = 400


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class BranchedState:
    """Electron superposition with one product record per pointer branch.

    ``conditional_states[k]`` is the pair (|phi_k|up>, |phi_k|down>).
    ``polarizations`` are the P_k used when a density matrix is synthesized.
    """

    p_up: float
    p_down: float
    conditional_states: tuple[tuple[np.ndarray, np.ndarray], ...]
    electron_coherence: complex = 1.0
    polarizations: tuple[float, ...] | None = None

    def __post_init__(self):
        if abs(self.p_up + self.p_down - 1.0) > 1e-12 or min(self.p_up, self.p_down) < 0:
            raise ValueError(f"branch probabilities {self.p_up}, {self.p_down} do not sum to 1")
        pairs = tuple((as_pure_state(u), as_pure_state(d)) for u, d in self.conditional_states)
        object.__setattr__(self, "conditional_states", pairs)
        pol = self.polarizations
        pol = (1.0,) * len(pairs) if pol is None else tuple(float(p) for p in pol)
        if len(pol) != len(pairs):
            raise ValueError("one polarization per conditional pair is required")
        if any(not 0.0 < p <= 1.0 for p in pol):
            raise ValueError(f"polarizations must lie in (0, 1], got {pol}")
        object.__setattr__(self, "polarizations", pol)
        object.__setattr__(self, "electron_coherence", complex(self.electron_coherence))

    @property
    def n_spins(self) -> int:
        return len(self.conditional_states)

    @property
    def is_pure_record(self) -> bool:
        """True when every conditional nuclear state is pure (all P_k = 1)."""
        return all(p == 1.0 for p in self.polarizations)

    def overlaps(self) -> np.ndarray:
        """Per-spin <phi_k|down | phi_k|up>."""
        return np.array([np.vdot(d, u) for u, d in self.conditional_states])

    def with_polarizations(self, p) -> "BranchedState":
        ps = np.broadcast_to(np.asarray(p, dtype=float), (self.n_spins,))
        return replace(self, polarizations=tuple(ps))

    def subset(self, indices: Sequence[int]) -> "BranchedState":
        return replace(self,
                       conditional_states=tuple(self.conditional_states[i] for i in indices),
                       polarizations=tuple(self.polarizations[i] for i in indices))


def build_hamiltonian(bath: BathConfig) -> np.ndarray:
    """2pi |up><up| (x) sum_k A_k I_z^k in rad/s, electron factor first."""
    dim = bath.check_dimension()
    n = bath.n_spins
    nuc = np.zeros((dim // 2, dim // 2), dtype=complex)
    for k, spin in enumerate(bath.spins):
        ops = [I2] * n
        ops[k] = IZ
        nuc += spin.a_parallel * kron_all(*ops)
    return 2 * np.pi * np.kron(P_UP, nuc)


def initial_branched_state(bath: BathConfig) -> BranchedState:
    """Electron in |+>, every nucleus in its prepared state |phi_k>.

    The polarizations are carried along but not applied to the branch
    vectors; they only enter when a density matrix is synthesized.
    """
    pairs = tuple((s.initial_state.copy(), s.initial_state.copy()) for s in bath.spins)
    return BranchedState(0.5, 0.5, pairs, 1.0, tuple(bath.polarizations))


def _z_rotation(a_parallel: float, t: float) -> np.ndarray:
    phase = np.pi * a_parallel * t
    return np.array([np.exp(-1j * phase), np.exp(1j * phase)])


def evolve_branches(state: BranchedState, bath: BathConfig, t: float) -> BranchedState:
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")
    if state.n_spins != bath.n_spins:
        raise BathError(f"state has {state.n_spins} spins, bath has {bath.n_spins}")
    pairs = tuple((_z_rotation(s.a_parallel, t) * up, down)
                  for s, (up, down) in zip(bath.spins, state.conditional_states))
    coherence = state.electron_coherence * math.exp(-bath.electron_dephasing_rate * t)
    return replace(state, conditional_states=pairs, electron_coherence=coherence)


def polarization_correction(rho_k, p: float, correct: bool = True):
    """Rescale the off-diagonal of a single-spin density matrix by P_k.

    ``correct=True`` divides by ``p`` (normalizing measured data);
    ``correct=False`` multiplies by ``p`` (synthesizing imperfectly
    polarized data from ideal states). The two directions are inverses.
    """
    if p == 0:
        raise ValueError("polarization P_k = 0 cannot be corrected")
    if not 0 < p <= 1:
        raise ValueError(f"polarization must be in (0, 1], got {p}")
    wrapped = isinstance(rho_k, DensityOperator)
    m = np.array(rho_k.matrix if wrapped else rho_k, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 single-spin matrix, got {m.shape}")
    scale = 1.0 / p if correct else p
    m[0, 1] *= scale
    m[1, 0] *= scale
    return DensityOperator(m, (2,), check=False) if wrapped else m


def _block_factor(u: np.ndarray, v: np.ndarray, p: float) -> np.ndarray:
    m = np.outer(u, v.conj())
    if p != 1.0:
        m[0, 1] *= p
        m[1, 0] *= p
    return m


def conditional_density(state: BranchedState, k: int, branch: int) -> np.ndarray:
    """rho_{k|s} with polarization applied; branch 0 = up, 1 = down."""
    vec = state.conditional_states[k][branch]
    return _block_factor(vec, vec, state.polarizations[k])


def reduced_density_operator(state: BranchedState, fragment: Sequence[int],
                             include_system: bool = True) -> DensityOperator:
    """Joint state of the electron (optional) and a fragment of the bath.

    Tracing out the complement of the fragment multiplies the electron
    coherence block by the complement's overlap product; the diagonal
    blocks are untouched because every factor has unit trace.
    """
    fragment = list(fragment)
    rest = [k for k in range(state.n_spins) if k not in fragment]
    pol = state.polarizations
    pairs = state.conditional_states
    if fragment:
        up = kron_all(*[_block_factor(pairs[k][0], pairs[k][0], pol[k]) for k in fragment])
        down = kron_all(*[_block_factor(pairs[k][1], pairs[k][1], pol[k]) for k in fragment])
    else:
        up = down = np.ones((1, 1), dtype=complex)
    dims = tuple([2] * len(fragment))
    if not include_system:
        m = state.p_up * up + state.p_down * down
        return DensityOperator(m, dims or (1,), check=False)
    if fragment:
        cross = kron_all(*[_block_factor(pairs[k][0], pairs[k][1], pol[k]) for k in fragment])
    else:
        cross = np.ones((1, 1), dtype=complex)
    rest_overlap = np.prod([np.vdot(pairs[k][1], pairs[k][0]) for k in rest]) if rest else 1.0
    c = math.sqrt(state.p_up * state.p_down) * state.electron_coherence * rest_overlap
    m = np.block([[state.p_up * up, c * cross],
                  [np.conj(c) * cross.conj().T, state.p_down * down]])
    return DensityOperator(m, (2,) + dims, check=False)


def to_density_operator(state: BranchedState) -> DensityOperator:
    """Full electron + bath density matrix, polarizations applied."""
    if 2 ** (1 + state.n_spins) > 2**12:
        raise BathError(f"Hilbert space dimension 2^{1 + state.n_spins} exceeds 2^12")
    rho = reduced_density_operator(state, range(state.n_spins))
    return DensityOperator(rho.matrix, rho.dims)


def _dephasing_operator(dim: int) -> np.ndarray:
    return np.kron(SZ, np.eye(dim // 2))


def _lindblad_rhs(rho, H, L, rate):
    # rate/2 on sigma_z gives coherence decay exp(-rate t)
    g = 0.5 * rate
    return -1j * (H @ rho - rho @ H) + g * (L @ rho @ L - rho)


def evolve_lindblad(rho: DensityOperator, bath: BathConfig, t: float,
                    method: str = "exact", hamiltonian: np.ndarray | None = None,
                    max_step: float | None = None) -> DensityOperator:
    """Integrate the hyperfine Hamiltonian plus electron pure dephasing.

    The dissipator is (gamma/2) D[sigma_z^e], so electron coherences decay
    as exp(-gamma t), matching :func:`evolve_branches`.

    ``method="exact"`` uses the closed-form elementwise solution when the
    Hamiltonian is diagonal and a Liouvillian exponential otherwise (dims
    <= 64). ``method="rk4"`` runs a fixed-step fourth-order Runge-Kutta with
    step 1/(400 max(|A_par|, gamma)) unless ``max_step`` is smaller.
    """
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")
    H = build_hamiltonian(bath) if hamiltonian is None else np.asarray(hamiltonian, dtype=complex)
    if H.shape != rho.matrix.shape:
        raise BathError(f"Hamiltonian shape {H.shape} does not match state {rho.matrix.shape}")
    dim = H.shape[0]
    gamma = bath.electron_dephasing_rate
    L = _dephasing_operator(dim)
    r0 = rho.matrix

    if method == "exact":
        if np.count_nonzero(H - np.diag(np.diag(H))) == 0:
            e = np.diag(H).real
            l = np.diag(L).real
            gen = -1j * (e[:, None] - e[None, :]) - 0.25 * gamma * (l[:, None] - l[None, :]) ** 2
            out = r0 * np.exp(gen * t)
        else:
            if dim > 64:
                raise IntegrationError("Liouvillian exponential limited to dim <= 64")
            eye = np.eye(dim)
            g = 0.5 * gamma
            # row-major vec: vec(A X B) = (A kron B^T) vec(X)
            liou = (-1j * (np.kron(H, eye) - np.kron(eye, H.T))
                    + g * (np.kron(L, L.T) - np.kron(eye, eye)))
            out = (scipy.linalg.expm(liou * t) @ r0.reshape(-1)).reshape(dim, dim)
    elif method == "rk4":
        # fastest rate: largest coupling or the dephasing rate
        scale = max(float(np.max(np.abs(bath.a_parallel))), gamma)
        h = 1.0 / (RK4_STEPS_PER_PERIOD * scale) if scale > 0 else (t if t > 0 else 1.0)
        if max_step is not None:
            h = min(h, max_step)
        n = max(1, math.ceil(t / h)) if t > 0 else 0
        out = r0.copy()
        if n:
            h = t / n
            for _ in range(n):
                k1 = _lindblad_rhs(out, H, L, gamma)
                k2 = _lindblad_rhs(out + 0.5 * h * k1, H, L, gamma)
                k3 = _lindblad_rhs(out + 0.5 * h * k2, H, L, gamma)
                k4 = _lindblad_rhs(out + h * k3, H, L, gamma)
                out = out + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(out)) or abs(np.trace(out).real - 1) > 1e-8:
            raise IntegrationError("RK4 integration diverged; reduce max_step")
    else:
        raise ValueError(f"unknown method {method!r}")
    return DensityOperator(0.5 * (out + out.conj().T), rho.dims, check=False)


def unitary_propagator(bath: BathConfig, t: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * build_hamiltonian(bath) * t)
