"""Gate-level protocols: GHZ preparation, Ramsey and the Loschmidt echo."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bath import KET_MINUS_Y, KET_PLUS_Y, BathConfig, BathError
from .model import BranchedState, evolve_branches, initial_branched_state
from .qmath import I2, spin_rotation

UP, DOWN = 0, 1
TARGETS = ("electron", "nuclear", "conditional")


@dataclass(frozen=True)
class GateEvent:
    """One rotation in a pulse sequence.

    ``target="conditional"`` with ``condition=None`` is the symmetric
    electron-controlled rotation exp(-i angle sigma_z^e (x) I_axis): the
    |up> branch turns by +angle and |down> by -angle. With ``condition`` set
    to ``"up"`` or ``"down"`` only that branch is rotated.
    """

    target: str
    axis: str | float
    angle: float
    spin: int | None = None
    condition: str | None = None
    duration: float = 0.0

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown gate target {self.target!r}")
        if not math.isfinite(self.angle):
            raise ValueError("rotation angle must be finite")
        if self.target != "electron" and self.spin is None:
            raise ValueError(f"{self.target} gate needs a spin index")
        if self.condition not in (None, "up", "down"):
            raise ValueError(f"condition must be 'up', 'down' or None, got {self.condition!r}")
        if self.condition is not None and self.target != "conditional":
            raise ValueError("only conditional gates take a condition")


@dataclass
class PulseSequence:
    events: list[GateEvent] = field(default_factory=list)

    def add(self, *events: GateEvent) -> "PulseSequence":
        self.events.extend(events)
        return self

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    @property
    def duration(self) -> float:
        return sum(e.duration for e in self.events)

    def validate(self, n_spins: int) -> None:
        for e in self.events:
            if e.spin is not None and not 0 <= e.spin < n_spins:
                raise BathError(f"gate targets spin {e.spin} but only {n_spins} are configured")


def _embed(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Single-site operator on ``n_sites`` qubits (site 0 = electron)."""
    left = np.eye(2**site)
    right = np.eye(2 ** (n_sites - site - 1))
    return np.kron(np.kron(left, op), right)


def event_unitary(event: GateEvent, n_spins: int) -> np.ndarray:
    n_sites = n_spins + 1
    if event.target == "electron":
        return _embed(spin_rotation(event.axis, event.angle), 0, n_sites)
    site = event.spin + 1
    if event.target == "nuclear":
        return _embed(spin_rotation(event.axis, event.angle), site, n_sites)
    if event.condition is None:
        r_up = spin_rotation(event.axis, event.angle)
        r_down = spin_rotation(event.axis, -event.angle)
    elif event.condition == "up":
        r_up, r_down = spin_rotation(event.axis, event.angle), I2
    else:
        r_up, r_down = I2, spin_rotation(event.axis, event.angle)
    proj_up = np.diag([1.0, 0.0])
    proj_down = np.diag([0.0, 1.0])
    return (np.kron(proj_up, _embed(r_up, site - 1, n_spins))
            + np.kron(proj_down, _embed(r_down, site - 1, n_spins)))


def sequence_unitary(sequence: PulseSequence, n_spins: int) -> np.ndarray:
    sequence.validate(n_spins)
    u = np.eye(2 ** (n_spins + 1), dtype=complex)
    for e in sequence:
        u = event_unitary(e, n_spins) @ u
    return u


def run_sequence(sequence: PulseSequence, psi0: np.ndarray, n_spins: int) -> np.ndarray:
    sequence.validate(n_spins)
    psi = np.asarray(psi0, dtype=complex)
    for e in sequence:
        psi = event_unitary(e, n_spins) @ psi
    return psi


def _factorize_product(vec: np.ndarray, n: int, atol: float = 1e-9):
    """Split a normalized product vector into single-qubit factors.

    Returns (factors, phase) with vec = phase * kron(factors).
    """
    t = vec.reshape([2] * n)
    pivot = np.unravel_index(np.argmax(np.abs(t)), t.shape)
    factors = []
    for k in range(n):
        idx = list(pivot)
        idx[k] = slice(None)
        f = t[tuple(idx)]
        factors.append(f / np.linalg.norm(f))
    prod = factors[0]
    for f in factors[1:]:
        prod = np.kron(prod, f)
    ov = np.vdot(prod, vec)
    if abs(abs(ov) - 1.0) > atol:
        raise ValueError("branch record is not a product state")
    return factors, ov


def branched_from_statevector(psi: np.ndarray, n_spins: int,
                              polarizations: Sequence[float] | None = None) -> BranchedState:
    """Convert |up>|E_up> + |down>|E_down> with product records into branches."""
    half = 2**n_spins
    a, b = psi[:half], psi[half:]
    p_up, p_down = float(np.vdot(a, a).real), float(np.vdot(b, b).real)
    if min(p_up, p_down) < 1e-14:
        raise ValueError("both pointer branches must be populated")
    fu, ph_u = _factorize_product(a / math.sqrt(p_up), n_spins)
    fd, ph_d = _factorize_product(b / math.sqrt(p_down), n_spins)
    norm = p_up + p_down
    return BranchedState(p_up / norm, p_down / norm, tuple(zip(fu, fd)),
                         ph_u * np.conj(ph_d), polarizations)


def strongest_spins(bath: BathConfig, n: int) -> list[int]:
    """Indices of the ``n`` spins with the largest total hyperfine coupling, in bath order."""
    strength = np.hypot(bath.a_parallel, bath.a_perp)
    order = sorted(range(bath.n_spins), key=lambda k: (-strength[k], k))
    return sorted(order[:n])


def ghz_sequence(n_spins: int, angle: float = np.pi / 2) -> PulseSequence:
    seq = PulseSequence([GateEvent("electron", "y", np.pi / 2)])
    for k in range(n_spins):
        seq.add(GateEvent("conditional", "x", angle, spin=k))
    return seq


def ghz_protocol(bath: BathConfig, n_spins: int) -> BranchedState:
    """Electron pi/2 pulse followed by conditional R_x(+-pi/2) on each record spin.

    The ``n_spins`` most strongly coupled spins are used, each starting in
    |0> (polarized by swap). Ideal gates leave the records |-y> (up branch)
    and |+y> (down branch), which are orthogonal.
    """
    if not 0 <= n_spins <= bath.n_spins:
        raise BathError(f"n_spins={n_spins} exceeds the {bath.n_spins}-spin bath")
    chosen = strongest_spins(bath, n_spins)
    psi0 = np.zeros(2 ** (n_spins + 1), dtype=complex)
    psi0[0] = 1.0
    psi = run_sequence(ghz_sequence(n_spins), psi0, n_spins)
    pol = [bath.spins[k].polarization for k in chosen]
    return branched_from_statevector(psi, n_spins, pol)


def ghz_target_state(n_spins: int) -> np.ndarray:
    """(|up>|-y...> + |down>|+y...>)/sqrt(2), the ideal protocol output."""
    up = np.array([1.0])
    down = np.array([1.0])
    for _ in range(n_spins):
        up = np.kron(up, KET_MINUS_Y)
        down = np.kron(down, KET_PLUS_Y)
    return np.concatenate([up, down]) / np.sqrt(2)


def _electron_coherence(state: BranchedState) -> complex:
    """<up|rho_S|down> normalized to 1 for an unentangled |+> electron."""
    return state.electron_coherence * complex(np.prod(state.overlaps()))


def ramsey_coherence(bath: BathConfig, t: float) -> float:
    if t < 0:
        raise ValueError(f"Ramsey delay must be >= 0, got {t}")
    state = evolve_branches(initial_branched_state(bath), bath, t)
    return float(_electron_coherence(state).real)


def ramsey_signal(bath: BathConfig, t: float) -> float:
    """Population of |up> after pi/2 - wait t - (-pi/2) on the electron.

    Equals (1 + Re C(t))/2 where C(t) is the electron coherence
    exp(-gamma t) prod_k <phi_k| exp(-i 2pi A_k t I_z) |phi_k>.
    """
    if t < 0:
        raise ValueError(f"Ramsey delay must be >= 0, got {t}")
    state = evolve_branches(initial_branched_state(bath), bath, t)
    c = math.sqrt(state.p_up * state.p_down) * _electron_coherence(state)
    rho_s = np.array([[state.p_up, c], [np.conj(c), state.p_down]])
    r = spin_rotation("y", -np.pi / 2)
    return float((r @ rho_s @ r.conj().T)[0, 0].real)


@dataclass(frozen=True)
class EchoResult:
    taus: np.ndarray
    signal: np.ndarray
    frequencies: np.ndarray
    spectrum: np.ndarray
    precession_hz: np.ndarray


def echo_precession_frequencies(bath: BathConfig, spins: Sequence[int]) -> np.ndarray:
    """nu_L + A_k/2: the electron spends half the CPMG-decoupled period in each level."""
    return np.array([bath.larmor_frequency + bath.spins[k].a_parallel / 2 for k in spins])


def loschmidt_echo_signal(bath: BathConfig, tau_sweep: Sequence[float],
                          n_spins: int = 3, entangling_angle: float = np.pi / 2) -> EchoResult:
    """Multiple-quantum-coherence echo around a GHZ state.

    Sequence per delay tau: electron pi/2, conditional +R_x on each record
    spin, free precession of every record spin at nu_L + A_k/2, conditional
    -R_x, electron -pi/2, readout of the |up> population. Returns the
    signal and the magnitude of its discrete Fourier transform (mean
    removed).
    """
    taus = np.asarray(tau_sweep, dtype=float)
    if taus.size < 8:
        raise ValueError(f"echo sweep needs at least 8 points, got {taus.size}")
    steps = np.diff(taus)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(abs(steps[0]), 1e-30):
        raise ValueError("echo sweep must be uniformly spaced and increasing")
    if not 0 <= n_spins <= bath.n_spins:
        raise BathError(f"n_spins={n_spins} exceeds the {bath.n_spins}-spin bath")
    chosen = strongest_spins(bath, n_spins)
    nu = echo_precession_frequencies(bath, chosen)

    prepare = ghz_sequence(n_spins, entangling_angle)
    u_prep = sequence_unitary(prepare, n_spins)
    undo = PulseSequence([GateEvent("conditional", "x", -entangling_angle, spin=k)
                          for k in range(n_spins)])
    undo.add(GateEvent("electron", "y", -np.pi / 2))
    u_undo = sequence_unitary(undo, n_spins)
    psi0 = np.zeros(2 ** (n_spins + 1), dtype=complex)
    psi0[0] = 1.0
    psi_ghz = u_prep @ psi0
    signal = np.empty(taus.size)
    for i, tau in enumerate(taus):
        phases = np.array([1.0 + 0j])
        for f in nu:
            phi = 2 * np.pi * f * tau
            phases = np.kron(phases, np.array([np.exp(-0.5j * phi), np.exp(0.5j * phi)]))
        free = np.concatenate([phases, phases])
        psi = u_undo @ (free * psi_ghz)
        signal[i] = abs(psi[: 2**n_spins] @ psi[: 2**n_spins].conj())
    d = steps[0]
    spectrum = np.abs(np.fft.rfft(signal - signal.mean()))
    freqs = np.fft.rfftfreq(taus.size, d)
    return EchoResult(taus, signal, freqs, spectrum, nu)
