"""System parameters: the NV electron and its nuclear-spin register.

All couplings and frequencies are ordinary frequencies in Hz (the values
tabulated as A/2pi); factors of 2pi only appear inside matrix exponents.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .qmath import MAX_DIM, as_pure_state

GAMMA_C13_HZ_PER_T = 10.705e6
GAMMA_E_HZ_PER_T = 28.025e9

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
KET_PLUS_Y = np.array([1, 1j], dtype=complex) / np.sqrt(2)
KET_MINUS_Y = np.array([1, -1j], dtype=complex) / np.sqrt(2)

NAMED_STATES = {
    "0": KET0, "1": KET1,
    "+": KET_PLUS, "-": KET_MINUS,
    "+y": KET_PLUS_Y, "-y": KET_MINUS_Y,
}

# Register of the four strongest-coupled 13C spins (A_par, |A_perp|) in Hz.
TABLE_S1 = (
    (93.5e3, 45.8e3),
    (49.5e3, 35.3e3),
    (-26.3e3, 22.0e3),
    (-47.1e3, 42.5e3),
)
FIELD_TESLA = 0.0440
DEFAULT_LARMOR_HZ = GAMMA_C13_HZ_PER_T * FIELD_TESLA
TYPICAL_POLARIZATION = 0.75
# T2* of 10 us from the weakly coupled remainder of the bath; not a measured value.
DEFAULT_DEPHASING_RATE = 1.0e5


class BathError(ValueError):
    pass


def named_state(label: str) -> np.ndarray:
    try:
        return NAMED_STATES[label].copy()
    except KeyError:
        raise BathError(f"unknown single-spin state {label!r}; "
                        f"expected one of {sorted(NAMED_STATES)}") from None


@dataclass(frozen=True)
class NuclearSpinParams:
    a_parallel: float
    a_perp_abs: float
    polarization: float = 1.0
    initial_state: np.ndarray = field(default_factory=lambda: KET_PLUS.copy())

    def __post_init__(self):
        if not (np.isfinite(self.a_parallel) and np.isfinite(self.a_perp_abs)):
            raise BathError("hyperfine couplings must be finite")
        if self.a_perp_abs < 0:
            raise BathError(f"a_perp_abs must be a magnitude (>= 0), got {self.a_perp_abs}")
        if not 0.0 < self.polarization <= 1.0:
            raise BathError(f"polarization must be in (0, 1], got {self.polarization}")
        psi = np.asarray(self.initial_state, dtype=complex).reshape(-1)
        if psi.shape != (2,):
            raise BathError("initial_state must be a single-qubit vector")
        object.__setattr__(self, "initial_state", as_pure_state(psi))


@dataclass(frozen=True)
class BathConfig:
    larmor_frequency: float
    spins: tuple[NuclearSpinParams, ...]
    electron_dephasing_rate: float = 0.0
    gyromagnetic_ratio_c13: float = GAMMA_C13_HZ_PER_T

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(self.spins))
        if not self.larmor_frequency > 0:
            raise BathError(f"larmor_frequency must be > 0, got {self.larmor_frequency}")
        if not self.electron_dephasing_rate >= 0:
            raise BathError("electron_dephasing_rate must be >= 0")
        if len(self.spins) < 1:
            raise BathError("bath needs at least one nuclear spin")

    @property
    def n_spins(self) -> int:
        return len(self.spins)

    @property
    def a_parallel(self) -> np.ndarray:
        return np.array([s.a_parallel for s in self.spins])

    @property
    def a_perp(self) -> np.ndarray:
        return np.array([s.a_perp_abs for s in self.spins])

    @property
    def polarizations(self) -> np.ndarray:
        return np.array([s.polarization for s in self.spins])

    def with_polarization(self, p: float | Sequence[float]) -> "BathConfig":
        ps = np.broadcast_to(np.asarray(p, dtype=float), (self.n_spins,))
        return replace(self, spins=tuple(replace(s, polarization=float(q))
                                         for s, q in zip(self.spins, ps)))

    def with_initial_state(self, psi) -> "BathConfig":
        return replace(self, spins=tuple(replace(s, initial_state=np.array(psi, dtype=complex))
                                         for s in self.spins))

    def subset(self, indices: Sequence[int]) -> "BathConfig":
        return replace(self, spins=tuple(self.spins[i] for i in indices))

    def check_dimension(self) -> int:
        dim = 2 ** (1 + self.n_spins)
        if dim > MAX_DIM:
            raise BathError(f"Hilbert space dimension 2^{1 + self.n_spins} exceeds 2^12")
        return dim


def larmor_from_field(field_tesla: float, gamma: float = GAMMA_C13_HZ_PER_T) -> float:
    return gamma * field_tesla


def table_s1_bath(polarization: float = 1.0,
                  dephasing_rate: float = 0.0,
                  larmor_hz: float = DEFAULT_LARMOR_HZ) -> BathConfig:
    """The four-spin register with every spin prepared in |+>."""
    spins = tuple(NuclearSpinParams(a, b, polarization) for a, b in TABLE_S1)
    return BathConfig(larmor_hz, spins, dephasing_rate)


def state_label(psi: np.ndarray) -> str | None:
    for name, ket in NAMED_STATES.items():
        if abs(abs(np.vdot(ket, psi)) - 1.0) < 1e-12 and np.allclose(ket, psi):
            return name
    return None


def bath_as_dict(bath: BathConfig) -> dict:
    """Plain-data snapshot for metadata files."""
    spins = []
    for s in bath.spins:
        label = state_label(s.initial_state)
        spins.append({
            "a_parallel_hz": s.a_parallel,
            "a_perp_hz": s.a_perp_abs,
            "polarization": s.polarization,
            "initial_state": label if label is not None
            else [[z.real, z.imag] for z in s.initial_state],
        })
    return {
        "larmor_hz": bath.larmor_frequency,
        "dephasing_rate_hz": bath.electron_dephasing_rate,
        "gyromagnetic_ratio_c13": bath.gyromagnetic_ratio_c13,
        "spins": spins,
    }
