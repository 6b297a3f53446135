"""Figure-level studies built from the model and metrics modules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.constants as const

from .bath import (GAMMA_C13_HZ_PER_T, GAMMA_E_HZ_PER_T, DEFAULT_LARMOR_HZ, BathConfig,
                   BathError, NuclearSpinParams, bath_as_dict)
from .metrics import (breakdown, chernoff_information, equatorial_chernoff,
                      fragment_average, fragment_average_chi, record_count)
from .model import conditional_density, evolve_branches, initial_branched_state
from .protocols import ghz_protocol, ramsey_coherence, ramsey_signal

DIAMOND_LATTICE_NM = 0.357
MAX_REDRAWS = 100
DEFAULT_REALIZATIONS = 10
_FCC = np.array([[0, 0, 0], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
_DIAMOND_BASIS = np.vstack([_FCC, _FCC + 0.25])
NV_AXIS = np.ones(3) / math.sqrt(3)


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("time grid must be a nonempty 1-D sequence")
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("times must be >= 0 and ascending")
    return t


@dataclass(frozen=True)
class SweepResult:
    times: np.ndarray
    fragment_sizes: tuple[int, ...]
    chi_surface: np.ndarray
    mi_surface: np.ndarray
    discord_surface: np.ndarray
    metadata: dict = field(default_factory=dict)


def holevo_surface(bath: BathConfig, times: Sequence[float], max_fragment: int | None = None,
                   corrected: bool = True, method: str = "auto") -> SweepResult:
    """Fragment-averaged chi, I and D over a (time, fragment size) grid.

    ``corrected=True`` treats every spin as fully polarized (P_k = 1). The
    uncorrected route keeps the bath's P_k, which shrinks the single-spin
    off-diagonals as in raw data.
    """
    t = _check_times(times)
    m_max = bath.n_spins if max_fragment is None else int(max_fragment)
    if not 1 <= m_max <= bath.n_spins:
        raise BathError(f"max fragment size {m_max} outside [1, {bath.n_spins}]")
    sizes = tuple(range(1, m_max + 1))
    state0 = initial_branched_state(bath)
    if corrected:
        state0 = state0.with_polarizations(1.0)
    shape = (t.size, len(sizes))
    chi, mi, disc = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    for i, ti in enumerate(t):
        st = evolve_branches(state0, bath, float(ti))
        for j, m in enumerate(sizes):
            avg = fragment_average(st, m, method)
            chi[i, j], mi[i, j], disc[i, j] = avg.holevo, avg.mutual_information, avg.discord
    meta = {"bath": bath_as_dict(bath), "corrected": corrected, "method": method}
    return SweepResult(t, sizes, chi, mi, disc, meta)


@dataclass(frozen=True)
class GhzPlateau:
    fragment_sizes: tuple[int, ...]
    chi_corrected: np.ndarray
    chi_uncorrected: np.ndarray
    polarizations: tuple[float, ...]


def ghz_plateau(bath: BathConfig, n_spins: int = 3,
                polarizations: Sequence[float] | float | None = None) -> GhzPlateau:
    """chi(m) of the GHZ protocol output for m = 0..n_spins.

    The corrected curve uses P_k = 1; the uncorrected one uses
    ``polarizations`` (default: the bath's values for the chosen spins).
    """
    state = ghz_protocol(bath, n_spins)
    if polarizations is not None:
        state = state.with_polarizations(polarizations)
    ideal = state.with_polarizations(1.0)
    sizes = tuple(range(n_spins + 1))
    corr = np.array([fragment_average_chi(ideal, m) for m in sizes])
    raw = np.array([fragment_average_chi(state, m, "explicit") for m in sizes])
    return GhzPlateau(sizes, corr, raw, state.polarizations)


def chernoff_curve(bath: BathConfig, times: Sequence[float], corrected: bool = True) -> np.ndarray:
    """Mean single-spin Chernoff information (nats) of the conditional records."""
    t = _check_times(times)
    state0 = initial_branched_state(bath)
    if corrected:
        state0 = state0.with_polarizations(1.0)
    out = np.empty(t.size)
    for i, ti in enumerate(t):
        st = evolve_branches(state0, bath, float(ti))
        xis = [chernoff_information(conditional_density(st, k, 0), conditional_density(st, k, 1))
               for k in range(st.n_spins)]
        out[i] = float(np.mean(xis))
    return out


def ramsey_curve(bath: BathConfig, times: Sequence[float], coherence: bool = False) -> np.ndarray:
    """Ramsey population signal, or Re of the electron coherence with ``coherence=True``."""
    t = _check_times(times)
    f = ramsey_coherence if coherence else ramsey_signal
    return np.array([f(bath, float(ti)) for ti in t])


# -- random 13C baths ----------------------------------------------------------

@dataclass(frozen=True)
class RandomBathSpec:
    concentration: float
    lattice_radius: float
    seed: int
    n_realizations: int = DEFAULT_REALIZATIONS
    initial_polarization: float = 1.0
    larmor_hz: float = DEFAULT_LARMOR_HZ

    def __post_init__(self):
        if not 0.0 < self.concentration <= 1.0:
            raise BathError(f"13C concentration must be in (0, 1], got {self.concentration}")
        if not self.lattice_radius > 0:
            raise BathError("lattice radius must be > 0")
        if self.n_realizations < 1:
            raise BathError("need at least one realization")
        if not 0.0 < self.initial_polarization <= 1.0:
            raise BathError("initial polarization must be in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise BathError("seed must be a non-negative 64-bit integer")


def lattice_sites(radius_nm: float, a: float = DIAMOND_LATTICE_NM) -> np.ndarray:
    """Diamond-lattice positions (nm) within ``radius_nm`` of the vacancy.

    The vacancy sits on a lattice site at the origin. It and its nearest
    neighbour shell (the nitrogen and the dangling-bond carbons) are excluded.
    """
    n = int(math.ceil(radius_nm / a)) + 1
    cells = np.arange(-n, n + 1)
    grid = np.stack(np.meshgrid(cells, cells, cells, indexing="ij"), -1).reshape(-1, 1, 3)
    pts = ((grid + _DIAMOND_BASIS[None]) * a).reshape(-1, 3)
    r = np.linalg.norm(pts, axis=1)
    nn = math.sqrt(3) / 4 * a
    keep = (r <= radius_nm) & (r > nn * 1.01)
    pts = pts[keep]
    # fixed ordering so occupation draws are reproducible
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0], np.round(np.linalg.norm(pts, axis=1), 9)))
    return pts[order]


def dipolar_couplings(positions_nm: np.ndarray,
                      gamma_n: float = GAMMA_C13_HZ_PER_T) -> tuple[np.ndarray, np.ndarray]:
    """Secular point-dipole (A_par, |A_perp|) in Hz with the NV axis as z."""
    r_vec = np.asarray(positions_nm, dtype=float) * 1e-9
    r = np.linalg.norm(r_vec, axis=1)
    cos_t = r_vec @ NV_AXIS / r
    sin_t = np.sqrt(np.clip(1 - cos_t**2, 0, None))
    ge, gn = 2 * np.pi * GAMMA_E_HZ_PER_T, 2 * np.pi * gamma_n
    scale = const.mu_0 / (4 * np.pi) * const.hbar * ge * gn / r**3 / (2 * np.pi)
    return scale * (1 - 3 * cos_t**2), scale * 3 * np.abs(cos_t * sin_t)


def generate_random_bath(spec: RandomBathSpec) -> list[BathConfig]:
    """``n_realizations`` baths with Bernoulli 13C occupation of the lattice.

    Each realization uses its own child of ``SeedSequence(spec.seed)``, so
    realizations are independent of how many are requested before them.
    Empty draws are repeated up to a fixed bound.
    """
    sites = lattice_sites(spec.lattice_radius)
    if sites.size == 0:
        raise BathError(f"no lattice sites within {spec.lattice_radius} nm")
    a_par, a_perp = dipolar_couplings(sites)
    baths = []
    for child in np.random.SeedSequence(spec.seed).spawn(spec.n_realizations):
        rng = np.random.default_rng(child)
        for _ in range(MAX_REDRAWS):
            occupied = np.flatnonzero(rng.random(len(sites)) < spec.concentration)
            if occupied.size:
                break
        else:
            raise BathError(f"no 13C spins drawn after {MAX_REDRAWS} attempts "
                            f"(concentration {spec.concentration}, radius {spec.lattice_radius} nm)")
        spins = tuple(NuclearSpinParams(float(a_par[k]), float(a_perp[k]), spec.initial_polarization)
                      for k in occupied)
        baths.append(BathConfig(spec.larmor_hz, spins))
    return baths


def typical_chernoff_closed_form(bath: BathConfig, t: float) -> float:
    """Mean single-spin Chernoff information for |+> spins with polarization P_k."""
    return float(np.mean([equatorial_chernoff(s.polarization, 2 * np.pi * s.a_parallel * t)
                          for s in bath.spins]))


def record_count_vs_time(spec: RandomBathSpec, times: Sequence[float], delta: float,
                         baths: list[BathConfig] | None = None) -> np.ndarray:
    """Record count xi_bar #E / ln(1/delta) averaged over realizations."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"information deficit must be in (0, 1), got {delta}")
    t = _check_times(times)
    baths = generate_random_bath(spec) if baths is None else baths
    acc = np.zeros((len(baths), t.size))
    for i, b in enumerate(baths):
        for j, tj in enumerate(t):
            xi = typical_chernoff_closed_form(b, float(tj))
            acc[i, j] = record_count(xi, b.n_spins, delta).value if math.isfinite(xi) else math.inf
    return acc.mean(axis=0)


def single_fragment_breakdowns(bath: BathConfig, t: float, corrected: bool = True):
    """Per-spin InfoBreakdown at time ``t``; handy for tables and tests."""
    st = initial_branched_state(bath)
    if corrected:
        st = st.with_polarizations(1.0)
    st = evolve_branches(st, bath, t)
    return [breakdown(st, [k]) for k in range(bath.n_spins)]
