"""Adaptive XY (AXY) dynamical decoupling: filter design and effective gates.

Each half period of the decoupling cycle holds a symmetric five-pulse
block. The two free pulse positions are the phase fractions theta1 and
theta2 of the cycle 1/omega_DD. Together they set the Fourier coefficients
f_k of the modulation function. Only odd harmonics survive, and k = 3 is
nulled so that the sequence addresses the nucleus through f_1 alone.

Frequencies are ordinary frequencies (Hz). Factors of 2 pi only appear
inside exponents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from .bath import NuclearSpinParams
from .protocols import GateEvent, PulseSequence
from .qmath import I2, SX, SY, SZ

GRID_POINTS = 64
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
# theta2 <= 1/4 keeps the five-pulse block inside the half period (tau1 + tau2 <= tau3)
THETA_MAX = 0.25
# largest |f_1| reachable with f_3 = 0 inside the block
ATTAINABLE_F1 = (8 * math.cos(math.pi / 9) - 4) / math.pi
# |f_DD| bound from dividing the coupling interval by A_perp/2
COUPLING_BOUND = (16 * math.cos(math.pi / 9) - 8) / math.pi
XY8_PULSES = 8
TIMING_HEADER = "f_dd,theta1,theta2,tau1_s,tau2_s,tau3_s,tau_s"


class FilterDesignError(ValueError):
    pass


@dataclass(frozen=True)
class FilterDesign:
    f_dd: float
    theta1: float
    theta2: float
    tau1: float
    tau2: float
    tau3: float
    omega_dd: float
    tau: float
    residuals: tuple[float, float]

    def csv_row(self) -> str:
        vals = (self.f_dd, self.theta1, self.theta2, self.tau1, self.tau2, self.tau3, self.tau)
        return ",".join(f"{v:.12g}" for v in vals)


@dataclass(frozen=True)
class EffectiveCoupling:
    strength: float
    target_spin: int


@dataclass(frozen=True)
class EntanglingGate:
    unitary: np.ndarray
    angle: float
    t_eff: float
    repetitions: int | None


def filter_coefficient(theta1: float, theta2: float, k: int) -> float:
    """k-th Fourier coefficient of the AXY modulation function.

    f_k = 4/(pi k) [sum_j (-1)^j ((-1)^k - 1) sin(2 pi k theta_j) + sin(k pi/2)]
    """
    if k not in (1, 2, 3, 4):
        raise ValueError(f"harmonic k must be 1..4, got {k}")
    if not 0.0 <= theta1 <= theta2 <= 0.5:
        raise ValueError(f"need 0 <= theta1 <= theta2 <= 1/2, got ({theta1}, {theta2})")
    odd = (-1) ** k - 1
    s = sum((-1) ** j * odd * math.sin(2 * math.pi * k * th)
            for j, th in ((1, theta1), (2, theta2)))
    return 4.0 / (math.pi * k) * (s + math.sin(k * math.pi / 2))


def _residual(th: np.ndarray, f_dd: float) -> np.ndarray:
    t1, t2 = th
    f1 = 4 / math.pi * (1 + 2 * math.sin(2 * math.pi * t1) - 2 * math.sin(2 * math.pi * t2))
    f3 = 4 / (3 * math.pi) * (2 * math.sin(6 * math.pi * t1) - 2 * math.sin(6 * math.pi * t2) - 1)
    return np.array([f1 - f_dd, f3])


def _jacobian(th: np.ndarray) -> np.ndarray:
    t1, t2 = th
    return np.array([[16 * math.cos(2 * math.pi * t1), -16 * math.cos(2 * math.pi * t2)],
                     [16 * math.cos(6 * math.pi * t1), -16 * math.cos(6 * math.pi * t2)]])


def _in_domain(th) -> bool:
    return 0.0 < th[0] < th[1] <= THETA_MAX


def _damped_newton(th: np.ndarray, f_dd: float) -> np.ndarray | None:
    r = _residual(th, f_dd)
    for _ in range(NEWTON_MAX_ITER):
        norm = np.linalg.norm(r)
        if norm < NEWTON_TOL:
            return th
        try:
            step = np.linalg.solve(_jacobian(th), -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-6:
            trial = th + lam * step
            if _in_domain(trial):
                r_trial = _residual(trial, f_dd)
                if np.linalg.norm(r_trial) < norm:
                    th, r = trial, r_trial
                    break
            lam *= 0.5
        else:
            return None
    return th if np.linalg.norm(r) < NEWTON_TOL else None


def validate_coupling(f_dd: float) -> None:
    """Raise unless |f_dd| is below the coupling-range bound."""
    if not math.isfinite(f_dd) or abs(f_dd) >= COUPLING_BOUND:
        raise FilterDesignError(
            f"f_dd={f_dd} outside the attainable coupling range |f_dd| < {COUPLING_BOUND:.6f}")


def solve_phases(f_dd: float, n_seeds: int = 24) -> tuple[float, float]:
    """(theta1, theta2) with f_1 = f_dd and f_3 = 0 inside the five-pulse block.

    Seeds come from a 64 x 64 grid scan; each seed is refined by damped
    Newton iteration with the analytic Jacobian. Among converged roots the
    one with the smallest theta2 - theta1 wins (ties go to smaller theta1).
    """
    validate_coupling(f_dd)
    axis = (np.arange(GRID_POINTS) + 0.5) / GRID_POINTS * THETA_MAX
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    mask = t1 < t2
    f1 = 4 / np.pi * (1 + 2 * np.sin(2 * np.pi * t1) - 2 * np.sin(2 * np.pi * t2))
    f3 = 4 / (3 * np.pi) * (2 * np.sin(6 * np.pi * t1) - 2 * np.sin(6 * np.pi * t2) - 1)
    cost = np.where(mask, np.hypot(f1 - f_dd, f3), np.inf)
    order = np.argsort(cost, axis=None, kind="stable")[:n_seeds]
    roots = []
    for flat in order:
        i, j = np.unravel_index(flat, cost.shape)
        th = _damped_newton(np.array([axis[i], axis[j]]), f_dd)
        if th is not None:
            roots.append((th[1] - th[0], th[0], th[1]))
    if not roots:
        raise FilterDesignError(
            f"no (theta1, theta2) root with f_1={f_dd}, f_3=0 and "
            f"0 < theta1 < theta2 <= 1/4; the block reaches |f_1| <= {ATTAINABLE_F1:.6f}")
    # roots found from neighbouring seeds agree to ~1e-12; round before ranking
    _, th1, th2 = min(roots, key=lambda r: (round(r[0], 9), round(r[1], 9)))
    return float(th1), float(th2)


def solve_timings(f_dd: float, tau: float) -> FilterDesign:
    """Pulse timings realizing f_1 = f_dd at interpulse spacing ``tau`` (s)."""
    if not tau > 0:
        raise FilterDesignError(f"interpulse spacing must be > 0, got {tau}")
    th1, th2 = solve_phases(f_dd)
    omega = 1.0 / (2 * tau)
    res = np.abs(_residual(np.array([th1, th2]), f_dd))
    return FilterDesign(f_dd, th1, th2, th1 / omega, (th2 - th1) / omega, 1 / (4 * omega),
                        omega, tau, (float(res[0]), float(res[1])))


def timing_table(designs: Iterable[FilterDesign]) -> str:
    """CSV text (header plus one row per design, 12 significant digits)."""
    return "\n".join([TIMING_HEADER, *(d.csv_row() for d in designs)]) + "\n"


def resonance_spacing(larmor_hz: float, a_parallel_hz: float) -> float:
    """Interpulse spacing tau whose omega_DD = 1/(2 tau) matches nu_L + A_par/2."""
    nu = larmor_hz + a_parallel_hz / 2
    if not nu > 0:
        raise ValueError(f"effective precession frequency {nu} Hz must be > 0")
    return 1.0 / (2 * nu)


def effective_coupling(f_dd: float, spin: NuclearSpinParams, index: int = 0) -> EffectiveCoupling:
    validate_coupling(f_dd)
    return EffectiveCoupling(0.5 * f_dd * spin.a_perp_abs, index)


def effective_hamiltonian(f_dd: float, spin: NuclearSpinParams) -> np.ndarray:
    """1/2 f_DD A_perp (S_z - 1/2) (x) I_x in Hz, electron factor first.

    With the shifted S_z = |up><up|, (S_z - 1/2) = diag(1/2, -1/2), so the
    nucleus rotates about x at +-f_DD A_perp/4 in the two pointer branches
    (a relative rate of f_DD A_perp/2).
    """
    validate_coupling(f_dd)
    return 0.5 * f_dd * spin.a_perp_abs * np.kron(0.5 * SZ, 0.5 * SX)


def entangling_gate(design: FilterDesign, spin: NuclearSpinParams,
                    repetitions: int | None = None,
                    target_angle: float | None = None) -> EntanglingGate:
    """exp(i 2 pi H t_eff) for the AXY effective Hamiltonian.

    Pass ``repetitions`` N (t_eff = 8 N tau, one XY8 unit per repetition)
    or ``target_angle``. The returned ``angle`` phi is the conditional
    rotation angle: the |up> branch gets R_x(-phi) and |down> gets R_x(+phi),
    with phi = pi f_DD A_perp t_eff / 2.
    """
    if (repetitions is None) == (target_angle is None):
        raise ValueError("give exactly one of repetitions or target_angle")
    rate = math.pi * design.f_dd * spin.a_perp_abs / 2
    if repetitions is not None:
        if repetitions < 0:
            raise ValueError("repetitions must be >= 0")
        t_eff = XY8_PULSES * repetitions * design.tau
    else:
        if rate == 0:
            if target_angle == 0:
                t_eff = 0.0
            else:
                raise ValueError("zero effective coupling cannot accumulate a nonzero angle")
        else:
            t_eff = target_angle / rate
        if t_eff < 0:
            raise ValueError("negative target angle needs a negative f_dd design")
    h = effective_hamiltonian(design.f_dd, spin)
    u = scipy.linalg.expm(2j * np.pi * h * t_eff)
    return EntanglingGate(u, rate * t_eff, t_eff, repetitions)


def iswap_target() -> np.ndarray:
    """exp(i pi/2 sigma_x I_x) exp(i pi/2 sigma_y I_y) with I = sigma/2."""
    xx = np.kron(SX, 0.5 * SX)
    yy = np.kron(SY, 0.5 * SY)
    return scipy.linalg.expm(0.5j * np.pi * xx) @ scipy.linalg.expm(0.5j * np.pi * yy)


def iswap_sequence(design: FilterDesign, spin: NuclearSpinParams, spin_index: int = 0) -> PulseSequence:
    """iSwap from two conditional gates dressed by electron basis changes.

    Each conditional event is exp(i pi/2 sigma_z I_axis). Electron
    rotations map sigma_z to sigma_y (around the y-axis conditional) and to
    sigma_x (around the x-axis one).
    """
    rate = math.pi * design.f_dd * spin.a_perp_abs / 2
    if rate == 0:
        raise ValueError("iSwap needs a nonzero effective coupling")
    # exp(i pi/2 sigma_z I) is a conditional angle of pi
    duration = abs(math.pi / rate)
    k = spin_index
    return PulseSequence([
        GateEvent("electron", "x", np.pi / 2),
        GateEvent("conditional", "y", -np.pi / 2, spin=k, duration=duration),
        GateEvent("electron", "x", -np.pi / 2),
        GateEvent("electron", "y", -np.pi / 2),
        GateEvent("conditional", "x", -np.pi / 2, spin=k, duration=duration),
        GateEvent("electron", "y", np.pi / 2),
    ])


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol))
