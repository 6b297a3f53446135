"""Information-theoretic measures of how much of the pointer state a fragment records.

Entropies are in bits. Chernoff information is in nats because the record
count divides it by ln(1/delta).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import BranchedState, conditional_density, reduced_density_operator
from .qmath import (EIG_CLAMP, DensityOperator, binary_entropy, entropy_of_spectrum,
                    hermitian_eigensystem, kron_all, partial_trace, von_neumann_entropy)

EXACT_ENUMERATION_LIMIT = 20
SAMPLE_COUNT = 2000
SAMPLE_SEED = 20190401
# tr(rho0^c rho1^(1-c)) below this is reported as perfectly distinguishable
CHERNOFF_OVERLAP_FLOOR = 1e-14
CHERNOFF_INFINITE = math.inf


def validate_fragment(fragment: Sequence[int], n_env: int) -> tuple[int, ...]:
    frag = tuple(int(k) for k in fragment)
    if len(set(frag)) != len(frag):
        raise ValueError(f"fragment {frag} contains duplicate indices")
    for k in frag:
        if not 0 <= k < n_env:
            raise IndexError(f"fragment index {k} out of range for {n_env} spins")
    return frag


@dataclass(frozen=True)
class InfoBreakdown:
    mutual_information: float
    holevo: float
    discord: float
    h_s: float
    h_f: float
    h_sf: float
    p_s: tuple[float, float]
    h_f_given_s: tuple[float, float]


@dataclass(frozen=True)
class RedundancyResult:
    delta: float
    f_delta: int | None
    redundancy: float | None
    curve: tuple[float, ...]
    pointer_entropy: float

    @property
    def attainable(self) -> bool:
        return self.f_delta is not None


@dataclass(frozen=True)
class RecordCount:
    value: float
    exceeds_environment: bool


@dataclass(frozen=True)
class ChernoffResult:
    xi_per_spin: tuple[float, ...]
    xi_bar: float
    record_count: float
    exceeds_environment: bool = field(default=False)


# -- entropies from the two-branch structure -----------------------------------

def _two_level_entropy(p_a: float, p_b: float, off: complex) -> float:
    """Entropy of [[p_a, off], [off*, p_b]] (bits)."""
    tr = p_a + p_b
    det = p_a * p_b - abs(off) ** 2
    # overlaps of 1 +- ulp leave a roundoff-sized determinant; treat it as rank 1
    if det <= 8 * np.finfo(float).eps * p_a * p_b:
        det = 0.0
    disc = math.sqrt(max(tr * tr - 4 * det, 0.0))
    small = 2 * det / (tr + disc) if tr > 0 else 0.0
    return entropy_of_spectrum([tr - small, small])


def _overlap_product(state: BranchedState, indices) -> complex:
    pairs = state.conditional_states
    return complex(np.prod([np.vdot(pairs[k][1], pairs[k][0]) for k in indices]))


def _fast_entropies(state: BranchedState, fragment: tuple[int, ...]):
    """(H_S, H_F, H_SF) when every conditional record is a pure product.

    rho_F is a mixture of two pure states and rho_SF lives in the span of
    |up,F_up> and |down,F_down>, so every spectrum comes from a 2x2 matrix.
    """
    rest = [k for k in range(state.n_spins) if k not in fragment]
    pu, pd = state.p_up, state.p_down
    root = math.sqrt(pu * pd)
    o_frag = _overlap_product(state, fragment)
    o_rest = _overlap_product(state, rest)
    kappa = state.electron_coherence
    # eigenvalues of p_u|a><a| + p_d|b><b| match the Gram-matrix form
    h_f = _two_level_entropy(pu, pd, root * o_frag)
    h_sf = _two_level_entropy(pu, pd, root * kappa * o_rest)
    h_s = _two_level_entropy(pu, pd, root * kappa * o_frag * o_rest)
    return h_s, h_f, h_sf


def _explicit_entropies(state: BranchedState, fragment: tuple[int, ...]):
    rho_sf = reduced_density_operator(state, fragment)
    h_sf = von_neumann_entropy(rho_sf.matrix)
    h_s = von_neumann_entropy(partial_trace(rho_sf, [0]).matrix)
    keep = list(range(1, len(fragment) + 1))
    h_f = von_neumann_entropy(partial_trace(rho_sf, keep).matrix) if fragment else 0.0
    return h_s, h_f, h_sf


def _conditional_entropies(state: BranchedState, fragment: tuple[int, ...]) -> tuple[float, float]:
    if state.is_pure_record:
        return 0.0, 0.0
    out = []
    for branch in (0, 1):
        # conditional fragment state is a product, so its entropy is additive
        out.append(sum(von_neumann_entropy(conditional_density(state, k, branch))
                       for k in fragment))
    return out[0], out[1]


def _pointer_entropy(p_up: float) -> float:
    return binary_entropy(p_up)


def breakdown(state: BranchedState, fragment: Sequence[int], method: str = "auto") -> InfoBreakdown:
    """Mutual information, Holevo quantity and discord for one fragment.

    ``method`` picks the rank-2 closed form (``"fast"``, pure records only),
    explicit density matrices (``"explicit"``) or whichever applies
    (``"auto"``).
    """
    frag = validate_fragment(fragment, state.n_spins)
    p = (state.p_up, state.p_down)
    if not frag:
        h_s, _, h_sf = _fast_entropies(state, frag)
        return InfoBreakdown(0.0, 0.0, 0.0, h_s, 0.0, h_sf, p, (0.0, 0.0))
    if method == "auto":
        method = "fast" if state.is_pure_record else "explicit"
    if method == "fast":
        if not state.is_pure_record:
            raise ValueError("fast path needs pure conditional records (all P_k = 1)")
        h_s, h_f, h_sf = _fast_entropies(state, frag)
    elif method == "explicit":
        h_s, h_f, h_sf = _explicit_entropies(state, frag)
    else:
        raise ValueError(f"unknown method {method!r}")
    h_cond = _conditional_entropies(state, frag)
    mi = h_s + h_f - h_sf
    chi = h_f - (p[0] * h_cond[0] + p[1] * h_cond[1])
    return InfoBreakdown(mi, chi, mi - chi, h_s, h_f, h_sf, p, h_cond)


# -- operations on explicit joint states ---------------------------------------

def mutual_information(rho_sf: DensityOperator) -> float:
    """I(S:F) = H_S + H_F - H_SF for a state whose first factor is the system."""
    n = len(rho_sf.dims)
    h_s = von_neumann_entropy(partial_trace(rho_sf, [0]))
    h_f = von_neumann_entropy(partial_trace(rho_sf, range(1, n))) if n > 1 else 0.0
    h_sf = von_neumann_entropy(rho_sf)
    return h_s + h_f - h_sf


def _pointer_blocks(rho_sf: DensityOperator):
    d_s = rho_sf.dims[0]
    d_f = rho_sf.dim // d_s
    t = rho_sf.matrix.reshape(d_s, d_f, d_s, d_f)
    for s in range(d_s):
        block = t[s, :, s, :]
        yield float(np.trace(block).real), block


def holevo_from_density(rho_sf: DensityOperator) -> float:
    """chi = H_F - sum_s p_s H_{F|s} with the system measured in its computational basis."""
    if len(rho_sf.dims) == 1:
        return 0.0
    chi = entropy_of_spectrum(np.linalg.eigvalsh(
        partial_trace(rho_sf, range(1, len(rho_sf.dims))).matrix))
    for p, block in _pointer_blocks(rho_sf):
        if p > EIG_CLAMP:
            chi -= p * entropy_of_spectrum(np.linalg.eigvalsh(block / p))
    return chi


def holevo(source, fragment: Sequence[int] | None = None) -> float:
    """Holevo quantity of a fragment about the pointer observable (bits).

    ``source`` is a :class:`BranchedState` (``fragment`` indexes the bath)
    or a system-first :class:`DensityOperator` (``fragment`` indexes the
    non-system factors, default all of them).
    """
    if isinstance(source, BranchedState):
        return breakdown(source, range(source.n_spins) if fragment is None else fragment).holevo
    rho = source
    n_env = len(rho.dims) - 1
    frag = validate_fragment(range(n_env) if fragment is None else fragment, n_env)
    if not frag:
        return 0.0
    return holevo_from_density(partial_trace(rho, [0] + [k + 1 for k in frag]))


def discord(source, fragment: Sequence[int] | None = None) -> float:
    """I - chi, the part of the mutual information not carried by the pointer record."""
    if isinstance(source, BranchedState):
        return breakdown(source, range(source.n_spins) if fragment is None else fragment).discord
    rho = source
    n_env = len(rho.dims) - 1
    frag = validate_fragment(range(n_env) if fragment is None else fragment, n_env)
    if not frag:
        return 0.0
    sub = partial_trace(rho, [0] + [k + 1 for k in frag])
    return mutual_information(sub) - holevo_from_density(sub)


# -- fragment averages and redundancy ------------------------------------------

def fragments_of_size(n_env: int, m: int, seed: int = SAMPLE_SEED) -> list[tuple[int, ...]]:
    """All m-subsets for small baths, a seeded uniform sample otherwise."""
    if not 0 <= m <= n_env:
        raise ValueError(f"fragment size {m} outside [0, {n_env}]")
    if n_env <= EXACT_ENUMERATION_LIMIT or math.comb(n_env, m) <= SAMPLE_COUNT:
        return list(itertools.combinations(range(n_env), m))
    rng = np.random.default_rng(seed)
    return [tuple(sorted(rng.choice(n_env, size=m, replace=False))) for _ in range(SAMPLE_COUNT)]


def fragment_average(state: BranchedState, m: int, method: str = "auto",
                     seed: int = SAMPLE_SEED) -> InfoBreakdown:
    """Average :class:`InfoBreakdown` over the fragments of size ``m``."""
    frags = fragments_of_size(state.n_spins, m, seed)
    rows = [breakdown(state, f, method) for f in frags]
    keys = ("mutual_information", "holevo", "discord", "h_s", "h_f", "h_sf")
    mean = {k: math.fsum(getattr(r, k) for r in rows) / len(rows) for k in keys}
    h_cond = tuple(math.fsum(r.h_f_given_s[i] for r in rows) / len(rows) for i in (0, 1))
    return InfoBreakdown(**mean, p_s=(state.p_up, state.p_down), h_f_given_s=h_cond)


def fragment_average_chi(state: BranchedState, m: int, method: str = "auto",
                         seed: int = SAMPLE_SEED) -> float:
    if not 0 <= m <= state.n_spins:
        raise ValueError(f"fragment size {m} outside [0, {state.n_spins}]")
    if m == 0:
        return 0.0
    return fragment_average(state, m, method, seed).holevo


def redundancy(state: BranchedState, delta: float, method: str = "auto") -> RedundancyResult:
    """Smallest typical fragment holding (1 - delta) of the pointer entropy.

    Returns an unattainable result (``f_delta is None``) when even the whole
    environment falls short.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"information deficit must be in (0, 1), got {delta}")
    h_pointer = _pointer_entropy(state.p_up)
    curve = [0.0] + [fragment_average_chi(state, m, method) for m in range(1, state.n_spins + 1)]
    target = (1.0 - delta) * h_pointer
    f_delta = None
    if h_pointer > 0:
        for m in range(1, state.n_spins + 1):
            if curve[m] >= target:
                f_delta = m
                break
    r = state.n_spins / f_delta if f_delta else None
    return RedundancyResult(delta, f_delta, r, tuple(curve), h_pointer)


# -- Chernoff information ------------------------------------------------------

def _golden_section_min(f, lo: float, hi: float, tol: float = 1e-8) -> tuple[float, float]:
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    best = min(((f(x), x), (f(lo), lo), (f(hi), hi)))
    return best[1], best[0]


class _ChernoffOverlap:
    """Q(c) = tr(rho0^c rho1^(1-c)) from the two eigendecompositions."""

    def __init__(self, rho0, rho1):
        m0 = rho0.matrix if isinstance(rho0, DensityOperator) else np.asarray(rho0, dtype=complex)
        m1 = rho1.matrix if isinstance(rho1, DensityOperator) else np.asarray(rho1, dtype=complex)
        if m0.shape != m1.shape:
            raise ValueError(f"dimension mismatch: {m0.shape} vs {m1.shape}")
        w0, v0 = hermitian_eigensystem(m0)
        w1, v1 = hermitian_eigensystem(m1)
        s0, s1 = w0 > EIG_CLAMP, w1 > EIG_CLAMP
        self.lam0, self.lam1 = w0[s0], w1[s1]
        self.weights = np.abs(v0[:, s0].conj().T @ v1[:, s1]) ** 2

    def __call__(self, c: float) -> float:
        return float(np.sum(np.outer(self.lam0**c, self.lam1 ** (1 - c)) * self.weights))


def chernoff_overlap(rho0, rho1, c: float) -> float:
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c={c} outside [0, 1]")
    return _ChernoffOverlap(rho0, rho1)(c)


def chernoff_information(rho0, rho1, tol: float = 1e-8) -> float:
    """-ln min_c tr(rho0^c rho1^(1-c)) in nats; ``math.inf`` if the states are orthogonal."""
    q = _ChernoffOverlap(rho0, rho1)
    _, q_min = _golden_section_min(q, 0.0, 1.0, tol)
    if q_min <= CHERNOFF_OVERLAP_FLOOR:
        return CHERNOFF_INFINITE
    return max(0.0, -math.log(q_min))


def record_count(xi_bar: float, n_env: int, delta: float) -> RecordCount:
    """xi_bar * #E / ln(1/delta), flagged when it exceeds the environment size."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"information deficit must be in (0, 1), got {delta}")
    if xi_bar < 0:
        raise ValueError("Chernoff information must be >= 0")
    value = xi_bar * n_env / math.log(1.0 / delta)
    return RecordCount(value, value > n_env)


def typical_chernoff(state: BranchedState, delta: float) -> ChernoffResult:
    """Per-spin Chernoff information of the two conditional records, and its mean."""
    xis = tuple(chernoff_information(conditional_density(state, k, 0),
                                     conditional_density(state, k, 1))
                for k in range(state.n_spins))
    xi_bar = float(np.mean(xis))
    rc = record_count(xi_bar, state.n_spins, delta) if math.isfinite(xi_bar) else RecordCount(math.inf, True)
    return ChernoffResult(xis, xi_bar, rc.value, rc.exceeds_environment)


def equatorial_chernoff(polarization: float, angle: float) -> float:
    """Closed form for two qubit states with Bloch length P separated by ``angle``.

    The exchange symmetry puts the optimum at c = 1/2, giving
    Q = 2 (a^2 + b^2 cos angle) with a, b = (sqrt(l+) +- sqrt(l-))/2.
    """
    lp, lm = (1 + polarization) / 2, (1 - polarization) / 2
    a = (math.sqrt(lp) + math.sqrt(lm)) / 2
    b = (math.sqrt(lp) - math.sqrt(lm)) / 2
    q = 2 * (a * a + b * b * math.cos(angle))
    if q <= CHERNOFF_OVERLAP_FLOOR:
        return CHERNOFF_INFINITE
    return max(0.0, -math.log(q))


def conditional_product_density(state: BranchedState, fragment: Sequence[int], branch: int) -> np.ndarray:
    return kron_all(*[conditional_density(state, k, branch) for k in fragment])
