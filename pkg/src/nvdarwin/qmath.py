"""Dense linear algebra for small Hilbert spaces.

Matrices are plain complex ``numpy`` arrays. :class:`DensityOperator` wraps
one together with its tensor-factor dimensions so partial traces have an
unambiguous subsystem ordering (system spin first, nuclear spins after).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

# Eigenvalues above -EIG_CLAMP are accepted as PSD. Entropies clamp [-EIG_CLAMP, 0) to 0;
# fractional powers treat |lambda| <= EIG_CLAMP as outside the support.
EIG_CLAMP = 1e-10
HERMITIAN_ATOL = 1e-8
STATE_ATOL = 1e-10
MAX_DIM = 2**12

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class NotHermitianError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix with factor dims.

    Validation runs on construction; pass ``check=False`` for intermediate
    results that are known good (e.g. inside a tight loop).
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    check: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got {m.shape}")
        if int(np.prod(self.dims)) != m.shape[0]:
            raise InvalidStateError(
                f"subsystem dims {self.dims} do not multiply to {m.shape[0]}")
        if self.check:
            validate_density_matrix(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, psi, dims=None) -> "DensityOperator":
        psi = as_pure_state(psi)
        if dims is None:
            dims = (psi.size,)
        return cls(np.outer(psi, psi.conj()), tuple(dims))

    @classmethod
    def qubits(cls, matrix, check: bool = True) -> "DensityOperator":
        """Wrap a ``2**n``-dimensional matrix as ``n`` qubit factors."""
        matrix = np.asarray(matrix, dtype=complex)
        n = int(round(np.log2(matrix.shape[0])))
        if 2**n != matrix.shape[0]:
            raise InvalidStateError(f"dimension {matrix.shape[0]} is not a power of 2")
        return cls(matrix, (2,) * n, check=check)


def validate_density_matrix(m: np.ndarray, atol: float = STATE_ATOL) -> None:
    if not np.all(np.isfinite(m)):
        raise InvalidStateError("density matrix has non-finite entries")
    herm_err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm_err > atol:
        raise InvalidStateError(f"density matrix not Hermitian (max deviation {herm_err:.3g})")
    tr = np.trace(m).real
    if abs(tr - 1.0) > atol:
        raise InvalidStateError(f"density matrix trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(m).min()
    if lam_min < -EIG_CLAMP:
        raise InvalidStateError(f"density matrix has negative eigenvalue {lam_min:.3g}")


def as_pure_state(psi, atol: float = 1e-12) -> np.ndarray:
    """Return ``psi`` as a complex vector, checking that it is normalized."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise InvalidStateError(f"state vector norm is {norm!r}, expected 1")
    return psi


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityOperator) else np.asarray(x, dtype=complex)


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with ``a``'s indices outermost."""
    a, b = _matrix(a), _matrix(b)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("tensor_product operands must be finite")
    return np.kron(a, b)


def kron_all(*factors) -> np.ndarray:
    return reduce(np.kron, [_matrix(f) for f in factors])


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Trace out every subsystem not listed in ``keep``.

    The kept factors stay in their original order. Keeping nothing returns
    the 1x1 matrix holding the total trace.
    """
    dims = rho.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        if not 0 <= k < n:
            raise IndexError(f"subsystem index {k} out of range for {n} factors")
    traced = [i for i in range(n) if i not in keep]
    t = rho.matrix.reshape(dims + dims)
    # trace highest indices first so remaining axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return DensityOperator(t.reshape(d, d), tuple(dims[k] for k in keep) or (1,), check=False)


def hermitian_eigensystem(m, atol: float = HERMITIAN_ATOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""
    m = _matrix(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"matrix must be square, got {m.shape}")
    err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if err > atol:
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {err:.3g})")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w, v


def entropy_of_spectrum(eigenvalues) -> float:
    """Shannon entropy in bits of a probability spectrum, 0 log 0 = 0."""
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(lam < -EIG_CLAMP):
        raise InvalidStateError(f"negative eigenvalue {lam.min():.3g} in spectrum")
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam))) + 0.0


def binary_entropy(p: float) -> float:
    return entropy_of_spectrum([p, 1.0 - p])


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy in bits (log base 2)."""
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator(rho, (np.shape(rho)[0],))
    return entropy_of_spectrum(np.linalg.eigvalsh(rho.matrix))


def matrix_fractional_power(rho, c: float) -> np.ndarray:
    """``rho**c`` for PSD ``rho`` and ``c`` in [0, 1].

    Eigenvalues at or below the clamp are mapped to 0 for every ``c``, so
    ``rho**0`` is the projector onto the support of ``rho``.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"exponent c={c} outside [0, 1]")
    w, v = hermitian_eigensystem(rho)
    if w.min() < -EIG_CLAMP:
        raise InvalidStateError(f"matrix is not PSD (eigenvalue {w.min():.3g})")
    support = w > EIG_CLAMP
    p = np.zeros_like(w)
    p[support] = w[support] ** c
    return (v * p) @ v.conj().T


def overlap(a, b) -> complex:
    """Inner product <a|b>, conjugate-linear in ``a``."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    return complex(np.vdot(a, b))


def spin_rotation(axis, angle: float) -> np.ndarray:
    """Spin-1/2 rotation exp(-i angle n.sigma/2).

    ``axis`` is ``"x"``, ``"y"``, ``"z"`` or a phase angle in the xy plane.
    """
    if axis == "z":
        gen = SZ
    elif axis == "x":
        gen = SX
    elif axis == "y":
        gen = SY
    else:
        phi = float(axis)
        gen = np.cos(phi) * SX + np.sin(phi) * SY
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * gen


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real
