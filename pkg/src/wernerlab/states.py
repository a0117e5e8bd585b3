"""Werner-state constructors, two-qubit building blocks and noisy surrogates.

Three equivalent routes to the same d-dimensional Werner family:

* ``werner`` mixes the normalized symmetric/antisymmetric projectors directly,
* ``werner_from_qubit_mixture`` mixes noisy two-qubit singlet blocks
  (only valid while the block weight q stays nonnegative),
* ``werner_all_v`` mixes singlet/triplet/diagonal blocks and covers all
  weights v in [0, 1].

All agree entrywise to machine precision on their common domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmat import DensityMatrix, as_state, dagger, kron

BLOCK_KINDS = ("singlet", "diag", "cross", "triplet")


@dataclass(frozen=True)
class WernerParams:
    """Local dimension d and symmetric weight v, with the qubit-mixture parameters."""

    d: int
    v: float

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("local dimension must be at least 2")
        if not 0.0 <= self.v <= 1.0:
            raise ValueError("symmetric weight v must lie in [0, 1]")

    @property
    def p(self) -> float:
        return 1.0 / self.d

    @property
    def q(self) -> float:
        return 1.0 - (2.0 * self.d / (self.d + 1.0)) * self.v


def ket(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def swap_operator(d: int) -> np.ndarray:
    """Swap V with V |psi>|phi> = |phi>|psi> on C^d (x) C^d."""
    if d < 2:
        raise ValueError("swap operator needs d >= 2")
    v = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            v[i * d + j, j * d + i] = 1.0
    return v


def sym_projector(d: int) -> np.ndarray:
    return (np.eye(d * d, dtype=complex) + swap_operator(d)) / 2


def antisym_projector(d: int) -> np.ndarray:
    return (np.eye(d * d, dtype=complex) - swap_operator(d)) / 2


def werner(d: int, v: float) -> DensityMatrix:
    """Werner state: v-weighted mixture of the normalized Pi+ and Pi- projectors."""
    params = WernerParams(d, v)
    n_plus = d * (d + 1) / 2
    n_minus = d * (d - 1) / 2
    mat = (params.v / n_plus) * sym_projector(d) + ((1 - params.v) / n_minus) * antisym_projector(d)
    return DensityMatrix(d, d, mat)


def qubit_block(d: int, i: int, j: int, kind: str) -> DensityMatrix:
    """Two-qubit block state supported on span{|ii>,|ij>,|ji>,|jj>} of C^d (x) C^d."""
    if not 0 <= i < j < d:
        raise ValueError("block indices must satisfy 0 <= i < j < d")
    if kind not in BLOCK_KINDS:
        raise ValueError(f"unknown block kind {kind!r}")
    dd = d * d
    m = np.zeros((dd, dd), dtype=complex)
    ij, ji = i * d + j, j * d + i
    ii, jj = i * d + i, j * d + j
    if kind == "singlet":
        psi = np.zeros(dd, dtype=complex)
        psi[ij], psi[ji] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        m = np.outer(psi, psi.conj())
    elif kind == "triplet":
        psi = np.zeros(dd, dtype=complex)
        psi[ij], psi[ji] = 1 / np.sqrt(2), 1 / np.sqrt(2)
        m = np.outer(psi, psi.conj())
    elif kind == "diag":
        m[ii, ii] = m[jj, jj] = 0.5
    else:  # cross
        m[ij, ij] = m[ji, ji] = 0.5
    return DensityMatrix(d, d, m)


def werner_from_qubit_mixture(d: int, v: float) -> DensityMatrix:
    """Werner state as a uniform mixture of noisy two-qubit singlet blocks.

    Valid only while q = 1 - 2d/(d+1) v is nonnegative, i.e. v <= (d+1)/(2d).
    """
    params = WernerParams(d, v)
    q, p = params.q, params.p
    if q < -1e-12:
        raise ValueError(
            f"v={v} exceeds (d+1)/(2d)={(d + 1) / (2 * d)}: qubit-mixture weight q<0, "
            "use the all-v route (werner_all_v)"
        )
    q = max(q, 0.0)
    n_minus = d * (d - 1) / 2
    dd = d * d
    mat = np.zeros((dd, dd), dtype=complex)
    for i in range(d):
        for j in range(i + 1, d):
            block = (
                q * qubit_block(d, i, j, "singlet").mat
                + (1 - q) * (p * qubit_block(d, i, j, "diag").mat + (1 - p) * qubit_block(d, i, j, "cross").mat)
            )
            mat += block
    return DensityMatrix(d, d, mat / n_minus)


def werner_all_v(d: int, v: float) -> DensityMatrix:
    """Werner state as a uniform qubit-block mixture valid for every v in [0, 1]."""
    WernerParams(d, v)
    q = 2.0 * v / (d + 1.0)
    p = (d + 1.0) * (1.0 - v) / (d + 1.0 - 2.0 * v)
    n_minus = d * (d - 1) / 2
    dd = d * d
    mat = np.zeros((dd, dd), dtype=complex)
    for i in range(d):
        for j in range(i + 1, d):
            block = (
                q * qubit_block(d, i, j, "diag").mat
                + (1 - q) * (p * qubit_block(d, i, j, "singlet").mat + (1 - p) * qubit_block(d, i, j, "triplet").mat)
            )
            mat += block
    return DensityMatrix(d, d, mat / n_minus)


def max_entangled_ket(d: int) -> np.ndarray:
    """|Phi+_d> = sum_i |ii> / sqrt(d)."""
    psi = np.zeros(d * d, dtype=complex)
    psi[:: d + 1] = 1 / np.sqrt(d)
    return psi


def mes(d: int, u: np.ndarray) -> np.ndarray:
    """Maximally entangled vector (I (x) U)|Phi+_d> for unitary U."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (d, d) or np.max(np.abs(dagger(u) @ u - np.eye(d))) > 1e-10:
        raise ValueError("U must be a d x d unitary within 1e-10")
    return kron(np.eye(d), u) @ max_entangled_ket(d)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian with phase-fixed diagonal."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


@dataclass(frozen=True)
class NoiseSpec:
    """Two-knob noise model: global depolarizing weight plus a seeded Hermitian kick."""

    depol: float = 0.0
    coherent_eps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.depol <= 1.0:
            raise ValueError("depol must lie in [0, 1]")
        if self.coherent_eps < 0:
            raise ValueError("coherent_eps must be nonnegative")


def experiment_like_noise(v: float, seed: int = 97) -> NoiseSpec:
    """Noise ramp that keeps qutrit-Werner surrogates inside the target
    tomography fidelity band [0.958, 0.995] across v in [0, 0.5]."""
    return NoiseSpec(
        depol=max(0.05 - 0.08 * v, 0.01),
        coherent_eps=0.03 + 0.04 * v,
        seed=seed,
    )


def noisy_surrogate(rho_ideal: DensityMatrix, spec: NoiseSpec) -> DensityMatrix:
    """Deterministic noisy stand-in for an imperfectly prepared state.

    Depolarizes with weight ``spec.depol``, adds a seeded random traceless
    Hermitian perturbation of Frobenius norm ``spec.coherent_eps``, then
    projects back onto the state set.  Not a physical model of any apparatus;
    the two knobs are tuned to hit a target fidelity band.
    """
    d2 = rho_ideal.dim
    if spec.depol == 0.0 and spec.coherent_eps == 0.0:
        return rho_ideal
    m = (1 - spec.depol) * rho_ideal.mat + spec.depol * np.eye(d2) / d2
    if spec.coherent_eps == 0.0:
        # depolarizing alone keeps the state exact; no reprojection needed
        return DensityMatrix(rho_ideal.dimA, rho_ideal.dimB, m)
    rng = np.random.default_rng(spec.seed)
    g = rng.standard_normal((d2, d2)) + 1j * rng.standard_normal((d2, d2))
    h = (g + dagger(g)) / 2
    h -= np.trace(h) / d2 * np.eye(d2)
    h /= np.linalg.norm(h)
    m = m + spec.coherent_eps * h
    return as_state(m, rho_ideal.dimA, rho_ideal.dimB, clip_tol=np.inf)
