"""Truncated two-mode (H, V polarization) Fock space.

States are complex vectors and operators complex matrices on the space
spanned by |n_h; n_v> with 0 <= n_h, n_v <= n_max. The basis is ordered
row-major in (n_h, n_v), i.e. ``index = n_h * (n_max + 1) + n_v``, so a
two-mode operator built from single-mode factors is ``np.kron(op_h, op_v)``.

The "trusted subspace" is the set of basis states with total photon number
n_h + n_v <= n_max - 2; physics checks are asserted only there.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, OutOfRangeError

ORDERING = "row-major (n_h,n_v)"
NORM_TOL = 1e-12


@dataclass(frozen=True)
class JonesVector:
    """Complex amplitude pair over the (H, V) modes.

    Used both for qubit polarizations (c_H, c_V) and for homodyne outcomes
    beta = x_- + i y_+, in which case no normalization is implied.
    """

    h: complex
    v: complex

    @classmethod
    def from_array(cls, arr) -> JonesVector:
        arr = np.asarray(arr, dtype=complex).ravel()
        if arr.shape != (2,):
            raise InvalidArgumentError(f"need two components, got shape {arr.shape}")
        return cls(complex(arr[0]), complex(arr[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=complex)

    @property
    def norm(self) -> float:
        return float(np.sqrt(abs(self.h) ** 2 + abs(self.v) ** 2))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(abs(self.h) ** 2 + abs(self.v) ** 2 - 1.0) <= tol

    def normalized(self) -> JonesVector:
        n = self.norm
        if n == 0.0:
            raise InvalidArgumentError("cannot normalize the zero vector")
        return JonesVector(self.h / n, self.v / n)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


_S = 1 / math.sqrt(2)
POLARIZATIONS = {
    "h": JonesVector(1.0, 0.0),
    "v": JonesVector(0.0, 1.0),
    "d": JonesVector(_S, _S),
    "a": JonesVector(_S, -_S),
    "r": JonesVector(_S, -1j * _S),
    "l": JonesVector(_S, 1j * _S),
}


def _as_jones(x) -> JonesVector:
    return x if isinstance(x, JonesVector) else JonesVector.from_array(x)


def _require_normalized(pol: JonesVector) -> None:
    if not pol.is_normalized():
        raise InvalidArgumentError(
            f"polarization must be normalized, |c_H|^2+|c_V|^2 = {pol.norm ** 2!r}"
        )


def _check_n_max(n_max: int) -> None:
    if int(n_max) != n_max or n_max < 1:
        raise InvalidArgumentError(f"n_max must be an integer >= 1, got {n_max!r}")


# ---------------------------------------------------------------- basis --


def dim(n_max: int) -> int:
    return (n_max + 1) ** 2


def n_max_of(matrix_or_vector) -> int:
    """Recover the per-mode truncation from a state or operator shape."""
    d = np.shape(matrix_or_vector)[0]
    side = math.isqrt(d)
    if side * side != d:
        raise InvalidArgumentError(f"dimension {d} is not a square")
    return side - 1


def index(n_h: int, n_v: int, n_max: int) -> int:
    if not (0 <= n_h <= n_max and 0 <= n_v <= n_max):
        raise OutOfRangeError(f"|{n_h};{n_v}> outside truncation n_max={n_max}")
    return n_h * (n_max + 1) + n_v


def basis_labels(n_max: int) -> np.ndarray:
    """(dim, 2) integer array of (n_h, n_v) in storage order."""
    nh, nv = np.divmod(np.arange(dim(n_max)), n_max + 1)
    return np.stack([nh, nv], axis=1)


def total_photon_numbers(n_max: int) -> np.ndarray:
    return basis_labels(n_max).sum(axis=1)


def trusted_indices(n_max: int) -> np.ndarray:
    return np.flatnonzero(total_photon_numbers(n_max) <= n_max - 2)


def restrict(op: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Sub-block of an operator on the given basis indices."""
    return op[np.ix_(idx, idx)]


def basis_state(n_h: int, n_v: int, n_max: int) -> np.ndarray:
    psi = np.zeros(dim(n_max), dtype=complex)
    psi[index(n_h, n_v, n_max)] = 1.0
    return psi


def number_operator(n_max: int) -> np.ndarray:
    return np.diag(total_photon_numbers(n_max).astype(complex))


# --------------------------------------------------------- single mode --


def annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)


def _laguerre_table(n_top: int, x: float) -> np.ndarray:
    """L_n^{(a)}(x) for 0 <= n, a <= n_top via the three-term recurrence in n."""
    table = np.zeros((n_top + 1, n_top + 1))
    a = np.arange(n_top + 1, dtype=float)
    table[0] = 1.0
    if n_top >= 1:
        table[1] = 1.0 + a - x
    for n in range(1, n_top):
        table[n + 1] = ((2 * n + 1 + a - x) * table[n] - (n + a) * table[n - 1]) / (n + 1)
    return table


def displacement_matrix(alpha: complex, rows: int, cols: int | None = None) -> np.ndarray:
    """Exact <m|D(alpha)|n> for m < rows, n < cols, with D = exp(alpha a^+ - alpha^* a).

    Entries are the untruncated matrix elements (associated Laguerre form), so
    a rectangular block can be used to carry intermediate sums past a cutoff.
    """
    cols = rows if cols is None else cols
    alpha = complex(alpha)
    if not np.isfinite(alpha):
        raise InvalidArgumentError("displacement amplitude must be finite")
    out = np.zeros((rows, cols), dtype=complex)
    if alpha == 0:
        k = min(rows, cols)
        out[np.arange(k), np.arange(k)] = 1.0
        return out
    x = abs(alpha) ** 2
    lag = _laguerre_table(max(rows, cols), x)
    log_abs = math.log(abs(alpha))
    phase = alpha / abs(alpha)
    lgam = [math.lgamma(i + 1) for i in range(max(rows, cols) + 1)]
    for m in range(rows):
        for n in range(cols):
            lo, hi = min(m, n), max(m, n)
            d = hi - lo
            mag = math.exp(0.5 * (lgam[lo] - lgam[hi]) + d * log_abs - 0.5 * x)
            ph = phase**d if m >= n else (-phase.conjugate()) ** d
            out[m, n] = mag * ph * lag[lo, d]
    return out


# ------------------------------------------------------------ two mode --


def mode_operators(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation operators (a_H, a_V) on the two-mode space."""
    a = annihilation(n_max)
    eye = np.eye(n_max + 1)
    return np.kron(a, eye), np.kron(eye, a)


def ladder(polarization, n_max: int) -> np.ndarray:
    """a_in = c_H^* a_H + c_V^* a_V; its adjoint creates a photon with this polarization."""
    _check_n_max(n_max)
    pol = _as_jones(polarization)
    _require_normalized(pol)
    a_h, a_v = mode_operators(n_max)
    return np.conj(pol.h) * a_h + np.conj(pol.v) * a_v


def displacement(beta, n_max: int) -> np.ndarray:
    """D_H(beta_H) (x) D_V(beta_V) from exact single-mode matrix elements."""
    _check_n_max(n_max)
    beta = _as_jones(beta)
    if not beta.is_finite():
        raise InvalidArgumentError("displacement amplitude must be finite")
    return np.kron(
        displacement_matrix(beta.h, n_max + 1), displacement_matrix(beta.v, n_max + 1)
    )


def coherent_state(beta, n_max: int) -> np.ndarray:
    return displacement(beta, n_max)[:, 0].copy()


def single_photon_state(polarization, n_max: int) -> np.ndarray:
    """a_in^+ |0;0> for a normalized polarization."""
    return ladder(polarization, n_max).conj().T[:, 0].copy()


def project_total_photon_number(N: int, n_max: int) -> np.ndarray:
    """Projector onto total photon number N; the zero operator for N = -1."""
    _check_n_max(n_max)
    if N == -1:
        return np.zeros((dim(n_max), dim(n_max)), dtype=complex)
    if N < -1 or N > n_max:
        raise OutOfRangeError(f"N={N} not representable with n_max={n_max}")
    return np.diag((total_photon_numbers(n_max) == N).astype(complex))


def polarization_rotation(unitary, n_max: int) -> np.ndarray:
    """Number-conserving representation R(U) with R a_i^+ R^+ = sum_j U_ji a_j^+.

    Built block by block on total photon number N <= n_max, where every block
    is complete. Basis states with N > n_max lie in incomplete blocks and are
    left unchanged; assertions on rotated operators belong on N <= n_max.
    """
    _check_n_max(n_max)
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12, rtol=0):
        raise InvalidArgumentError("polarization rotation must be a 2x2 unitary")
    d = dim(n_max)
    rot = np.eye(d, dtype=complex)
    sqrt_fact = [math.sqrt(math.factorial(i)) for i in range(n_max + 1)]
    (u_hh, u_hv), (u_vh, u_vv) = u
    for N in range(1, n_max + 1):
        block = np.zeros((N + 1, N + 1), dtype=complex)
        for n in range(N + 1):
            # (U_HH a_H^+ + U_VH a_V^+)^n (U_HV a_H^+ + U_VV a_V^+)^(N-n) |0>
            norm = 1.0 / (sqrt_fact[n] * sqrt_fact[N - n])
            for k in range(n + 1):
                ck = math.comb(n, k) * u_hh**k * u_vh ** (n - k)
                for l in range(N - n + 1):
                    cl = math.comb(N - n, l) * u_hv**l * u_vv ** (N - n - l)
                    h = k + l
                    block[h, n] += norm * ck * cl * sqrt_fact[h] * sqrt_fact[N - h]
        idx = [index(n, N - n, n_max) for n in range(N + 1)]
        rot[np.ix_(idx, idx)] = block
    return rot


def rotate_polarization(op: np.ndarray, unitary) -> np.ndarray:
    """R(U) op R(U)^+ for a 2x2 polarization unitary U."""
    rot = polarization_rotation(unitary, n_max_of(op))
    return rot @ op @ rot.conj().T


# ----------------------------------------------------------- utilities --


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def check_density(rho: np.ndarray, herm_tol: float = 1e-10, eig_floor: float = -1e-9) -> None:
    """Raise InvalidArgumentError unless rho is Hermitian, PSD and trace in (0, 1]."""
    if not np.all(np.isfinite(rho)):
        raise InvalidArgumentError("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise InvalidArgumentError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < eig_floor:
        raise InvalidArgumentError("density matrix has negative eigenvalues")
    tr = float(np.real(np.trace(rho)))
    if not 0.0 < tr <= 1.0 + 1e-9:
        raise InvalidArgumentError(f"density matrix trace {tr} outside (0, 1]")


def matrix_to_dict(op: np.ndarray) -> dict:
    n_max = n_max_of(op)
    flat = np.asarray(op, dtype=complex).ravel()
    return {
        "n_max": n_max,
        "dim": dim(n_max),
        "ordering": ORDERING,
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_dict(obj: dict) -> np.ndarray:
    if obj.get("ordering") != ORDERING:
        raise InvalidArgumentError(f"unsupported ordering {obj.get('ordering')!r}")
    d = int(obj["dim"])
    if d != dim(int(obj["n_max"])):
        raise InvalidArgumentError("dim does not match n_max")
    data = np.asarray(obj["data"], dtype=float)
    if data.shape != (d * d, 2):
        raise InvalidArgumentError(f"expected {d * d} [re, im] pairs")
    return (data[:, 0] + 1j * data[:, 1]).reshape(d, d)


def dump_matrix(op: np.ndarray, path) -> None:
    Path(path).write_text(json.dumps(matrix_to_dict(op)))


def load_matrix(path) -> np.ndarray:
    return matrix_from_dict(json.loads(Path(path).read_text()))
