"""Closed-form photon statistics and cloning figures of merit.

Everything is parameterized by the Gaussian noise variance V_q (mean photons
added per mode), with ``v_of_q`` / ``q_of_v`` converting from the squeezing
parameter q. Values of V_q above one are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class AnalyticPoint:
    v_q: float
    n: int
    p_n: float
    eta_n: float
    f_opt: float
    f_n: float


def _check_v(v_q: float, allow_zero: bool = True) -> float:
    v_q = float(v_q)
    lo_ok = v_q >= 0.0 if allow_zero else v_q > 0.0
    if not (lo_ok and v_q <= 1.0) or math.isnan(v_q):
        raise InvalidArgumentError(f"V_q={v_q!r} outside the supported range [0, 1]")
    return v_q


def _check_n(n: int, lo: int) -> int:
    if int(n) != n or n < lo:
        raise InvalidArgumentError(f"photon number must be an integer >= {lo}, got {n!r}")
    return int(n)


def v_of_q(q: float) -> float:
    q = float(q)
    if not 0.0 <= q < 1.0:
        raise InvalidArgumentError(f"q={q!r} outside [0, 1)")
    return (1.0 - q) / (1.0 + q)


def q_of_v(v: float) -> float:
    v = float(v)
    if not 0.0 < v <= 1.0:
        raise InvalidArgumentError(f"V_q={v!r} outside (0, 1]")
    return (1.0 - v) / (1.0 + v)


def p_of_n(v_q: float, n: int) -> float:
    """Probability of an n-photon output when teleporting one photon."""
    v = _check_v(v_q)
    n = _check_n(n, 0)
    if v == 0.0:
        return 1.0 if n == 1 else 0.0
    ratio = v / (1.0 + v)
    return (n + 1) * (n + 2 * v * v) / (2 * v * (1 + v) ** 3) * ratio**n


def p_of_n_from_weights(v_q: float, n: int) -> float:
    """Same distribution assembled from the optimal-clone and white-noise traces."""
    v = _check_v(v_q, allow_zero=False)
    n = _check_n(n, 0)
    clone_trace = (n + 1) * n / 2
    noise_trace = n + 1
    return (clone_trace + v * v * noise_trace) / (v * (1 + v) ** 3) * (v / (1 + v)) ** n


def eta_of_n(v_q: float, n: int) -> float:
    """Weight of the optimal-cloning component in the n-photon output."""
    v = _check_v(v_q)
    n = _check_n(n, 1)
    return 1.0 / (1.0 + 2.0 * v * v / n)


def f_opt(n: int) -> float:
    """Optimal 1 -> n cloning fidelity."""
    n = _check_n(n, 1)
    return (2 * n + 1) / (3 * n)


def f_of_n(v_q: float, n: int) -> float:
    """Fraction of n output photons sharing the input polarization."""
    v = _check_v(v_q)
    n = _check_n(n, 1)
    return 2.0 / 3.0 + (1.0 - v * v) / (3.0 * (n + 2.0 * v * v))


def mean_photon_number(v_q: float) -> float:
    return 1.0 + 2.0 * _check_v(v_q)


def point(v_q: float, n: int) -> AnalyticPoint:
    """All closed-form quantities at one (V_q, n); eta and fidelities are NaN for n = 0."""
    if n == 0:
        nan = float("nan")
        return AnalyticPoint(float(v_q), 0, p_of_n(v_q, 0), nan, nan, nan)
    return AnalyticPoint(
        float(v_q), int(n), p_of_n(v_q, n), eta_of_n(v_q, n), f_opt(n), f_of_n(v_q, n)
    )


# q-parameterized wrappers


def p_of_n_q(q: float, n: int) -> float:
    return p_of_n(v_of_q(q), n)


def eta_of_n_q(q: float, n: int) -> float:
    return eta_of_n(v_of_q(q), n)


def f_of_n_q(q: float, n: int) -> float:
    return f_of_n(v_of_q(q), n)
