"""Two-channel continuous-variable teleportation of a polarized field.

The transfer operator for outcome beta = (beta_H, beta_V) is

    T(beta) = (1 - q^2)/pi * sum_N q^N D(beta) Pi_N D(-beta)

which factorizes over the two polarization modes. Its single-mode factor
D(b) q^n D(-b) has a closed form (see ``transfer_kernel``), so matrix
elements on the truncated box are exact and no intermediate sum is cut off.

Integration measure: d^4 beta = dRe(beta_H) dIm(beta_H) dRe(beta_V) dIm(beta_V).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fock_core as fc
from .errors import DegenerateSamplingError, InvalidArgumentError, OutOfRangeError

METHODS = ("quadrature", "monte-carlo")


@dataclass(frozen=True)
class SqueezingParam:
    """Entanglement strength q = tanh(r), 0 <= q < 1."""

    q: float

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 <= q < 1.0):
            raise InvalidArgumentError(f"q={self.q!r} outside [0, 1)")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_v(cls, v_q: float) -> SqueezingParam:
        v_q = float(v_q)
        if not 0.0 < v_q <= 1.0:
            raise InvalidArgumentError(f"V_q={v_q!r} outside (0, 1]")
        return cls((1.0 - v_q) / (1.0 + v_q))

    @classmethod
    def from_r(cls, r: float) -> SqueezingParam:
        return cls(math.tanh(r))

    @property
    def v_q(self) -> float:
        return (1.0 - self.q) / (1.0 + self.q)

    @property
    def r(self) -> float:
        return math.atanh(self.q)


def _as_squeezing(q) -> SqueezingParam:
    return q if isinstance(q, SqueezingParam) else SqueezingParam(q)


@dataclass(frozen=True)
class IntegrationConfig:
    """How to evaluate the channel integral over beta.

    ``proposal_sigma=None`` picks 1/sqrt(1-q^2) per real quadrature, i.e.
    sqrt(2) times the spread of the vacuum outcome distribution.
    """

    method: str = "quadrature"
    nodes_per_axis: int = 24
    sample_count: int = 200_000
    proposal_sigma: float | None = None
    rng_seed: int = 0
    chunk_size: int = 8192
    renormalize: bool = False
    threads: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.nodes_per_axis < 8:
            raise InvalidArgumentError("nodes_per_axis must be >= 8")
        if self.sample_count < 1000:
            raise InvalidArgumentError("sample_count must be >= 1000")
        if self.proposal_sigma is not None and not self.proposal_sigma > 0:
            raise InvalidArgumentError("proposal_sigma must be > 0")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidArgumentError("rng_seed must be a 64-bit unsigned integer")
        if self.chunk_size < 1:
            raise InvalidArgumentError("chunk_size must be >= 1")

    def sigma_for(self, q: SqueezingParam) -> float:
        if self.proposal_sigma is not None:
            return float(self.proposal_sigma)
        return 1.0 / math.sqrt(1.0 - q.q**2)


@dataclass
class ChannelResult:
    rho_out: np.ndarray
    trace_captured: float
    outcome_density_norm: float
    method: str
    q: SqueezingParam
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return fc.n_max_of(self.rho_out)

    def to_dict(self) -> dict:
        out = fc.matrix_to_dict(self.rho_out)
        out["metadata"] = {
            "q": self.q.q,
            "v_q": self.q.v_q,
            "method": self.method,
            "seed": self.seed,
            "trace_captured": self.trace_captured,
            "outcome_density_norm": self.outcome_density_norm,
            "diagnostics": self.diagnostics,
        }
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> ChannelResult:
        meta = obj["metadata"]
        return cls(
            rho_out=fc.matrix_from_dict(obj),
            trace_captured=meta["trace_captured"],
            outcome_density_norm=meta["outcome_density_norm"],
            method=meta["method"],
            q=SqueezingParam(meta["q"]),
            seed=meta["seed"],
            diagnostics=dict(meta.get("diagnostics", {})),
        )


# ------------------------------------------------------------ kernels --


def _kernel_coefficients(q: float, rows: int, cols: int) -> np.ndarray:
    """coef[j, m, k] = C(k, j) sqrt(m!/k!) / (m-j)! q^j, zero unless j <= min(m, k)."""
    depth = min(rows, cols)
    coef = np.zeros((depth, rows, cols))
    lg = [math.lgamma(i + 1) for i in range(max(rows, cols) + 1)]
    for j in range(depth):
        qj = q**j
        for m in range(j, rows):
            for k in range(j, cols):
                coef[j, m, k] = math.comb(k, j) * qj * math.exp(0.5 * (lg[m] - lg[k]) - lg[m - j])
    return coef


def transfer_kernel(betas, q: float, rows: int, cols: int | None = None,
                    envelope: bool = True) -> np.ndarray:
    """<m| D(b) q^n D(-b) |k> for each b in ``betas``; shape (len(betas), rows, cols).

    Uses D(b) q^n D(-b) |k> = (q a^+ + (1-q) b^*)^k / sqrt(k!) e^{-(1-q^2)|b|^2/2} |(1-q) b>,
    which gives

        e^{-(1-q)|b|^2} sum_j C(k,j) sqrt(m!/k!)/(m-j)! q^j g^(m-j) g*^(k-j),  g = (1-q) b.

    ``envelope=False`` drops the Gaussian factor.
    """
    cols = rows if cols is None else cols
    betas = np.atleast_1d(np.asarray(betas, dtype=complex))
    g = (1.0 - q) * betas
    n_pow = max(rows, cols)
    gp = np.ones((betas.size, n_pow), dtype=complex)
    for p in range(1, n_pow):
        gp[:, p] = gp[:, p - 1] * g
    gc = gp.conj()
    coef = _kernel_coefficients(q, rows, cols)
    out = np.zeros((betas.size, rows, cols), dtype=complex)
    for j in range(coef.shape[0]):
        out[:, j:, j:] += coef[j, j:, j:] * gp[:, : rows - j, None] * gc[:, None, : cols - j]
    if envelope:
        out *= np.exp(-(1.0 - q) * np.abs(betas) ** 2)[:, None, None]
    return out


def _mode_prefactor(q: float) -> float:
    return math.sqrt((1.0 - q * q) / math.pi)


def transfer_operator(beta, q, n_max: int, construction: str = "closed-form",
                      pad: int = 30, prefactor_scale: float = 1.0) -> np.ndarray:
    """T(beta) on the truncated two-mode space.

    ``construction="closed-form"`` uses the exact per-mode kernel.
    ``construction="displacement"`` evaluates (1-q^2)/pi D(beta) q^{N} D(-beta)
    literally, with the intermediate photon sum carried ``pad`` levels past
    n_max through exact displacement matrix elements.
    ``prefactor_scale`` exists only to corrupt the normalization in tests.
    """
    q = _as_squeezing(q).q
    beta = fc._as_jones(beta)
    if not beta.is_finite():
        raise InvalidArgumentError("beta must be finite")
    box = n_max + 1
    if construction == "closed-form":
        t_h, t_v = (transfer_kernel([b], q, box)[0] for b in (beta.h, beta.v))
        return prefactor_scale * (1.0 - q * q) / math.pi * np.kron(t_h, t_v)
    if construction == "displacement":
        inner = box + pad
        factors = []
        for b in (beta.h, beta.v):
            left = fc.displacement_matrix(b, box, inner)
            right = fc.displacement_matrix(-b, inner, box)
            factors.append((left * q ** np.arange(inner)) @ right)
        return prefactor_scale * (1.0 - q * q) / math.pi * np.kron(*factors)
    raise InvalidArgumentError(f"unknown construction {construction!r}")


def gauss_hermite_plane(nodes: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Complex nodes and weights with sum w f(b) ~ int d^2 b f(b).

    Exact for f = exp(-scale |b|^2) * (polynomial of degree < 2*nodes per real axis).
    """
    u, w = np.polynomial.hermite.hermgauss(nodes)
    x = u / math.sqrt(scale)
    wx = w * np.exp(u * u) / math.sqrt(scale)
    re, im = np.meshgrid(x, x, indexing="ij")
    wre, wim = np.meshgrid(wx, wx, indexing="ij")
    return (re + 1j * im).ravel(), (wre * wim).ravel()


# -------------------------------------------------------------- states --


def epr_state(q, n_max: int) -> np.ndarray:
    """Four-mode resource amplitudes psi[n_RH, n_RV, n_BH, n_BV], total N <= n_max per beam."""
    q = _as_squeezing(q).q
    if n_max < 2:
        raise InvalidArgumentError("n_max must be >= 2")
    box = n_max + 1
    psi = np.zeros((box,) * 4)
    for nh in range(box):
        for nv in range(box - nh):
            psi[nh, nv, nh, nv] = (1.0 - q * q) * q ** (nh + nv)
    return psi


def epr_norm_tail(q, n_max: int) -> float:
    """Squared-norm mass of the resource state with total photon number above n_max."""
    q = _as_squeezing(q).q
    kept = sum((N + 1) * q ** (2 * N) for N in range(n_max + 1)) * (1 - q * q) ** 2
    return 1.0 - kept


def vacuum_output_state(q, n_max: int) -> np.ndarray:
    """Thermal output of vacuum teleportation, ((1+q)/2)^2 sum_N ((1-q)/2)^N Pi_N."""
    q = _as_squeezing(q).q
    totals = fc.total_photon_numbers(n_max)
    return np.diag(((1 + q) / 2) ** 2 * ((1 - q) / 2) ** totals).astype(complex)


# -------------------------------------------------------------- oracle --


def bell_projection_oracle(beta, q, psi_in: np.ndarray, n_max: int, pad: int = 8) -> np.ndarray:
    """Conditional output of beam B after projecting A and R on a displaced Bell state.

    Contracts <Bell(beta)|_{A,R} (|psi>_A |EPR(q)>_{R,B}) with
    |Bell(beta)> = pi^{-1} D_A(beta) sum_n |n>_A |n>_R, then applies the
    feed-forward displacement D_B(beta). The work is done with ``pad`` extra
    levels per mode and cropped back to n_max.
    """
    q = _as_squeezing(q)
    beta = fc._as_jones(beta)
    psi_in = np.asarray(psi_in, dtype=complex)
    if psi_in.shape != (fc.dim(n_max),):
        raise OutOfRangeError(f"input has shape {psi_in.shape}, expected ({fc.dim(n_max)},)")
    if np.any(np.abs(psi_in[fc.total_photon_numbers(n_max) > n_max]) > 0):
        raise OutOfRangeError("input support exceeds the truncation")
    n_w = n_max + pad
    box, box_w = n_max + 1, n_w + 1

    psi_a = np.zeros((box_w, box_w), dtype=complex)
    psi_a[:box, :box] = psi_in.reshape(box, box)
    d_a = fc.displacement(beta, n_w).reshape(box_w, box_w, box_w, box_w)
    bell = d_a / math.pi  # bell[a_h, a_v, r_h, r_v]
    epr = epr_state(q, n_w)  # epr[r_h, r_v, b_h, b_v]
    out_b = np.einsum("ijkl,ij,klmn->mn", bell.conj(), psi_a, epr)
    out_b = fc.displacement(beta, n_w) @ out_b.ravel()
    return out_b.reshape(box_w, box_w)[:box, :box].ravel()


# ---------------------------------------------------- outcome density --


def outcome_density(beta, q, rho_in: np.ndarray, n_max: int | None = None) -> float:
    """Probability density Tr[T rho T^+] of the homodyne outcome beta.

    Evaluated as Tr[rho T^+T] with T^+T = ((1-q^2)/pi)^2 D q^{2N} D^+ in
    closed form, so no probability is lost to the truncation.
    """
    q = _as_squeezing(q).q
    beta = fc._as_jones(beta)
    rho_in = _as_density(rho_in)
    box = fc.n_max_of(rho_in) + 1
    gram = [
        (1 - q * q) / math.pi * transfer_kernel([b], q * q, box)[0] for b in (beta.h, beta.v)
    ]
    return float(np.real(np.trace(rho_in @ np.kron(*gram))))


def _outcome_density_batch(bh, bv, q, rho4) -> np.ndarray:
    box = rho4.shape[0]
    a_h = (1 - q * q) / math.pi * transfer_kernel(bh, q * q, box)
    a_v = (1 - q * q) / math.pi * transfer_kernel(bv, q * q, box)
    # Tr[rho (A_H x A_V)] = sum rho[c,d,c',d'] A_H[c',c] A_V[d',d]
    return np.real(np.einsum("cdxy,sxc,syd->s", rho4, a_h, a_v, optimize=True))


def _as_density(rho_in) -> np.ndarray:
    rho_in = np.asarray(rho_in, dtype=complex)
    if rho_in.ndim == 1:
        rho_in = np.outer(rho_in, rho_in.conj())
    fc.check_density(rho_in)
    return rho_in


# ------------------------------------------------------------- channel --


def _thread_count(cfg: IntegrationConfig) -> int:
    if cfg.threads is not None:
        return max(1, int(cfg.threads))
    env = os.environ.get("TELECLONE_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def single_mode_superoperator(q: float, box: int, nodes: int) -> np.ndarray:
    """K[a, c, a', c'] = int d^2 b t[a, c](b) conj(t[a', c'](b)) for one polarization mode."""
    betas, weights = gauss_hermite_plane(nodes, 2.0 * (1.0 - q))
    t = _mode_prefactor(q) * transfer_kernel(betas, q, box)
    return np.einsum("s,sac,sxz->acxz", weights, t, t.conj(), optimize=True)


def _quadrature_channel(rho4, q, cfg):
    box = rho4.shape[0]
    # the 4-D tensor-product rule factorizes over the two modes
    k = single_mode_superoperator(q, box, cfg.nodes_per_axis)
    rho_out = np.einsum("acxz,bdyw,cdzw->abxy", k, k, rho4, optimize=True)
    rho_out = rho_out.reshape(box * box, box * box)

    # the outcome density decays as exp(-(1-q^2)|b|^2), slower than rho_out's integrand
    betas, weights = gauss_hermite_plane(cfg.nodes_per_axis, 1.0 - q * q)
    gram = (1 - q * q) / math.pi * np.einsum(
        "s,sab->ab", weights, transfer_kernel(betas, q * q, box)
    )
    norm = float(np.real(np.einsum("cdxy,xc,yd->", rho4, gram, gram)))
    return rho_out, norm, {"nodes": cfg.nodes_per_axis**4}


def _mc_chunk(seed_seq, n, q, sigma, vecs, rho4):
    rng = np.random.default_rng(seed_seq)
    x = rng.normal(scale=sigma, size=(n, 4))
    bh = x[:, 0] + 1j * x[:, 1]
    bv = x[:, 2] + 1j * x[:, 3]
    box = rho4.shape[0]
    log_p = -np.sum(x * x, axis=1) / (2 * sigma**2) - 2.0 * math.log(2 * math.pi * sigma**2)
    inv_p = np.exp(-log_p)

    pref = _mode_prefactor(q)
    t_h = pref * transfer_kernel(bh, q, box)
    t_v = pref * transfer_kernel(bv, q, box)
    u = np.einsum("sac,icd,sbd->siab", t_h, vecs, t_v, optimize=True)
    u = (u * np.sqrt(inv_p)[:, None, None, None]).reshape(-1, box * box)
    acc = u.T @ u.conj()

    w = _outcome_density_batch(bh, bv, q, rho4) * inv_p
    return acc, float(w.sum()), float((w * w).sum())


def _monte_carlo_channel(rho_in, rho4, q, cfg, sigma):
    lam, vec = np.linalg.eigh(rho_in)
    keep = lam > 1e-14 * lam.max()
    box = rho4.shape[0]
    vecs = (vec[:, keep] * np.sqrt(lam[keep])).T.reshape(-1, box, box)

    n_total = cfg.sample_count
    sizes = [min(cfg.chunk_size, n_total - s) for s in range(0, n_total, cfg.chunk_size)]
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(len(sizes))
    work = [(s, n, q, sigma, vecs, rho4) for s, n in zip(seeds, sizes)]
    threads = _thread_count(cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _mc_chunk(*a), work))
    else:
        parts = [_mc_chunk(*a) for a in work]

    acc = np.zeros((box * box, box * box), dtype=complex)
    w_sum = w2_sum = 0.0
    for a, s1, s2 in parts:  # fixed order keeps the reduction bit-stable
        acc += a
        w_sum += s1
        w2_sum += s2
    ess = w_sum**2 / w2_sum if w2_sum > 0 else 0.0
    if ess < 0.01 * n_total:
        raise DegenerateSamplingError(
            f"effective sample size {ess:.1f} is below 1% of {n_total}; "
            "increase proposal_sigma"
        )
    diagnostics = {"samples": n_total, "ess": ess, "proposal_sigma": sigma,
                   "chunk_size": cfg.chunk_size}
    return acc / w_sum, w_sum / n_total, diagnostics


def teleport_channel(rho_in, q, cfg: IntegrationConfig | None = None,
                     n_max: int | None = None) -> ChannelResult:
    """rho_out = int d^4 beta T(beta) rho_in T(beta)^+ on the truncated box.

    Probability that leaves the box is reported in ``trace_captured`` and is
    not renormalized unless ``cfg.renormalize`` is set.
    """
    cfg = cfg or IntegrationConfig()
    q = _as_squeezing(q)
    rho_in = _as_density(rho_in)
    n_in = fc.n_max_of(rho_in)
    if n_max is not None and n_max != n_in:
        raise InvalidArgumentError(f"rho_in has n_max={n_in}, expected {n_max}")
    box = n_in + 1
    rho4 = rho_in.reshape(box, box, box, box)

    if cfg.method == "quadrature":
        rho_out, norm, diag = _quadrature_channel(rho4, q.q, cfg)
        seed = None
    else:
        sigma = cfg.sigma_for(q)
        rho_out, norm, diag = _monte_carlo_channel(rho_in, rho4, q.q, cfg, sigma)
        seed = cfg.rng_seed
    rho_out = 0.5 * (rho_out + rho_out.conj().T)
    captured = float(np.real(np.trace(rho_out)))
    if cfg.renormalize:
        rho_out = rho_out / captured
    return ChannelResult(rho_out, captured, norm, cfg.method, q, seed, diag)


# ----------------------------------------------------- identity checks --


def identity_deviations(beta, q, n_max: int, polarization=(1.0, 0.0)) -> dict[str, float]:
    """Max entrywise deviation of each ladder/transfer identity on the trusted subspace.

    transfer_creation:     T a^+ = (q a^+ + (1-q) b_in^*) T
    transfer_annihilation: a T = T (q a + (1-q) b_in)
    vacuum_eigenstate:     a r_vac = (1-q) b_in r_vac and r_vac a^+ = (1-q) b_in^* r_vac
    thermal_commutation:   a R_vac = (1-q)/2 R_vac a and R_vac a^+ = (1-q)/2 a^+ R_vac
    with b_in = c_H^* beta_H + c_V^* beta_V and r_vac = T|0><0|T^+.
    """
    q = _as_squeezing(q).q
    beta = fc._as_jones(beta)
    pol = fc._as_jones(polarization)
    a = fc.ladder(pol, n_max)
    ad = a.conj().T
    eye = np.eye(fc.dim(n_max))
    t = transfer_operator(beta, q, n_max)
    b_in = np.conj(pol.h) * beta.h + np.conj(pol.v) * beta.v
    idx = fc.trusted_indices(n_max)

    def dev(lhs, rhs):
        return float(np.max(np.abs(fc.restrict(lhs - rhs, idx))))

    vac = t[:, 0]
    r_vac = np.outer(vac, vac.conj())
    thermal = vacuum_output_state(q, n_max)
    lam = (1 - q) / 2
    return {
        "transfer_creation": dev(t @ ad, (q * ad + (1 - q) * np.conj(b_in) * eye) @ t),
        "transfer_annihilation": dev(a @ t, t @ (q * a + (1 - q) * b_in * eye)),
        "vacuum_eigenstate": max(
            dev(a @ r_vac, (1 - q) * b_in * r_vac),
            dev(r_vac @ ad, (1 - q) * np.conj(b_in) * r_vac),
        ),
        "thermal_commutation": max(
            dev(a @ thermal, lam * thermal @ a), dev(thermal @ ad, lam * ad @ thermal)
        ),
    }


def commutation_identity_check(beta, q, n_max: int, polarization=(1.0, 0.0)) -> float:
    return max(identity_deviations(beta, q, n_max, polarization).values())


def completeness_deviation(q, n_max: int, nodes: int = 24, pad: int = 30,
                           prefactor_scale: float = 1.0) -> float:
    """Max entrywise |int d^4 beta T^+T - 1| on the trusted subspace.

    T^+T is formed as a matrix product with T's rows extended ``pad`` levels
    past n_max so that the column norms are not cut off.
    """
    q = _as_squeezing(q).q
    box = n_max + 1
    betas, weights = gauss_hermite_plane(nodes, 1.0 - q * q)
    t = _mode_prefactor(q) * transfer_kernel(betas, q, box + pad, box)
    gram = np.einsum("s,sma,smb->ab", weights, t.conj(), t)
    total = prefactor_scale**2 * np.kron(gram, gram)
    idx = fc.trusted_indices(n_max)
    return float(np.max(np.abs(fc.restrict(total, idx) - np.eye(idx.size))))
