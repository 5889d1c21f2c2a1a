"""Finite-dimensional operator model: spectra, Hermitian perturbations,
heat traces, and the simplex heat-kernel brackets.

The base operator D is diagonal with real eigenvalues lam_i.  The
order-n bracket of matrices A_0, ..., A_n at time t > 0 is

    <A_0,...,A_n>_n
        = t^n tr int_{Delta_n} A_0 e^{-s_0 t D^2} ... A_n e^{-s_n t D^2} d^n s
        = (-1)^n sum (A_0)_{i_0 i_1} ... (A_n)_{i_n i_0}
                 E_t[lam_{i_0}^2, ..., lam_{i_n}^2],

where E_t(u) = e^{-t u} and the bracket on the right is a divided
difference (confluent when squared eigenvalues collide, e.g. for +/-
pairs).  bracket_dd evaluates the closed form; bracket_mc integrates the
simplex form by Monte Carlo as an independent oracle.

bracket_identity_check verifies the four algebraic identities the
brackets satisfy: cyclic invariance; the unit-insertion sum
t <A_0,...,A_n>_n = sum_i <1, A_i, ..., A_{i-1}>_{n+1}; the vanishing sum
of [D, .] insertions; and the reduction of a [D^2, A_i] insertion to a
difference of order-(n-1) brackets with neighbours merged (cyclically at
the wrap-around slots).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from string import ascii_lowercase
from typing import Sequence

import numpy as np

from .divdiff import MultisetDivDiff
from .errors import BudgetExceededError
from .functions import exp_decay
from .rng import make_rng, simplex_uniform

__all__ = [
    "DEFAULT_TUPLE_BUDGET",
    "Spectrum",
    "BracketValue",
    "BracketIdentityReport",
    "require_hermitian",
    "eigen_decompose",
    "heat_trace",
    "heat_kernel",
    "operator_norm",
    "commutator_with_d",
    "anticommutator_with_d",
    "commutator_with_d2",
    "bracket_dd",
    "bracket_mc",
    "bracket_identity_check",
    "duhamel_residual",
    "linear_spectrum",
    "dirac_circle_spectrum",
    "random_spectrum",
    "random_hermitian",
    "band_hermitian",
    "one_form",
]

DEFAULT_TUPLE_BUDGET = 10_000_000


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of the diagonal base operator, ascending."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("spectrum must be a nonempty 1-d array")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @classmethod
    def from_values(cls, values) -> "Spectrum":
        return cls(np.sort(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def squares(self) -> np.ndarray:
        return self.eigenvalues**2

    def diagonal(self) -> np.ndarray:
        return np.diag(self.eigenvalues).astype(complex)


def require_hermitian(a, tol: float = 1e-12) -> np.ndarray:
    """Validate and return a square Hermitian matrix as complex128."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix entries must be finite")
    scale = max(1.0, float(np.max(np.abs(m))))
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > tol * scale:
        raise ValueError(f"matrix is not Hermitian: max |A - A*| = {dev:g}")
    return m


def _square_complex(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix entries must be finite")
    return m


def eigen_decompose(h) -> tuple[Spectrum, np.ndarray]:
    """Spectrum and unitary U with h = U diag(lam) U* for Hermitian h."""
    m = require_hermitian(h)
    lam, u = np.linalg.eigh(m)
    return Spectrum(lam), u


def heat_trace(spec: Spectrum, t: float) -> float:
    """tr e^{-t D^2} = sum_i e^{-t lam_i^2}, t > 0."""
    if not t > 0.0:
        raise ValueError(f"heat time must be positive, got {t}")
    return float(np.sum(np.exp(-t * spec.squares)))


def heat_kernel(h, t: float) -> np.ndarray:
    """e^{-t H^2} for a Hermitian matrix H, via eigendecomposition."""
    lam, u = np.linalg.eigh(require_hermitian(h))
    return (u * np.exp(-t * lam * lam)[None, :]) @ u.conj().T


def operator_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=complex), 2))


def commutator_with_d(spec: Spectrum, a) -> np.ndarray:
    """[D, A]_{mn} = (lam_m - lam_n) A_{mn}."""
    m = _square_complex(a)
    lam = spec.eigenvalues
    return (lam[:, None] - lam[None, :]) * m


def anticommutator_with_d(spec: Spectrum, a) -> np.ndarray:
    """{D, A}_{mn} = (lam_m + lam_n) A_{mn}."""
    m = _square_complex(a)
    lam = spec.eigenvalues
    return (lam[:, None] + lam[None, :]) * m


def commutator_with_d2(spec: Spectrum, a) -> np.ndarray:
    """[D^2, A]_{mn} = (lam_m^2 - lam_n^2) A_{mn}."""
    m = _square_complex(a)
    sq = spec.squares
    return (sq[:, None] - sq[None, :]) * m


@dataclass(frozen=True)
class BracketValue:
    """Closed-form bracket value; real up to rounding for self-adjoint
    arguments and real t."""

    value: complex
    order: int
    t: float

    @property
    def real(self) -> float:
        return float(self.value.real)


def _exp_divdiff(spec: Spectrum, t: float) -> MultisetDivDiff:
    """Divided differences of u -> e^{-t u} over the squared eigenvalues.

    The (-t)^n from differentiating e^{-t u} n times cancels the t^n of
    the inflated simplex, which is where the (-1)^n of the closed bracket
    form comes from; +/- eigenvalue pairs share confluent cache entries.
    """
    return MultisetDivDiff(exp_decay(t), spec.squares)


def _cyclic_contract(mats: Sequence[np.ndarray], weight: np.ndarray) -> complex:
    """sum over tuples of (M_0)_{i_0 i_1} ... (M_k)_{i_k i_0} W_{i_0...i_k}."""
    k = len(mats)
    if k + 1 > len(ascii_lowercase):
        raise ValueError("too many factors for the contraction")
    letters = ascii_lowercase[:k]
    subs = [letters[j] + letters[(j + 1) % k] for j in range(k)]
    expr = ",".join(subs + [letters]) + "->"
    return complex(np.einsum(expr, *mats, weight, optimize=True))


def _check_ops(ops: Sequence, dim: int) -> list[np.ndarray]:
    mats = [_square_complex(a) for a in ops]
    for m in mats:
        if m.shape[0] != dim:
            raise ValueError(
                f"operator dimension {m.shape[0]} does not match spectrum dimension {dim}"
            )
    return mats


def bracket_dd(
    ops: Sequence,
    spec: Spectrum,
    t: float,
    budget: int = DEFAULT_TUPLE_BUDGET,
) -> BracketValue:
    """Closed-form bracket via divided differences of e^{-t u}.

    <A_0,...,A_n>_n = (-1)^n sum_{i_0..i_n} (A_0)_{i_0 i_1} ...
    (A_n)_{i_n i_0} E_t[lam_{i_0}^2,...,lam_{i_n}^2].  Degenerate squared
    eigenvalues are handled by the confluent table.
    """
    if not t > 0.0:
        raise ValueError(f"heat time must be positive, got {t}")
    mats = _check_ops(ops, spec.dim)
    n = len(mats) - 1
    if n < 0:
        raise ValueError("need at least one operator")
    if spec.dim ** (n + 1) > budget:
        raise BudgetExceededError(
            f"bracket needs {spec.dim}^{n + 1} tuples, over budget {budget}"
        )
    table = _exp_divdiff(spec, t)
    weight = table.tensor(n + 1)
    value = ((-1.0) ** n) * _cyclic_contract(mats, weight)
    return BracketValue(value=value, order=n, t=float(t))


def _cyclic_heat_traces(
    gs: Sequence[np.ndarray],
    ws: Sequence[np.ndarray],
    s_batch: np.ndarray,
    chunk: int = 65536,
) -> np.ndarray:
    """tr( G_0 diag(e^{-s_0 w_0}) G_1 diag(e^{-s_1 w_1}) ... ) per sample row."""
    k = len(gs)
    out = np.empty(s_batch.shape[0], dtype=complex)
    for lo in range(0, s_batch.shape[0], chunk):
        s = s_batch[lo : lo + chunk]
        prod = gs[0][None, :, :] * np.exp(-np.outer(s[:, 0], ws[0]))[:, None, :]
        for j in range(1, k):
            factor = gs[j][None, :, :] * np.exp(-np.outer(s[:, j], ws[j]))[:, None, :]
            prod = prod @ factor
        out[lo : lo + chunk] = np.einsum("pii->p", prod)
    return out


def bracket_mc(
    ops: Sequence,
    spec: Spectrum,
    t: float,
    samples: int,
    seed: int,
) -> tuple[complex, float]:
    """Monte Carlo bracket estimate (value, stderr) over the simplex.

    Averages t^n tr(A_0 e^{-s_0 t D^2} ... A_n e^{-s_n t D^2}) over uniform
    simplex samples and divides by n! (the uniform density).  Order 0 needs
    no integration and is returned exactly with zero stderr.
    """
    if not t > 0.0:
        raise ValueError(f"heat time must be positive, got {t}")
    mats = _check_ops(ops, spec.dim)
    n = len(mats) - 1
    if n == 0:
        exact = complex(np.sum(np.diagonal(mats[0]) * np.exp(-t * spec.squares)))
        return exact, 0.0
    if samples < 2:
        raise ValueError(f"need at least two samples, got {samples}")
    rng = make_rng(seed)
    s = simplex_uniform(rng, n, samples)
    w = [t * spec.squares] * (n + 1)
    traces = _cyclic_heat_traces(mats, w, s)
    scale = (t**n) / math.factorial(n)
    estimate = complex(traces.mean() * scale)
    spread = math.sqrt(traces.real.var(ddof=1) + traces.imag.var(ddof=1))
    stderr = float(spread * scale / math.sqrt(samples))
    return estimate, stderr


@dataclass(frozen=True)
class BracketIdentityReport:
    """Largest relative residuals of the four bracket identities."""

    cyclic: float
    unit_insertion: float
    d_commutator_sum: float
    d2_reduction: float
    tol: float

    @property
    def passed(self) -> bool:
        worst = max(self.cyclic, self.unit_insertion, self.d_commutator_sum, self.d2_reduction)
        return worst <= self.tol


def _rel(delta: float, scale: float) -> float:
    return delta / max(scale, 1e-300)


def bracket_identity_check(
    ops: Sequence,
    spec: Spectrum,
    t: float,
    tol: float = 1e-9,
    budget: int = DEFAULT_TUPLE_BUDGET,
) -> BracketIdentityReport:
    """Verify the four bracket identities on the given operator list.

    Residuals are relative to the magnitude of the quantities involved.
    The [D^2, .] reduction needs order >= 1; for a single operator that
    residual is reported as 0.
    """
    mats = _check_ops(ops, spec.dim)
    n = len(mats) - 1
    base = bracket_dd(mats, spec, t, budget=budget).value
    scale = max(abs(base), 1e-15)

    cyc = 0.0
    for r in range(1, n + 1):
        rotated = mats[r:] + mats[:r]
        cyc = max(cyc, _rel(abs(bracket_dd(rotated, spec, t, budget=budget).value - base), scale))

    eye = np.eye(spec.dim, dtype=complex)
    inserted = 0.0j
    for r in range(n + 1):
        rotated = [eye] + mats[r:] + mats[:r]
        inserted += bracket_dd(rotated, spec, t, budget=budget).value
    ins = _rel(abs(t * base - inserted), max(abs(t * base), abs(inserted), 1e-15))

    terms = []
    for i in range(n + 1):
        bumped = list(mats)
        bumped[i] = commutator_with_d(spec, mats[i])
        terms.append(bracket_dd(bumped, spec, t, budget=budget).value)
    comm_scale = max(max((abs(v) for v in terms), default=0.0), scale)
    comm = _rel(abs(sum(terms)), comm_scale)

    red = 0.0
    if n >= 1:
        for i in range(n + 1):
            bumped = list(mats)
            bumped[i] = commutator_with_d2(spec, mats[i])
            lhs = bracket_dd(bumped, spec, t, budget=budget).value
            if i >= 1:
                left = mats[: i - 1] + [mats[i - 1] @ mats[i]] + mats[i + 1 :]
            else:
                left = [mats[n] @ mats[0]] + mats[1:n]
            if i <= n - 1:
                right = mats[:i] + [mats[i] @ mats[i + 1]] + mats[i + 2 :]
            else:
                right = [mats[n] @ mats[0]] + mats[1:n]
            rhs = (
                bracket_dd(left, spec, t, budget=budget).value
                - bracket_dd(right, spec, t, budget=budget).value
            )
            red = max(red, _rel(abs(lhs - rhs), max(abs(lhs), abs(rhs), scale)))

    return BracketIdentityReport(
        cyclic=cyc, unit_insertion=ins, d_commutator_sum=comm, d2_reduction=red, tol=tol
    )


def duhamel_residual(spec: Spectrum, a, t: float, quad_points: int = 64) -> float:
    """Max-entry residual of the first-order heat-semigroup expansion.

    R = || e^{-t D_A^2} - e^{-t D^2}
         + t int_0^1 e^{-s t D_A^2} P(A) e^{-(1-s) t D^2} ds ||_max

    with D_A = D + A and P(A) = DA + AD + A^2, the s-integral evaluated by
    Gauss-Legendre quadrature mapped onto [0, 1].  Converges to zero as
    quad_points grows; the integrand is entire so convergence is fast.
    """
    if not t > 0.0:
        raise ValueError(f"heat time must be positive, got {t}")
    if quad_points < 1:
        raise ValueError(f"need at least one quadrature point, got {quad_points}")
    mat = require_hermitian(a)
    if mat.shape[0] != spec.dim:
        raise ValueError("perturbation dimension does not match the spectrum")
    lam = spec.eigenvalues
    d = np.diag(lam).astype(complex)
    pa = d @ mat + mat @ d + mat @ mat
    mu, u = np.linalg.eigh(d + mat)
    heat_a = (u * np.exp(-t * mu * mu)[None, :]) @ u.conj().T
    heat_d = np.diag(np.exp(-t * lam * lam)).astype(complex)

    x, w = np.polynomial.legendre.leggauss(quad_points)
    s_nodes = 0.5 * (x + 1.0)
    s_weights = 0.5 * w
    integral = np.zeros_like(mat)
    uh = u.conj().T
    for s, wt in zip(s_nodes, s_weights):
        left = (u * np.exp(-s * t * mu * mu)[None, :]) @ uh
        right = np.exp(-(1.0 - s) * t * lam * lam)
        integral += wt * (left @ pa * right[None, :])
    return float(np.max(np.abs(heat_a - heat_d + t * integral)))


def linear_spectrum(dim: int) -> Spectrum:
    """lam_k = k - (dim-1)/2, centered integers or half-integers."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return Spectrum(np.arange(dim, dtype=float) - (dim - 1) / 2.0)


def dirac_circle_spectrum(dim: int) -> Spectrum:
    """The dim values of +/-(k + 1/2) closest to zero, ascending.

    Even dim gives symmetric pairs (with degenerate squares); odd dim
    carries one extra positive value.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    vals: list[float] = []
    k = 0
    while len(vals) < dim:
        vals.append(k + 0.5)
        if len(vals) < dim:
            vals.append(-(k + 0.5))
        k += 1
    return Spectrum.from_values(vals)


def random_spectrum(dim: int, lam_max: float, rng: np.random.Generator) -> Spectrum:
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if not lam_max > 0.0:
        raise ValueError(f"lam_max must be positive, got {lam_max}")
    return Spectrum.from_values(rng.uniform(-lam_max, lam_max, size=dim))


def random_hermitian(dim: int, rng: np.random.Generator, norm: float | None = None) -> np.ndarray:
    """Dense Hermitian matrix, optionally rescaled to a target operator norm."""
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (x + x.conj().T)
    if norm is not None:
        if not norm > 0.0:
            raise ValueError(f"norm target must be positive, got {norm}")
        current = operator_norm(h)
        if current == 0.0:
            raise ValueError("degenerate random draw, cannot rescale")
        h = h * (norm / current)
    return h


def band_hermitian(
    dim: int,
    bandwidth: int,
    rng: np.random.Generator,
    norm: float | None = None,
) -> np.ndarray:
    """Hermitian matrix supported on |i - j| <= bandwidth."""
    if bandwidth < 0:
        raise ValueError(f"bandwidth must be >= 0, got {bandwidth}")
    h = random_hermitian(dim, rng)
    i, j = np.indices((dim, dim))
    h[np.abs(i - j) > bandwidth] = 0.0
    if norm is not None:
        if not norm > 0.0:
            raise ValueError(f"norm target must be positive, got {norm}")
        current = operator_norm(h)
        if current == 0.0:
            raise ValueError("band matrix vanished, cannot rescale")
        h = h * (norm / current)
    return h


def one_form(spec: Spectrum, terms: Sequence[tuple]) -> np.ndarray:
    """sum_j a_j [D, b_j] for explicit coefficient/argument matrices."""
    if not terms:
        raise ValueError("need at least one (a, b) term")
    total = np.zeros((spec.dim, spec.dim), dtype=complex)
    for a, b in terms:
        am = _square_complex(a)
        if am.shape[0] != spec.dim:
            raise ValueError("one-form coefficient dimension mismatch")
        total += am @ commutator_with_d(spec, b)
    return total
