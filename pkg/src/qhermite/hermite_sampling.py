"""Sampling from the Hermite spectrum of black-box functions over the Gaussian.

Conventions.  The sampling and learning layers expand functions in the
orthonormal probabilist Hermite polynomials h_k under the standard normal
density nu(x) = exp(-x^2/2)/sqrt(2*pi), so Parseval and "Gaussian
distribution" statements hold exactly: fhat(v) = E[f(X) h_v(X)].  The
oscillator modules work with physicist Hermite functions on the grid
x_j = j*sqrt(2*pi/M); the two pictures are glued by the exact change of
variables x = sqrt(2)*y, under which
    h_k(x) sqrt(nu(x)) = 2^(-1/4) psi_k(x / sqrt(2)),
so multiplying the discrete oscillator ground state by f(sqrt(2)*y) and
projecting onto |psibar_v> is a Riemann sum for fhat(v); the Jacobian is
absorbed exactly.  The samplers evaluate their oracles at sqrt(2) times the
grid for this reason.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discrete_qho import hermite_basis
from .spectral_core import GridSpec, probabilist_rows

__all__ = [
    "OracleFunction",
    "SamplerConfig",
    "HermiteSample",
    "SpectrumTable",
    "SampleDistribution",
    "coefficient_oracle",
    "spectrum_table",
    "sample_distribution",
    "boolean_hermite_sample",
    "general_hermite_sample",
    "distortion",
    "tv_distance",
    "suggest_quadrature_M",
]

FULL_GRID_BUDGET = 26  # n * log2(M_quad) cap for tensor-grid quadrature


class PostselectionFailure(RuntimeError):
    """Rejection loop exceeded its attempt cap."""


@dataclass(frozen=True)
class OracleFunction:
    """Real function on R^n with declared precision, degree cutoff, distortion.

    evaluator acts on arrays of shape (..., n) and returns shape (...).
    input_bits, when set, snaps inputs to the anchor of their dyadic cube of
    side 2^-input_bits before evaluation (f is constant on those cubes);
    output_bits rounds outputs to that many fractional bits.  kappa is the
    declared well-conditioning parameter: the rejection sampler is promised
    a per-attempt success probability of at least 1/(2*kappa).
    range_bounded declares |f| <= 1; unbounded oracles still sample (the
    amplitude rescale is folded into the controlled rotation) but pay for it
    in postselection probability, which the declared kappa must cover.
    """

    arity: int
    evaluator: object
    degree_cutoff: int = 9
    input_bits: int | None = None
    output_bits: int | None = None
    kappa: float = 1.0
    boolean: bool = False
    range_bounded: bool = True
    gamma: float | None = None   # declared E||grad f||^2 proxy, when known
    label: str = ""
    product_factors: tuple | None = None  # optional per-axis callables

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if pts.shape[-1] != self.arity:
            raise ValueError(f"expected points in R^{self.arity}, got shape {pts.shape}")
        if self.input_bits is not None:
            scale = 2.0**self.input_bits
            pts = np.floor(pts * scale) / scale
        vals = np.asarray(self.evaluator(pts), dtype=float)
        if self.output_bits is not None:
            oscale = 2.0**self.output_bits
            vals = np.round(vals * oscale) / oscale
        return vals


@dataclass(frozen=True)
class HermiteSample:
    """One draw v from the spectrum distribution (coordinates within [0, D])."""

    v: tuple
    attempts: int = 1
    out_of_range: bool = False


@dataclass(frozen=True)
class SpectrumTable:
    """Map v -> fhat(v) for v in [0, D]^n, with the captured mass."""

    arity: int
    D: int
    coefficients: dict = field(repr=False)
    mass: float = 0.0
    basis: str = "probabilist-orthonormal"

    def coefficient(self, v) -> float:
        return self.coefficients.get(tuple(v), 0.0)

    def probabilities(self, norm_sq: float = 1.0) -> dict:
        return {v: c * c / norm_sq for v, c in self.coefficients.items()}


def _quad_grid(M_quad: int):
    """Midpoint quadrature grid: spacing h = sqrt(2pi/M) over [-L, L].

    Cell midpoints (k + 1/2) h rather than the label grid k h: the points
    come in exact +-x pairs, so odd integrands cancel to rounding (the sgn
    spectrum's even coefficients vanish as they should), and no evaluation
    ever lands on a dyadic step anchor.
    """
    spec = GridSpec(M_quad)
    return (spec.labels + 0.5) * spec.h, spec.h


def _nu(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def coefficient_oracle(f: OracleFunction, v, M_quad: int = 512):
    """fhat(v) by tensor-grid Riemann sum of f * h_v * nu over [-L, L]^n.

    Returns (value, error_estimate); the estimate is the change under one
    grid doubling (a conservative Richardson gauge -- the integrand is
    analytic apart from f's dyadic steps, so actual convergence is faster).
    """
    v = tuple(int(c) for c in v)
    coarse = _coefficient_riemann(f, v, M_quad)
    fine = _coefficient_riemann(f, v, 2 * M_quad)
    return fine, abs(fine - coarse)


def _coefficient_riemann(f: OracleFunction, v, M_quad: int) -> float:
    n = f.arity
    if f.product_factors is not None:
        x, h = _quad_grid(M_quad)
        total = 1.0
        for i in range(n):
            rows = probabilist_rows(v[i], x)
            fi = np.asarray(f.product_factors[i](x), dtype=float)
            total *= float(h * np.sum(fi * rows[v[i]] * _nu(x)))
        return total
    if n * math.log2(M_quad) > FULL_GRID_BUDGET:
        raise ValueError(
            f"full-grid budget exceeded (n={n}, M_quad={M_quad}) and no product structure")
    x, h = _quad_grid(M_quad)
    axis_rows = [probabilist_rows(v[i], x)[v[i]] * _nu(x) for i in range(n)]
    if n == 1:
        vals = f.evaluate(x[:, None])
        return float(h * np.sum(vals * axis_rows[0]))
    if n == 2:
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        vals = f.evaluate(np.stack([X1, X2], axis=-1))
        return float(h**2 * np.einsum("ij,i,j->", vals, axis_rows[0], axis_rows[1]))
    if n == 3:
        total = 0.0
        for i, x1 in enumerate(x):  # chunk the leading axis to bound memory
            X2, X3 = np.meshgrid(x, x, indexing="ij")
            pts = np.stack([np.full_like(X2, x1), X2, X3], axis=-1)
            vals = f.evaluate(pts)
            total += axis_rows[0][i] * np.einsum("jk,j,k->", vals, axis_rows[1], axis_rows[2])
        return float(h**3 * total)
    raise ValueError(f"tensor-grid quadrature implemented for n <= 3, got n={n}")


def spectrum_table(f: OracleFunction, D: int | None = None, M_quad: int = 512) -> SpectrumTable:
    """All coefficients v in [0, D]^n in one tensor contraction per axis."""
    n = f.arity
    D = f.degree_cutoff if D is None else D
    if n * math.log2(M_quad) > FULL_GRID_BUDGET:
        raise ValueError(f"full-grid budget exceeded (n={n}, M_quad={M_quad})")
    x, h = _quad_grid(M_quad)
    rows = probabilist_rows(D, x)
    weighted = rows * _nu(x)
    coeffs = {}
    if n == 1:
        vals = f.evaluate(x[:, None])
        c = h * (weighted @ vals)
        for a in range(D + 1):
            coeffs[(a,)] = float(c[a])
    elif n == 2:
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        vals = f.evaluate(np.stack([X1, X2], axis=-1))
        c = h**2 * np.einsum("ij,ai,bj->ab", vals, weighted, weighted)
        for a in range(D + 1):
            for b in range(D + 1):
                coeffs[(a, b)] = float(c[a, b])
    else:
        raise ValueError("spectrum_table supports n <= 2")
    mass = float(sum(c * c for c in coeffs.values()))
    return SpectrumTable(arity=n, D=D, coefficients=coeffs, mass=mass)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    """Grid size per axis, measured degree window, and transform backend."""

    M: int = 512
    D: int = 9
    transform: str = "reference"     # "reference" | "pipeline"
    attempt_cap_factor: int = 64     # rejection cap = factor * kappa
    qht_eps: float = 0.01            # pipeline-mode transform accuracy


@dataclass(frozen=True)
class SampleDistribution:
    """Measurement distribution over v in [0, D]^n plus the out-of-range rest."""

    arity: int
    D: int
    probs: np.ndarray = field(repr=False)   # shape (D+1,)*n
    out_mass: float = 0.0
    norm_sq: float = 1.0                    # discrete ||f||^2
    success_prob: float = 1.0               # per-attempt postselection probability

    def prob(self, v) -> float:
        return float(self.probs[tuple(v)])


def _axis_transform_rows(scfg: SamplerConfig) -> np.ndarray:
    """Rows <psibar_v| used for the per-axis inverse transform."""
    spec = GridSpec(scfg.M)
    basis = hermite_basis(spec, scfg.D)
    rows = basis.states.astype(complex)
    if scfg.transform == "pipeline":
        from .qht_pipeline import QHTConfig, qht_apply

        cfg = QHTConfig(N=scfg.D + 1, eps=scfg.qht_eps, M=scfg.M,
                        N_high=min(scfg.M // 2, 8 * (scfg.D + 1)))
        cols = []
        for n in range(scfg.D + 1):
            e = np.zeros(scfg.D + 1)
            e[n] = 1.0
            out = qht_apply(e, cfg).output
            if cfg.signed_output:
                out = out * (-1.0) ** n
            cols.append(out)
        rows = np.array(cols)
    elif scfg.transform != "reference":
        raise ValueError(f"unknown transform backend {scfg.transform!r}")
    return rows


def _amplitude_tensor(f: OracleFunction, scfg: SamplerConfig):
    """Per-axis ground states times f at the rescaled grid, then transformed.

    Returns (A, norm_sq, sup_f) with A[v] = <psibar_v x ...| f |psibar_0 x ...>.
    Product-structured oracles factor into per-axis 1-D transforms (any
    arity); dense tensor grids are supported for n <= 3 under the usual
    grid budget.
    """
    n = f.arity
    spec = GridSpec(scfg.M)
    y = spec.points()
    ground = hermite_basis(spec, 0).state(0)
    rows = _axis_transform_rows(scfg)
    if f.product_factors is not None:
        axis_A = []
        norm_sq, sup_f = 1.0, 1.0
        for i in range(n):
            fi = np.asarray(f.product_factors[i](math.sqrt(2.0) * y), dtype=float)
            Wi = ground * fi
            norm_sq *= float(np.sum(np.abs(Wi) ** 2))
            sup_f *= float(np.abs(fi).max())
            axis_A.append(rows @ Wi.astype(complex))
        A = axis_A[0]
        for i in range(1, n):
            A = np.multiply.outer(A, axis_A[i])
        return A, norm_sq, sup_f
    if n == 1:
        vals = f.evaluate(math.sqrt(2.0) * y[:, None])
        W = ground * vals
        norm_sq = float(np.sum(np.abs(W) ** 2))
        A = rows @ W.astype(complex)
        return A, norm_sq, float(np.abs(vals).max())
    if n == 2:
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        vals = f.evaluate(math.sqrt(2.0) * np.stack([Y1, Y2], axis=-1))
        W = np.outer(ground, ground) * vals
        norm_sq = float(np.sum(np.abs(W) ** 2))
        A = np.einsum("ai,bj,ij->ab", rows, rows, W.astype(complex))
        return A, norm_sq, float(np.abs(vals).max())
    if n == 3 and 3 * math.log2(scfg.M) <= FULL_GRID_BUDGET:
        D1 = rows.shape[0]
        A = np.zeros((D1, D1, D1), dtype=complex)
        norm_sq, sup_f = 0.0, 0.0
        Y2, Y3 = np.meshgrid(y, y, indexing="ij")
        ground2 = np.outer(ground, ground)
        for i, y1 in enumerate(y):  # chunk the leading axis to bound memory
            pts = np.stack([np.full_like(Y2, y1), Y2, Y3], axis=-1)
            vals = f.evaluate(math.sqrt(2.0) * pts)
            W = ground[i] * ground2 * vals
            norm_sq += float(np.sum(np.abs(W) ** 2))
            sup_f = max(sup_f, float(np.abs(vals).max()))
            A += np.multiply.outer(rows[:, i],
                                   np.einsum("bj,ck,jk->bc", rows, rows, W.astype(complex)))
        return A, norm_sq, sup_f
    raise ValueError(
        f"sampler simulation supports n <= 3 within the grid budget, got n={n}, M={scfg.M}")


_DIST_CACHE: dict = {}


def sample_distribution(f: OracleFunction, scfg: SamplerConfig,
                        normalized: bool = False) -> SampleDistribution:
    """Exact measurement distribution of the sampler circuit.

    Unbounded oracles are admitted by folding the amplitude rescale f/sup|f|
    into the controlled rotation; the accepted distribution is unchanged (it
    is fhat^2/||f||^2 either way) and only the postselection probability
    shrinks by sup|f|^2.  Distributions are memoized per (oracle, config):
    repeated draws then cost one inversion lookup each.
    """
    key = (id(f), scfg, normalized)
    cached = _DIST_CACHE.get(key)
    if cached is not None and cached[0] is f:
        return cached[1]
    dist = _build_distribution(f, scfg, normalized)
    if len(_DIST_CACHE) > 64:
        _DIST_CACHE.clear()
    _DIST_CACHE[key] = (f, dist)
    return dist


def _build_distribution(f: OracleFunction, scfg: SamplerConfig,
                        normalized: bool) -> SampleDistribution:
    A, norm_sq, sup_f = _amplitude_tensor(f, scfg)
    probs = np.abs(A) ** 2
    success = norm_sq / max(1.0, sup_f) ** 2
    if normalized:
        if norm_sq <= 0:
            raise ValueError("f vanishes on the grid; nothing to postselect")
        probs = probs / norm_sq
        total_target = 1.0
    else:
        total_target = norm_sq if not f.boolean else 1.0
    out = max(total_target - float(probs.sum()), 0.0)
    return SampleDistribution(arity=f.arity, D=scfg.D, probs=probs,
                              out_mass=out, norm_sq=norm_sq, success_prob=success)


def _draw(dist: SampleDistribution, rng: np.random.Generator, attempts: int) -> HermiteSample:
    flat = dist.probs.ravel()
    total = flat.sum() + dist.out_mass
    u = rng.random() * total
    cum = np.cumsum(flat)
    idx = int(np.searchsorted(cum, u))
    if idx >= len(flat):
        return HermiteSample(v=(dist.D + 1,) * dist.arity, attempts=attempts, out_of_range=True)
    v = np.unravel_index(idx, dist.probs.shape)
    return HermiteSample(v=tuple(int(c) for c in v), attempts=attempts)


def boolean_hermite_sample(f: OracleFunction, scfg: SamplerConfig,
                           rng: np.random.Generator) -> HermiteSample:
    """One spectrum draw for a ±1-valued oracle: p_v tracks fhat(v)^2."""
    if not f.boolean:
        raise ValueError("boolean sampler requires a ±1-valued oracle")
    dist = sample_distribution(f, scfg)
    return _draw(dist, rng, attempts=1)


def general_hermite_sample(f: OracleFunction, scfg: SamplerConfig,
                           rng: np.random.Generator) -> HermiteSample:
    """Rejection-sampled draw: p_v tracks fhat(v)^2 / ||f||^2.

    The per-attempt success probability is computed exactly from the state
    and the attempt count drawn as the matching geometric variable (the
    aggregated Bernoulli sequence); the declared distortion promises success
    >= 1/(2*kappa), and draws beyond attempt_cap_factor * kappa attempts are
    a reported failure, not an exception swallowed.
    """
    if f.boolean:
        dist = sample_distribution(f, scfg)
        return _draw(dist, rng, attempts=1)
    dist = sample_distribution(f, scfg, normalized=True)
    p_succ = min(dist.success_prob, 1.0)
    cap = max(1, int(scfg.attempt_cap_factor * f.kappa))
    attempt = int(rng.geometric(p_succ)) if p_succ < 1.0 else 1
    if attempt > cap:
        raise PostselectionFailure(
            f"no acceptance in {cap} attempts (success prob {p_succ:.3g}, kappa {f.kappa})")
    return _draw(dist, rng, attempts=attempt)


def distortion(f: OracleFunction, M_quad: int = 512) -> float:
    """kappa(f) = sup|f sqrt(nu)| / ||f sqrt(nu)||_2 over the quadrature grid."""
    n = f.arity
    if n * math.log2(M_quad) > FULL_GRID_BUDGET:
        raise ValueError("distortion budget exceeded")
    x, h = _quad_grid(M_quad)
    if n == 1:
        vals = f.evaluate(x[:, None])
        weighted = vals * np.sqrt(_nu(x))
    elif n == 2:
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        vals = f.evaluate(np.stack([X1, X2], axis=-1))
        weighted = vals * np.sqrt(_nu(X1) * _nu(X2))
    else:
        raise ValueError("distortion implemented for n <= 2")
    sup = float(np.abs(weighted).max())
    two = float(np.sqrt(h**n * np.sum(weighted**2)))
    return sup / two


def tv_distance(empirical: dict, table: SpectrumTable, D: int,
                norm_sq: float = 1.0) -> float:
    """(1/2) sum_v |phat_v - q_v| over [0, D]^n plus the out-of-range mass."""
    total = sum(empirical.values())
    if total <= 0:
        raise ValueError("empty histogram")
    q = table.probabilities(norm_sq)
    acc = 0.0
    out_mass = 0.0
    n = table.arity
    seen = set()
    for v, count in empirical.items():
        p_hat = count / total
        if any(c > D or c < 0 for c in v):
            out_mass += p_hat
            continue
        acc += abs(p_hat - q.get(tuple(v), 0.0))
        seen.add(tuple(v))
    for v, qv in q.items():
        if v not in seen and all(c <= D for c in v):
            acc += qv
    return 0.5 * acc + out_mass


def suggest_quadrature_M(f: OracleFunction, eps: float, gamma_const: float = 1.0,
                         c_const: float = 1.0) -> int:
    """Grid-size suggestion from the sampling analysis, constants taken as 1.

    The bound couples M to itself through L = sqrt(pi*M/2); one fixed-point
    pass starting from the degree term resolves it.  Unpinned constants mean
    this is advisory; the sampler takes M from its config.
    """
    P = f.input_bits if f.input_bits is not None else 8
    n, D = f.arity, max(f.degree_cutoff, 1)
    M = max(int(40 * gamma_const * D * math.log(2 * D)), 64)
    for _ in range(8):
        L = math.sqrt(math.pi * M / 2)
        target = max(2 * L * (2.0**P) * P * (n + math.log(max(n, 2)) + math.log(8 / eps)) / c_const,
                     40 * gamma_const * D * math.log(2 * D))
        new_M = 1 << max(6, int(math.ceil(math.log2(target))))
        if new_M == M:
            break
        M = new_M
    return M
