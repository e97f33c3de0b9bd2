"""Rayleigh-Ritz solver for the buckling and clamped polyharmonic problems.

The weak forms use the fact that for functions vanishing with their first
l-1 derivatives on the boundary, the order-l energy has Fourier symbol
``|xi|**(2l) = sum_p C(l, p) xi_x**(2p) xi_y**(2(l-p))``. The energy matrix is
therefore a binomial sum of Kronecker products of 1D Gram matrices, which
equals the ``(Delta^m u, Delta^m v)`` / ``(grad Delta^m u, grad Delta^m v)``
pairing exactly on the clamped basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .basis import MAX_BASIS, build_basis_1d, quadrature_points
from .core import DomainKind, ProblemKind, ProblemSpec, Spectrum
from .errors import SolverError, ValidationError

MAX_ASPECT = 1e3
PIVOT_DROP = 1e-14
EXTRA_EIGS = 4
MAX_MODES = 4096


@dataclass(frozen=True)
class SolveConfig:
    """Discretization settings.

    ``degree`` is the number of basis functions per dimension (an int, or a
    pair for rectangles). ``quadrature`` overrides the Gauss point count;
    ``mode_cutoff`` is the largest Fourier mode on a cylinder (``None``
    picks the smallest cutoff that provably captures the first ``k`` values).
    """

    k: int = 6
    degree: int | tuple[int, ...] = 16
    quadrature: int | None = None
    mode_cutoff: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("BAD_K", f"k must be >= 1, got {self.k}")
        degs = self.degree if isinstance(self.degree, tuple) else (self.degree,)
        if any(d < 1 for d in degs):
            raise ValidationError("BAD_DEGREE", f"degrees must be >= 1, got {self.degree}")
        if self.mode_cutoff is not None and self.mode_cutoff < 0:
            raise ValidationError("BAD_MODE_CUTOFF", "mode cutoff must be >= 0")

    def degrees_for(self, domain_kind: DomainKind) -> tuple[int, ...]:
        dims = 2 if domain_kind is DomainKind.RECTANGLE else 1
        if isinstance(self.degree, tuple):
            if len(self.degree) == dims:
                return tuple(self.degree)
            if len(self.degree) == 1:
                return self.degree * dims
            raise ValidationError("BAD_DEGREE", f"{domain_kind.value} needs {dims} degrees")
        return (self.degree,) * dims

    def with_degree(self, degree) -> "SolveConfig":
        return SolveConfig(self.k, degree, self.quadrature, self.mode_cutoff)


@dataclass(frozen=True)
class RefinePolicy:
    rel_tol: float
    max_degree: int = MAX_BASIS
    start_degree: int = 8
    step: int = 4

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValidationError("BAD_TOLERANCE", "rel_tol must be positive")
        if self.max_degree < self.start_degree:
            raise ValidationError("BAD_POLICY", f"max_degree {self.max_degree} < start degree {self.start_degree}")
        if self.max_degree > MAX_BASIS:
            raise SolverError("N_TOO_LARGE", f"max_degree {self.max_degree} exceeds cap {MAX_BASIS}")


@dataclass(frozen=True)
class DiscreteForms:
    A: np.ndarray
    B: np.ndarray
    info: dict = field(default_factory=dict, compare=False)


def _gram_set(order, length, count, npts):
    basis = build_basis_1d(order, length, count)
    return {r: basis.gram(r, r, npts) for r in range(order + 1)}


def _npts(config: SolveConfig, count: int, order: int) -> int:
    return config.quadrature if config.quadrature is not None else quadrature_points(count, order)


def assemble_forms(problem: ProblemSpec, config: SolveConfig) -> DiscreteForms:
    """Energy matrix A and comparison matrix B on an interval or rectangle."""
    l = problem.order
    dom = problem.domain
    if dom.kind is DomainKind.CYLINDER:
        raise ValidationError("BAD_DOMAIN", "cylinders are solved mode by mode, see cylinder_mode_solve")
    degs = config.degrees_for(dom.kind)
    grams = []
    npts = []
    for length, n in zip(dom.lengths, degs):
        q = _npts(config, n, l)
        grams.append(_gram_set(l, length, n, q))
        npts.append(q)
    if dom.kind is DomainKind.INTERVAL:
        (g,) = grams
        A = g[l]
        B = g[1] if problem.kind is ProblemKind.BUCKLING else g[0]
    else:
        gx, gy = grams
        A = sum(math.comb(l, p) * np.kron(gx[p], gy[l - p]) for p in range(l + 1))
        if problem.kind is ProblemKind.BUCKLING:
            B = np.kron(gx[1], gy[0]) + np.kron(gx[0], gy[1])
        else:
            B = np.kron(gx[0], gy[0])
    return DiscreteForms(A, B, {"degrees": list(degs), "quadrature": npts})


def solve_generalized(forms: DiscreteForms, k: int):
    """Smallest ``k`` eigenpairs of ``A x = lam B x``.

    The energy matrix A is Jacobi-scaled and screened with a pivoted
    Cholesky; basis directions whose squared Schur pivot falls below
    ``1e-14`` are linearly dependent and dropped, which keeps the reduced
    problem a Rayleigh-Ritz restriction. The pencil is reduced through the
    Cholesky factor of A and the largest eigenvalues ``1/lam`` of
    ``L_A^-1 B L_A^-T`` are taken: their absolute error is ``eps / lam_min``,
    so the wanted small eigenvalues come out with relative accuracy even when
    B is numerically singular. Returned vectors are B-orthonormal and live in
    the full coefficient space.
    """
    A = np.asarray(forms.A, dtype=float)
    B = np.asarray(forms.B, dtype=float)
    n = A.shape[0]
    if k > n:
        raise SolverError("K_TOO_LARGE", f"requested {k} eigenvalues from a {n}x{n} problem")
    d = np.diag(A)
    if not np.all(d > 0):
        raise SolverError("CONDITIONING", "energy matrix has a non-positive diagonal")
    s = 1.0 / np.sqrt(d)
    As = A * s[:, None] * s[None, :]
    Bs = B * s[:, None] * s[None, :]
    _, piv, rank, info = lapack.dpstrf(As, lower=1, tol=PIVOT_DROP)
    if info < 0:
        raise SolverError("CONDITIONING", f"pivoted Cholesky failed (info={info})")
    keep = np.arange(n) if rank == n else np.sort(piv[:rank] - 1)
    if rank < k:
        raise SolverError("CONDITIONING", f"only {rank} independent directions for {k} eigenvalues")
    try:
        La = sla.cholesky(As[np.ix_(keep, keep)], lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError("CONDITIONING", f"Cholesky of energy matrix failed: {exc}") from exc
    tmp = sla.solve_triangular(La, Bs[np.ix_(keep, keep)], lower=True)
    C = sla.solve_triangular(La, tmp.T, lower=True)
    C = 0.5 * (C + C.T)
    mu, y = sla.eigh(C, subset_by_index=[rank - k, rank - 1])
    if not mu[0] > 0:
        raise SolverError("CONDITIONING", "comparison form is not positive on the retained subspace")
    mu, y = mu[::-1], y[:, ::-1]
    xr = sla.solve_triangular(La.T, y, lower=False) / np.sqrt(mu)
    x = np.zeros((n, k))
    x[keep] = xr * s[keep, None]
    return 1.0 / mu, x


def _check_geometry(problem: ProblemSpec):
    if problem.domain.aspect_ratio > MAX_ASPECT:
        raise SolverError("ILL_PROPORTIONED", f"aspect ratio {problem.domain.aspect_ratio:g} exceeds {MAX_ASPECT:g}")


def _rel_change(new, old):
    return [abs(a - b) / abs(a) for a, b in zip(new, old)]


def _box_eigenvalues(problem: ProblemSpec, config: SolveConfig, degrees) -> tuple[np.ndarray, dict]:
    forms = assemble_forms(problem, config.with_degree(tuple(degrees)))
    dim = forms.A.shape[0]
    if config.k > dim:
        raise SolverError("K_TOO_LARGE", f"requested {config.k} eigenvalues from a {dim}-dimensional space")
    w, _ = solve_generalized(forms, min(config.k + EXTRA_EIGS, dim))
    return w[: config.k], forms.info


def mode_forms(problem: ProblemSpec, config: SolveConfig, m: int) -> DiscreteForms:
    """1D forms for Fourier mode ``m`` on a cylinder."""
    l = problem.order
    circ, height = problem.domain.lengths
    (n,) = config.degrees_for(DomainKind.INTERVAL)
    q = _npts(config, n, l)
    g = _gram_set(l, height, n, q)
    kappa2 = (2.0 * math.pi * m / circ) ** 2
    A = sum(math.comb(l, p) * kappa2 ** (l - p) * g[p] for p in range(l + 1))
    if problem.kind is ProblemKind.BUCKLING:
        B = g[1] + kappa2 * g[0]
    else:
        B = g[0]
    return DiscreteForms(A, B, {"degrees": [n], "quadrature": [q]})


def mode_eigenvalues(problem: ProblemSpec, config: SolveConfig, m: int, count: int | None = None) -> np.ndarray:
    forms = mode_forms(problem, config, m)
    dim = forms.A.shape[0]
    count = dim if count is None else min(count, dim)
    w, _ = solve_generalized(forms, count)
    return w


def mode_floor(problem: ProblemSpec, m: int) -> float:
    """Lower bound for every eigenvalue carried by Fourier mode ``m``."""
    kappa2 = (2.0 * math.pi * m / problem.domain.lengths[0]) ** 2
    power = problem.order - 1 if problem.kind is ProblemKind.BUCKLING else problem.order
    return kappa2**power


def _cylinder_eigenvalues(problem: ProblemSpec, config: SolveConfig, degree: int):
    k = config.k
    per_mode = k + EXTRA_EIGS
    cfg = config.with_degree(degree)
    merged: list[float] = []
    m = 0
    limit = config.mode_cutoff if config.mode_cutoff is not None else MAX_MODES
    while m <= limit:
        w = mode_eigenvalues(problem, cfg, m, per_mode)
        merged.extend(w.tolist() if m == 0 else np.repeat(w, 2).tolist())
        merged.sort()
        if config.mode_cutoff is None and len(merged) >= k and merged[k - 1] <= mode_floor(problem, m + 1):
            break
        m += 1
    cutoff = min(m, limit)
    if len(merged) < k or merged[k - 1] > mode_floor(problem, cutoff + 1):
        raise SolverError(
            "MODE_CUTOFF_TOO_LOW",
            f"mode cutoff {cutoff} cannot certify the first {k} eigenvalues",
        )
    q = _npts(cfg, degree, problem.order)
    return np.array(merged[:k]), {"degrees": [degree], "quadrature": [q], "mode_cutoff": cutoff}


def cylinder_mode_solve(problem: ProblemSpec, config: SolveConfig) -> Spectrum:
    if problem.domain.kind is not DomainKind.CYLINDER:
        raise ValidationError("BAD_DOMAIN", "cylinder_mode_solve needs a cylinder domain")
    return compute_spectrum(problem, config)


def _raw_eigenvalues(problem: ProblemSpec, config: SolveConfig, degrees: tuple[int, ...]):
    if problem.domain.kind is DomainKind.CYLINDER:
        return _cylinder_eigenvalues(problem, config, degrees[0])
    return _box_eigenvalues(problem, config, degrees)


def compute_spectrum(problem: ProblemSpec, config: SolveConfig) -> Spectrum:
    """First ``config.k`` eigenvalues (Rayleigh-Ritz upper bounds).

    Convergence is the relative change against the basis two functions
    smaller in every direction (so both parities lose a function).
    """
    _check_geometry(problem)
    kind = DomainKind.INTERVAL if problem.domain.kind is DomainKind.CYLINDER else problem.domain.kind
    degrees = config.degrees_for(kind)
    values, info = _raw_eigenvalues(problem, config, degrees)
    info.setdefault("mode_cutoff", None)
    coarse = tuple(d - 2 for d in degrees)
    convergence = [math.inf] * len(values)
    if min(coarse) >= 1:
        try:
            old, _ = _raw_eigenvalues(problem, config, coarse)
            convergence = _rel_change(values, old)
        except SolverError:
            pass
    return Spectrum(problem, tuple(values.tolist()), tuple(convergence), info, converged=True)


def refine_until(problem: ProblemSpec, k: int, rel_tol: float, max_degree: int = MAX_BASIS,
                 start_degree: int = 8, mode_cutoff: int | None = None) -> Spectrum:
    """Grow the basis by 4 per step until the k-th value moves less than ``rel_tol``."""
    policy = RefinePolicy(rel_tol, max_degree, start_degree)
    _check_geometry(problem)
    config = SolveConfig(k=k, degree=start_degree, mode_cutoff=mode_cutoff)
    kind = DomainKind.INTERVAL if problem.domain.kind is DomainKind.CYLINDER else problem.domain.kind
    dims = len(config.degrees_for(kind))
    degree = start_degree
    values, info = _raw_eigenvalues(problem, config, (degree,) * dims)
    convergence = [math.inf] * k
    converged = False
    while degree + policy.step <= policy.max_degree:
        degree += policy.step
        new, info = _raw_eigenvalues(problem, config, (degree,) * dims)
        convergence = _rel_change(new, values)
        values = new
        if convergence[-1] < policy.rel_tol:
            converged = True
            break
    info.setdefault("mode_cutoff", None)
    return Spectrum(problem, tuple(values.tolist()), tuple(convergence), info, converged=converged)
