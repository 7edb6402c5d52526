"""Compliance statistics and their gradients, naive and SVD-accelerated.

For L loading scenarios f_i, the quantities of interest are the per-load
compliances C_i = f_i^T K^-1 f_i, their sample mean mu_C, sample
variance (denominator L - 1) and standard deviation, plus gradients of
weighted sums w^T C with respect to element densities rho.

Two evaluation routes are provided with identical results up to
round-off:

* naive: solve K u_i = f_i for every scenario (exactly L solves),
* SVD:   solve only against the n_s left singular vectors of F
         (exactly n_s solves), then recombine.

The SVD route's gradients use the trace identity
(grad_rho C^T w)_e = -tr(X Q_e^T K_e Q_e) with Q = K^-1 U S and
X = V^T diag(w) V, which costs O((n_E + L) n_s^2) on top of the solves.

Gradients here are with respect to rho; `pullback_to_x` maps them to the
design vector through a density pipeline.

Every evaluation caches its solves tagged with the factorization
generation of the stiffness system, and gradient calls reject caches
from a system that has since been refactorized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StaleCacheError
from .fea import StiffnessSystem
from .mesh import GroundMesh
from .pipeline import DensityField, DensityPipeline
from .scenarios import ScenarioMatrix, ThinSVD

# gathered element blocks are kept around this size during gradient assembly
_CHUNK_BYTES = 2**25

WEIGHT_KINDS = ("mean", "variance", "std", "mean_plus_m_std", "auglag")


@dataclass(frozen=True)
class NaiveCache:
    """Displacements u_i = K^-1 f_i for every scenario, kept for gradients."""

    displacements: np.ndarray  # (n_dofs, L)
    system: StiffnessSystem = field(repr=False)
    generation: int

    @property
    def n_scenarios(self) -> int:
        return self.displacements.shape[1]


@dataclass(frozen=True)
class TraceWorkspace:
    """Cached Q = K^-1 U S and the SVD factors needed for trace gradients."""

    Q: np.ndarray   # (n_dofs, n_s)
    Vt: np.ndarray  # (n_s, L)
    system: StiffnessSystem = field(repr=False)
    generation: int

    @property
    def n_s(self) -> int:
        return self.Q.shape[1]

    @property
    def n_scenarios(self) -> int:
        return self.Vt.shape[1]


@dataclass(frozen=True)
class ComplianceStats:
    """Per-load compliances and their sample statistics.

    `cache` is whichever of `NaiveCache` or `TraceWorkspace` the
    computing route produced, ready for the matching gradient call.
    The sample variance uses the L - 1 denominator and is zero for L = 1.
    """

    C: np.ndarray
    mean: float
    variance: float
    std: float
    cache: object

    @classmethod
    def from_compliances(cls, C: np.ndarray, cache) -> "ComplianceStats":
        C = np.asarray(C, dtype=float)
        mean = float(np.mean(C))
        if C.size > 1:
            centered = C - mean
            variance = float(centered @ centered / (C.size - 1))
        else:
            variance = 0.0
        return cls(C=C, mean=mean, variance=variance, std=float(np.sqrt(variance)), cache=cache)


def _check_fresh(cache) -> None:
    if cache.generation != cache.system.generation:
        raise StaleCacheError(
            "cached solves belong to factorization generation "
            f"{cache.generation}, system is at {cache.system.generation}"
        )


def _check_svd_matches(F: ScenarioMatrix, svd: ThinSVD) -> None:
    if svd.Vt.shape[1] != F.n_scenarios or not np.array_equal(svd.dofs, F.dofs):
        raise StaleCacheError("SVD does not belong to this scenario matrix")


# -- forward evaluations -----------------------------------------------------

def _solve_all_scenarios(sys: StiffnessSystem, F: ScenarioMatrix):
    """(C, NaiveCache) via one solve per scenario column."""
    U_all = sys.solve(F.to_dense())
    C = np.einsum("ki,ki->i", F.block, U_all[F.dofs, :])
    cache = NaiveCache(displacements=U_all, system=sys, generation=sys.generation)
    return C, cache


def _solve_singular_directions(sys: StiffnessSystem, svd: ThinSVD) -> TraceWorkspace:
    """Q = K^-1 U S via one solve per kept singular direction."""
    Q = sys.solve(svd.U * svd.S[None, :])
    return TraceWorkspace(Q=Q, Vt=svd.Vt, system=sys, generation=sys.generation)


def mean_compliance_naive(sys: StiffnessSystem, F: ScenarioMatrix):
    """Mean compliance by L direct solves; returns (mu_C, NaiveCache)."""
    C, cache = _solve_all_scenarios(sys, F)
    return float(np.mean(C)), cache


def mean_compliance_svd(sys: StiffnessSystem, svd: ThinSVD):
    """Mean compliance from the thin SVD of F; returns (mu_C, TraceWorkspace).

    mu_C = (1/L) sum_i S_i^2 U[:, i]^T K^-1 U[:, i], evaluated with n_s
    solves as (1/L) sum_i (U S)[:, i] . Q[:, i].
    """
    ws = _solve_singular_directions(sys, svd)
    B = svd.U[svd.dofs, :] * svd.S[None, :]
    mu = float(np.einsum("ki,ki->", B, ws.Q[svd.dofs, :]) / ws.n_scenarios)
    return mu, ws


def compliances_naive(sys: StiffnessSystem, F: ScenarioMatrix) -> ComplianceStats:
    """All load compliances by L direct solves."""
    C, cache = _solve_all_scenarios(sys, F)
    return ComplianceStats.from_compliances(C, cache)


def compliances_svd(sys: StiffnessSystem, F: ScenarioMatrix, svd: ThinSVD) -> ComplianceStats:
    """All load compliances from the thin SVD: C_i = f_i^T Q Vt[:, i]."""
    _check_svd_matches(F, svd)
    ws = _solve_singular_directions(sys, svd)
    C = np.einsum("ki,ki->i", F.block, ws.Q[F.dofs, :] @ ws.Vt)
    return ComplianceStats.from_compliances(C, ws)


# -- weight vectors for scalar objectives ------------------------------------

def sigma_floor(mean: float) -> float:
    """Below this, the compliance dispersion counts as degenerate."""
    return 1e-12 * max(1.0, mean)


def weight_vector(stats: ComplianceStats, kind: str, *, m: float | None = None,
                  lam: np.ndarray | None = None, r: float | None = None,
                  C_t: float | None = None) -> np.ndarray:
    """Gradient weights w such that grad(f(C)) = grad(C)^T w.

    Kinds
    -----
    mean            w = (1/L) 1
    variance        w = 2/(L-1) (C - mu 1)
    std             w = 1/((L-1) sigma) (C - mu 1)
    mean_plus_m_std w_mean + m * w_std  (requires m)
    auglag          lam + 2 r max(C - C_t, 0)  (requires lam, r, C_t)

    For the std-based kinds, a degenerate dispersion (sigma at or below
    `sigma_floor(mu)`, including the L = 1 case) yields zero std weights:
    the subgradient choice at the kink of sqrt at zero.
    """
    C, L = stats.C, stats.C.size
    if kind == "mean":
        return np.full(L, 1.0 / L)
    if kind == "variance":
        if L == 1:
            return np.zeros(1)
        return 2.0 / (L - 1) * (C - stats.mean)
    if kind == "std":
        if L == 1 or stats.std <= sigma_floor(stats.mean):
            return np.zeros(L)
        return (C - stats.mean) / ((L - 1) * stats.std)
    if kind == "mean_plus_m_std":
        if m is None:
            raise ValueError("mean_plus_m_std requires the multiplier m")
        return weight_vector(stats, "mean") + m * weight_vector(stats, "std")
    if kind == "auglag":
        if lam is None or r is None or C_t is None:
            raise ValueError("auglag requires lam, r and C_t")
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (L,))
        return lam + 2.0 * r * np.maximum(C - C_t, 0.0)
    raise ValueError(f"unknown weight kind {kind!r}; expected one of {WEIGHT_KINDS}")


# -- gradients over rho -------------------------------------------------------

def _element_chunks(n_elements: int, n_local: int, n_cols: int):
    chunk = max(1, _CHUNK_BYTES // (n_local * max(n_cols, 1) * 8))
    for start in range(0, n_elements, chunk):
        yield slice(start, min(start + chunk, n_elements))


def _weighted_element_quadratics(columns: np.ndarray, w: np.ndarray,
                                 ke: np.ndarray, edof: np.ndarray) -> np.ndarray:
    """g_e = sum_i w_i columns[edof_e, i]^T ke columns[edof_e, i]."""
    out = np.empty(edof.shape[0])
    for sl in _element_chunks(edof.shape[0], edof.shape[1], columns.shape[1]):
        T = columns[edof[sl], :]
        KT = np.einsum("ab,ebi->eai", ke, T)
        out[sl] = np.einsum("eai,eai,i->e", T, KT, w, optimize=True)
    return out


def _trace_element_quadratics(Q: np.ndarray, X: np.ndarray,
                              ke: np.ndarray, edof: np.ndarray) -> np.ndarray:
    """g_e = tr(X Q_e^T ke Q_e)."""
    out = np.empty(edof.shape[0])
    for sl in _element_chunks(edof.shape[0], edof.shape[1], Q.shape[1]):
        T = Q[edof[sl], :]
        KT = np.einsum("ab,ebj->eaj", ke, T)
        out[sl] = np.einsum("eai,eaj,ij->e", T, KT, X, optimize=True)
    return out


def weighted_gradient_naive(cache: NaiveCache, w: np.ndarray,
                            ke: np.ndarray, mesh: GroundMesh) -> np.ndarray:
    """(grad_rho C^T w)_e = -sum_i w_i u_i^T K_e u_i from cached solves."""
    _check_fresh(cache)
    w = np.asarray(w, dtype=float)
    if w.shape != (cache.n_scenarios,):
        raise ValueError(f"w must have shape ({cache.n_scenarios},), got {w.shape}")
    edof = mesh.element_dof_map()
    return -_weighted_element_quadratics(cache.displacements, w, ke, edof)


def weighted_gradient_svd(ws: TraceWorkspace, w: np.ndarray,
                          ke: np.ndarray, mesh: GroundMesh) -> np.ndarray:
    """(grad_rho C^T w)_e = -tr(X Q_e^T K_e Q_e) with X = V^T diag(w) V.

    Exact (not an approximation): equals the naive route up to round-off
    at O((n_E + L) n_s^2) cost beyond the cached solves.
    """
    _check_fresh(ws)
    w = np.asarray(w, dtype=float)
    if w.shape != (ws.n_scenarios,):
        raise ValueError(f"w must have shape ({ws.n_scenarios},), got {w.shape}")
    X = (ws.Vt * w[None, :]) @ ws.Vt.T
    edof = mesh.element_dof_map()
    return -_trace_element_quadratics(ws.Q, X, ke, edof)


def mean_gradient_naive(cache: NaiveCache, ke: np.ndarray, mesh: GroundMesh) -> np.ndarray:
    """Gradient of mu_C over rho from cached naive solves."""
    L = cache.n_scenarios
    return weighted_gradient_naive(cache, np.full(L, 1.0 / L), ke, mesh)


def mean_gradient_svd(ws: TraceWorkspace, ke: np.ndarray, mesh: GroundMesh) -> np.ndarray:
    """Gradient of mu_C over rho from the cached singular-direction solves.

    d mu_C / d rho_e = -(1/L) sum_i Q[:, i]_e^T K_e Q[:, i]_e, which is
    the trace form with X = (1/L) I.
    """
    _check_fresh(ws)
    edof = mesh.element_dof_map()
    X = np.eye(ws.n_s) / ws.n_scenarios
    return -_trace_element_quadratics(ws.Q, X, ke, edof)


def pullback_to_x(grad_rho: np.ndarray, pipeline: DensityPipeline,
                  field: DensityField) -> np.ndarray:
    """Map a gradient over physical densities to the design vector."""
    return pipeline.backward(field, grad_rho)
