"""Augmented Lagrangian solver for maximum-compliance-constrained volume
minimization.

The problem treated is

    min V(x)  s.t.  C_i(x) <= C_t  for every scenario i,  x in [0, 1]^n_E

relaxed to the box-constrained augmented Lagrangian

    L(x) = V(x) + sum_i lambda_i (Ct_i - Ct_t) + r sum_i max(Ct_i - Ct_t, 0)^2

where Ct denotes compliances divided by a fixed normalization (the full
ground structure's maximum compliance), which keeps lambda and r in a
mesh-independent scale. The primal problem for fixed (lambda, r) is
solved by projected gradient descent with a backtracking (Armijo) line
search and a trust region; after each primal phase the multipliers take
the projected dual ascent step

    lambda <- max(0, lambda + 2 r (Ct - Ct_t))

using the signed constraint values (the gradient of L in lambda), so
multipliers of slack constraints decay to zero while violated ones grow.
The penalty coefficient grows geometrically per dual iteration.

A non-finite threshold C_t switches the constraint machinery off
entirely, leaving plain volume minimization over the box.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError
from .mma import scaled_kkt_residual

ARMIJO_C = 1e-4
MAX_HALVINGS = 30
STEP_GROWTH = 1.5


@dataclass
class AugLagState:
    """Multipliers, penalty and loop settings of one augmented Lagrangian run.

    Defaults follow the benchmark settings: unit initial multipliers,
    initial penalty 0.1 growing threefold per dual iteration, trust
    region 0.1, 10 dual iterations of at most 50 primal steps each.
    `C_t` is the raw (unnormalized) compliance threshold.
    """

    C_t: float
    lam: np.ndarray | None = None
    r: float = 0.1
    trust_region: float = 0.1
    dual_iters: int = 10
    primal_iters: int = 50
    growth: float = 3.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"penalty coefficient must be positive, got {self.r}")
        if self.lam is not None:
            self.lam = np.asarray(self.lam, dtype=float)
            if np.any(self.lam < 0):
                raise ValueError("multipliers must be nonnegative")


@dataclass
class AugLagResult:
    x: np.ndarray
    objective: float
    compliances: np.ndarray
    max_violation: float
    lam: np.ndarray
    r: float
    n_primal_iters: int
    violation_history: list = field(default_factory=list)


def projected_gradient_step(x, grad, step, trust_region, lower=0.0, upper=1.0):
    """One projected step: clip(x - step*grad) onto box AND trust region."""
    lo = np.maximum(lower, x - trust_region)
    hi = np.minimum(upper, x + trust_region)
    return np.clip(x - step * grad, lo, hi)


def _lagrangian(ev, lam, r, ct_norm, norm):
    """Value of L at an evaluated point; no constraint terms if C_t not finite."""
    if not np.isfinite(ct_norm):
        return ev.objective
    violation = ev.compliances / norm - ct_norm
    M = np.maximum(violation, 0.0)
    return ev.objective + float(lam @ violation) + r * float(M @ M)


def _lagrangian_gradient(ev, lam, r, ct_norm, norm):
    if not np.isfinite(ct_norm):
        return ev.objective_gradient()
    M = np.maximum(ev.compliances / norm - ct_norm, 0.0)
    w = (lam + 2.0 * r * M) / norm
    return ev.objective_gradient() + ev.compliance_weighted_gradient(w)


def auglag_minimize(evaluate, x0, state: AugLagState, tol,
                    normalization: float = 1.0, callback=None) -> AugLagResult:
    """Run the full dual loop; returns the final primal point.

    Parameters
    ----------
    evaluate : callable
        Maps x to an evaluation object exposing `objective` (float),
        `compliances` (raw, ndarray), `objective_gradient()` and
        `compliance_weighted_gradient(w)` (both gradients over x; the
        weights passed in are already normalized).
    tol : float
        Primal stopping threshold on the scaled projected KKT residual.
    normalization : float
        Positive scale dividing compliances and threshold (typically the
        full-design maximum compliance).
    callback : callable, optional
        Called as callback(dual_iter, primal_iter, x, lagrangian_value).

    Raises
    ------
    InfeasibleError
        If a finite threshold is violated by more than 1% at the end and
        the dual loop made no progress on the violation.
    """
    if not normalization > 0:
        raise ValueError("normalization must be positive")
    x = np.asarray(x0, dtype=float).copy()
    ev = evaluate(x)
    L_count = ev.compliances.size
    lam = np.ones(L_count) if state.lam is None else state.lam.copy()
    if lam.shape != (L_count,):
        raise ValueError(f"lam must have shape ({L_count},), got {lam.shape}")
    r = state.r
    ct_norm = state.C_t / normalization
    max_step = 1.0
    total_primal = 0
    violation_history = []

    for dual_iter in range(state.dual_iters):
        L_val = _lagrangian(ev, lam, r, ct_norm, normalization)
        for primal_iter in range(state.primal_iters):
            grad = _lagrangian_gradient(ev, lam, r, ct_norm, normalization)
            residual = scaled_kkt_residual(x, grad, 0.0, 1.0,
                                           float(np.mean(np.abs(lam))))
            if residual <= tol:
                break
            # Armijo backtracking over the projected step
            step = max_step
            stalled = True
            for _ in range(MAX_HALVINGS):
                x_trial = projected_gradient_step(x, grad, step, state.trust_region)
                direction = x_trial - x
                if not np.any(direction):
                    break  # projection pinned every coordinate
                ev_trial = evaluate(x_trial)
                L_trial = _lagrangian(ev_trial, lam, r, ct_norm, normalization)
                if L_trial <= L_val + ARMIJO_C * float(grad @ direction):
                    x, ev, L_val = x_trial, ev_trial, L_trial
                    max_step = STEP_GROWTH * step
                    stalled = False
                    break
                step *= 0.5
            total_primal += 1
            if callback is not None:
                callback(dual_iter, primal_iter, x, L_val)
            if stalled:
                break  # no admissible decrease; let the dual update reshape L
        signed = ev.compliances / normalization - ct_norm
        violation_history.append(float(np.max(np.maximum(signed, 0.0), initial=0.0)))
        lam = np.maximum(0.0, lam + 2.0 * r * signed)
        r *= state.growth

    max_violation = violation_history[-1] if violation_history else 0.0
    if (np.isfinite(ct_norm) and max_violation > 0.01 * abs(ct_norm)
            and max_violation >= violation_history[0] and len(violation_history) > 1):
        raise InfeasibleError(
            f"constraint violation {max_violation:.3e} did not decrease over "
            f"{state.dual_iters} dual iterations (threshold {state.C_t:.6g})"
        )
    return AugLagResult(
        x=x,
        objective=ev.objective,
        compliances=ev.compliances,
        max_violation=max_violation * normalization,
        lam=lam,
        r=r,
        n_primal_iters=total_primal,
        violation_history=violation_history,
    )
