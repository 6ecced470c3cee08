"""Least-squares mBVD element extraction from an admittance trace.

Damped Gauss-Newton on the logs of the six elements.  Residuals are the
stacked real and imaginary admittance misfits, weighted toward relative
error so the series peak and the parallel notch carry comparable weight.
The procedure is deterministic: no randomness, fixed traversal order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeStaticCapacitance, NonFiniteResidual, ResonanceNotBracketed
from .extract import find_fs_fp
from .mbvd import MbvdParams, admittance, element_admittance, params_to_json
from .network import AdmittanceTrace

# same sanity cap MbvdParams enforces (c_m < 8 c_0), in log space
_LOG_CM_C0_CAP = np.log(8.0)


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 200
    # stop when the relative cost improvement of an accepted step drops below this
    residual_tol: float = 1e-10
    # or when the relative parameter step does
    step_tol: float = 1e-8
    # forward-difference step, relative in linear element space
    jacobian_step: float = 1e-6
    initial_damping: float = 1e-3
    damping_factor: float = 10.0
    max_damping: float = 1e12
    r_floor: float = 1e-6
    # largest accepted per-iteration move of any single log-parameter;
    # near-flat directions otherwise produce basin-hopping steps
    max_log_step: float = 4.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class FitResult:
    params: MbvdParams
    rms_residual: float
    iterations: int
    converged: bool
    cost_history: tuple[float, ...] = ()


def initial_guess(trace: AdmittanceTrace) -> MbvdParams:
    """Closed-form starting point from the resonance pair and the baseline.

    c_0 comes from the median susceptance slope below 0.9 f_s (or above
    1.1 f_p when the trace has no low side), c_m from the resonance spread,
    r_m from the peak conductance.  The derived f_s lands within a fraction
    of a percent of the |Y|-peak estimate.
    """
    f_s, f_p = find_fs_fp(trace)
    freqs = trace.frequencies
    omega = 2.0 * np.pi * freqs
    below = freqs < 0.9 * f_s
    above = freqs > 1.1 * f_p
    if np.any(below):
        region = below
    elif np.any(above):
        region = above
    else:
        raise ResonanceNotBracketed(
            "no samples outside [0.9 f_s, 1.1 f_p] to estimate the static capacitance"
        )
    c_0 = float(np.median(trace.y[region].imag / omega[region]))
    if c_0 <= 0:
        raise NegativeStaticCapacitance(
            f"static-capacitance estimate is {c_0:.3e} F; baseline looks inductive"
        )
    c_m = c_0 * (f_p**2 - f_s**2) / f_s**2
    l_m = 1.0 / ((2.0 * np.pi * f_s) ** 2 * c_m)
    r_m = max(1.0 / float(np.abs(trace.y).max()), 0.01)
    return MbvdParams(r_s=0.5, r_0=0.1, r_m=r_m, l_m=l_m, c_m=c_m, c_0=c_0)


def _log_vector(params: MbvdParams, r_floor: float) -> np.ndarray:
    return np.log(
        np.array(
            [
                max(params.r_s, r_floor),
                max(params.r_0, r_floor),
                max(params.r_m, r_floor),
                params.l_m,
                params.c_m,
                params.c_0,
            ]
        )
    )


def _params_from_log(x: np.ndarray, r_floor: float) -> MbvdParams:
    values = np.exp(x)
    return MbvdParams(
        r_s=max(float(values[0]), r_floor),
        r_0=max(float(values[1]), r_floor),
        r_m=max(float(values[2]), r_floor),
        l_m=float(values[3]),
        c_m=float(values[4]),
        c_0=float(values[5]),
    )


def _align_resonance(trace: AdmittanceTrace, init: MbvdParams) -> MbvdParams:
    """Retune the init so its series resonance sits on the |Y| peak.

    A high-Q model whose resonance misses the measured peak by more than a
    few linewidths gives the descent nothing to grab: the cheapest local
    move is to flatten the motional branch, which lands the fit in a
    useless basin.  Scaling l_m and c_m by a common factor moves f_s while
    preserving their ratio, so the rest of the init survives untouched.
    Best-effort: traces without a bracketed peak are left alone.
    """
    try:
        fs_data, _ = find_fs_fp(trace)
    except ResonanceNotBracketed:
        return init
    fs_init = 1.0 / (2.0 * np.pi * np.sqrt(init.l_m * init.c_m))
    if abs(fs_init - fs_data) <= 0.005 * fs_data:
        return init
    ratio = fs_init / fs_data
    try:
        return MbvdParams(
            r_s=init.r_s,
            r_0=init.r_0,
            r_m=init.r_m,
            l_m=init.l_m * ratio,
            c_m=init.c_m * ratio,
            c_0=init.c_0,
        )
    except ValueError:
        return init


def fit_mbvd(
    trace: AdmittanceTrace,
    init: MbvdParams,
    config: FitConfig | None = None,
) -> FitResult:
    """Refine mBVD elements against measured admittance.

    The initial point is first retuned onto the measured |Y| peak (see
    _align_resonance), then polished by damped Gauss-Newton.  Returns
    best-so-far with converged=False when the iteration budget or the
    damping range is exhausted.  Raises NonFiniteResidual when the model
    cannot be evaluated at the initial point.
    """
    cfg = config or FitConfig()
    freqs = trace.frequencies
    target = trace.y
    scale = float(np.abs(target).max())
    if not scale > 0:
        raise NonFiniteResidual("admittance trace is identically zero")
    sqrt_weight = 1.0 / np.maximum(np.abs(target), 0.01 * scale)

    def residual(x: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            r_s, r_0, r_m = np.maximum(np.exp(x[:3]), cfg.r_floor)
            l_m, c_m, c_0 = np.exp(x[3:])
            model = element_admittance(r_s, r_0, r_m, l_m, c_m, c_0, freqs)
            diff = model - target
            return np.concatenate([sqrt_weight * diff.real, sqrt_weight * diff.imag])

    init = _align_resonance(trace, init)
    x = _log_vector(init, cfg.r_floor)
    current = residual(x)
    if not np.all(np.isfinite(current)):
        raise NonFiniteResidual("model admittance is not finite at the initial point")
    cost = float(current @ current)
    history = [cost]
    damping = cfg.initial_damping
    identity = np.eye(x.size)
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        jacobian = np.empty((current.size, x.size))
        for j in range(x.size):
            probe = x.copy()
            probe[j] += cfg.jacobian_step
            jacobian[:, j] = (residual(probe) - current) / cfg.jacobian_step
        if not np.all(np.isfinite(jacobian)):
            raise NonFiniteResidual("Jacobian is not finite")
        jtj = jacobian.T @ jacobian
        jtr = jacobian.T @ current
        accepted = False
        best_gap = np.inf
        while damping <= cfg.max_damping:
            try:
                step = np.linalg.solve(jtj + damping * identity, -jtr)
            except np.linalg.LinAlgError:
                damping *= cfg.damping_factor
                continue
            x_trial = x + step
            # reject steps that leave the parameter sanity region or move
            # too far at once: near-flat directions otherwise carry the
            # iterate arbitrarily far for a vanishing cost change
            if (
                float(np.abs(step).max()) > cfg.max_log_step
                or x_trial[4] >= x_trial[5] + _LOG_CM_C0_CAP
            ):
                damping *= cfg.damping_factor
                continue
            trial = residual(x_trial)
            trial_cost = float(trial @ trial) if np.all(np.isfinite(trial)) else np.inf
            if trial_cost < cost:
                accepted = True
                break
            if np.isfinite(trial_cost):
                best_gap = min(best_gap, trial_cost - cost)
            damping *= cfg.damping_factor
        if not accepted:
            # no strictly decreasing step exists in the damping range; a
            # vanishing gap means we are sitting at a minimum
            converged = best_gap <= cfg.residual_tol * max(cost, 1e-300)
            break
        improvement = (cost - trial_cost) / cost if cost > 0 else 0.0
        step_size = float(np.linalg.norm(step)) / max(float(np.linalg.norm(x)), 1.0)
        x = x + step
        current = trial
        cost = trial_cost
        history.append(cost)
        damping = max(damping / cfg.damping_factor, 1e-15)
        if improvement < cfg.residual_tol or step_size < cfg.step_tol:
            converged = True
            break

    params = _params_from_log(x, cfg.r_floor)
    model = admittance(params, freqs)
    rms = float(np.sqrt(np.mean(np.abs(model - target) ** 2)))
    return FitResult(
        params=params,
        rms_residual=rms,
        iterations=iterations,
        converged=converged,
        cost_history=tuple(history),
    )


def result_to_json(result: FitResult) -> dict:
    """JSON-ready dict: element values plus the fit diagnostics."""
    payload = params_to_json(result.params)
    payload.update(
        rms_residual_s=result.rms_residual,
        iterations=result.iterations,
        converged=result.converged,
    )
    return payload
