"""Inverse problems: fringe inversion, exponential fits, TDPS extraction.

Fits use damped Gauss-Newton steps with a Levenberg-Marquardt damping
schedule and analytic Jacobians. Rate constants are reported per hour while
time axes stay in seconds (the conversion lives inside the model
functions). Unless per-point uncertainties are supplied, the post-fit RMSE
is used as the per-point sigma estimate, which makes the reported reduced
chi-square N/(N-p) by construction; model comparison therefore uses ratios
of the unbiased residual variances, where that common scale cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    DomainError,
    PipelineError,
    SaturationError,
    UndefinedCorrelationError,
)
from .drift import DriftTrace, TdpsCurve, SECONDS_PER_HOUR

MAX_ITERATIONS = 200
REL_STEP_TOL = 1e-10

_LAMBDA_INIT = 1e-3
_LAMBDA_UP = 10.0
_LAMBDA_DOWN = 10.0
_LAMBDA_MAX = 1e12


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted parameters with 1-sigma uncertainties and fit diagnostics."""

    params: np.ndarray
    sigmas: np.ndarray
    rmse: float
    reduced_chi2: float
    converged: bool
    iterations: int
    covariance: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.rmse < 0 or self.reduced_chi2 < 0:
            raise DomainError("rmse and reduced chi-square must be >= 0")
        if np.any(np.asarray(self.sigmas) < 0):
            raise DomainError("uncertainties must be >= 0")

    def to_dict(self) -> dict:
        """JSON-safe export; non-finite uncertainties map to null."""
        return {
            "params": [float(p) for p in self.params],
            "sigmas": [float(s) if math.isfinite(s) else None for s in self.sigmas],
            "rmse": float(self.rmse),
            "reduced_chi2": float(self.reduced_chi2),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }


# ---------------------------------------------------------------------------
# model functions (time in seconds, rates per hour)

def exponential_model(t_s, params) -> np.ndarray:
    """y(t) = y_inf + (y0 - y_inf) * exp(-rate * t); params [y0, y_inf, rate]."""
    y0, y_inf, rate = params
    th = np.asarray(t_s, dtype=float) / SECONDS_PER_HOUR
    return y_inf + (y0 - y_inf) * np.exp(-rate * th)


def exponential_jacobian(t_s, params) -> np.ndarray:
    y0, y_inf, rate = params
    th = np.asarray(t_s, dtype=float) / SECONDS_PER_HOUR
    e = np.exp(-rate * th)
    return np.column_stack([e, 1.0 - e, -(y0 - y_inf) * th * e])


def double_exponential_model(t_s, params) -> np.ndarray:
    """y(t) = y_inf - a1*exp(-r1*t) - a2*exp(-r2*t); params [y_inf, a1, r1, a2, r2]."""
    y_inf, a1, r1, a2, r2 = params
    th = np.asarray(t_s, dtype=float) / SECONDS_PER_HOUR
    return y_inf - a1 * np.exp(-r1 * th) - a2 * np.exp(-r2 * th)


def double_exponential_jacobian(t_s, params) -> np.ndarray:
    _, a1, r1, a2, r2 = params
    th = np.asarray(t_s, dtype=float) / SECONDS_PER_HOUR
    e1 = np.exp(-r1 * th)
    e2 = np.exp(-r2 * th)
    return np.column_stack([np.ones_like(th), -e1, a1 * th * e1, -e2, a2 * th * e2])


# ---------------------------------------------------------------------------
# core optimizer

def _sigmas_from_normal_matrix(jtj: np.ndarray, scale: float) -> tuple:
    """1-sigma uncertainties from J^T J; degenerate directions come back inf."""
    diag = np.diag(jtj)
    floor = np.finfo(float).eps * max(float(diag.max(initial=0.0)), 1.0) * diag.size
    good = diag > floor
    sigmas = np.full(diag.size, np.inf)
    cov = np.full(jtj.shape, np.inf)
    if good.any():
        sub = jtj[np.ix_(good, good)]
        try:
            sub_inv = np.linalg.inv(sub)
        except np.linalg.LinAlgError:
            sub_inv = np.linalg.pinv(sub)
        sigmas[good] = np.sqrt(np.clip(np.diag(sub_inv), 0.0, None) * scale)
        cov[np.ix_(good, good)] = sub_inv * scale
    return sigmas, cov


def _levenberg_marquardt(model, jacobian, t, y, p0,
                         max_iter: int = MAX_ITERATIONS,
                         rel_tol: float = REL_STEP_TOL) -> FitResult:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    residual = y - model(t, p)
    ssr = float(residual @ residual)
    lam = _LAMBDA_INIT
    converged = False
    iterations = 0

    while iterations < max_iter and not converged:
        iterations += 1
        jac = jacobian(t, p)
        jtj = jac.T @ jac
        grad = jac.T @ residual
        damp = np.diag(jtj).copy()
        damp[damp <= 0.0] = 1.0
        accepted = False
        while lam <= _LAMBDA_MAX:
            aug = jtj + lam * np.diag(damp)
            try:
                step = np.linalg.solve(aug, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(aug, grad, rcond=None)[0]
            trial = p + step
            trial_residual = y - model(t, trial)
            trial_ssr = float(trial_residual @ trial_residual)
            if np.isfinite(trial_ssr) and trial_ssr <= ssr:
                accepted = True
                break
            lam *= _LAMBDA_UP
        if not accepted:
            # cannot decrease further at maximum damping: either we are at a
            # stationary point or genuinely stuck
            if float(np.max(np.abs(grad), initial=0.0)) <= 1e-8 * (1.0 + ssr):
                converged = True
                break
            result = _finalize(model, jacobian, t, y, p, False, iterations)
            raise ConvergenceError(
                f"no downhill step found after {iterations} iterations", result)
        if np.linalg.norm(step) <= rel_tol * (np.linalg.norm(trial) + rel_tol):
            converged = True
        p = trial
        residual = trial_residual
        ssr = trial_ssr
        lam = max(lam / _LAMBDA_DOWN, 1e-12)

    result = _finalize(model, jacobian, t, y, p, converged, iterations)
    if not converged:
        raise ConvergenceError(
            f"fit did not converge within {max_iter} iterations", result)
    return result


def _finalize(model, jacobian, t, y, p, converged, iterations) -> FitResult:
    residual = y - model(t, p)
    n, npar = residual.size, p.size
    ssr = float(residual @ residual)
    rmse = math.sqrt(ssr / n)
    dof = n - npar
    scale = ssr / dof if dof > 0 else 0.0
    jac = jacobian(t, p)
    sigmas, cov = _sigmas_from_normal_matrix(jac.T @ jac, scale)
    # per-point sigma defaults to the post-fit RMSE, so chi2/dof = N/dof
    reduced_chi2 = (ssr / (rmse ** 2) / dof) if dof > 0 and rmse > 0 else 0.0
    return FitResult(p, sigmas, rmse, reduced_chi2, converged, iterations,
                     covariance=cov)


# ---------------------------------------------------------------------------
# exponential fits

def _loglinear_rate(t_hr, z):
    """Slope fit of ln(z) vs t for positive z; returns (amplitude, rate) or None."""
    mask = z > 0
    if mask.sum() < 3:
        return None
    coef = np.polyfit(t_hr[mask], np.log(z[mask]), 1)
    if coef[0] >= 0:
        return None
    return math.exp(coef[1]), -coef[0]


def fit_exponential(t_s, y) -> FitResult:
    """Fit y(t) = y_inf + (y0 - y_inf) exp(-rate t); params [y0, y_inf, rate_per_hr].

    Needs at least 4 points and a non-degenerate time axis. Raises
    ``ConvergenceError`` (with the best parameters attached) if the damped
    iteration stalls.
    """
    t = np.asarray(t_s, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size != y.size or t.size < 4:
        raise DomainError("need at least 4 (t, y) pairs")
    if np.ptp(t) <= 0:
        raise DomainError("time axis is degenerate")

    t0 = t[0]
    th = (t - t0) / SECONDS_PER_HOUR
    span = float(th[-1]) if th[-1] > 0 else 1.0
    y_start, y_end = float(y[0]), float(y[-1])
    amplitude = y_start - y_end
    rate0 = 1.0 / (span / 3.0)
    if amplitude != 0.0:
        est = _loglinear_rate(th, (y - y_end) / amplitude)
        if est is not None:
            rate0 = est[1]
    # shift the t=0 intercept back to the absolute time origin
    y0_abs = y_end + amplitude * math.exp(min(rate0 * t0 / SECONDS_PER_HOUR, 50.0))
    return _levenberg_marquardt(exponential_model, exponential_jacobian,
                                t, y, [y0_abs, y_end, rate0])


def _grid_rate_search(t, y, span_hr: float):
    """Best (y_inf, a1, r1, a2, r2) over a coarse log grid of rate pairs.

    For fixed rates the remaining parameters are linear, so each grid node
    is a small least-squares solve (variable projection). Used only as a
    fallback start when the peeled initialization lands in the degenerate
    equal-rates valley.
    """
    th = np.asarray(t, dtype=float) / SECONDS_PER_HOUR
    rates = np.geomspace(0.25 / span_hr, 40.0 / span_hr, 12)
    best = None
    for i, r1 in enumerate(rates):
        e1 = np.exp(-r1 * th)
        for r2 in rates[:i]:
            design = np.column_stack([np.ones_like(th), -e1, -np.exp(-r2 * th)])
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            resid = y - design @ coef
            ssr = float(resid @ resid)
            if best is None or ssr < best[0]:
                best = (ssr, [coef[0], coef[1], r1, coef[2], r2])
    return best


def fit_double_exponential(t_s, y) -> FitResult:
    """Fit y(t) = y_inf - a1 exp(-r1 t) - a2 exp(-r2 t), returned with r1 > r2.

    Params [y_inf, a1, rate1_per_hr, a2, rate2_per_hr]. Initialization fits
    a single exponential to the tail (slow component) and peels the fast
    one off the early residual, then refines with the damped Gauss-Newton
    iteration. If that run fails to converge or ends worse than a coarse
    rate-grid solution, a second run starts from the grid point (guards
    against the equal-rates local minimum). Needs at least 6 points.
    """
    t = np.asarray(t_s, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size != y.size or t.size < 6:
        raise DomainError("need at least 6 (t, y) pairs")
    if np.ptp(t) <= 0:
        raise DomainError("time axis is degenerate")

    t0 = t[0]
    th = (t - t0) / SECONDS_PER_HOUR
    span = float(th[-1]) if th[-1] > 0 else 1.0

    # slow component from a single-exponential pre-fit on the tail half
    tail = th >= th[-1] / 2.0
    try:
        pre = fit_exponential(t[tail], y[tail])
    except (ConvergenceError, DomainError):
        pre = None
    if pre is not None and pre.params[2] > 0:
        y_inf0 = float(pre.params[1])
        r2_0 = float(pre.params[2])
        a2_0 = y_inf0 - float(pre.params[0])
    else:
        y_inf0 = float(y[-1])
        r2_0 = 0.5 / span
        a2_0 = 0.3 * (y_inf0 - float(y[0]))
    # fast component from the early residual after removing the slow part
    early = th <= th[-1] / 2.0
    shift_hr = t0 / SECONDS_PER_HOUR
    fast = _loglinear_rate(
        th[early],
        (y_inf0 - a2_0 * np.exp(-r2_0 * (th[early] + shift_hr))) - y[early])
    if fast is None:
        a1_0, r1_0 = (y_inf0 - float(y[0])) - a2_0, max(3.0 * r2_0, 3.0 / span)
    else:
        a1_0, r1_0 = fast
        a1_0 *= math.exp(min(r1_0 * shift_hr, 50.0))
    if r1_0 <= r2_0:
        r1_0 = 3.0 * r2_0

    try:
        best = _levenberg_marquardt(
            double_exponential_model, double_exponential_jacobian,
            t, y, [y_inf0, a1_0, r1_0, a2_0, r2_0])
    except ConvergenceError as exc:
        best = exc.result
    grid_ssr, grid_start = _grid_rate_search(t, y, span)
    if not best.converged or _ssr_of(best, t, y) > grid_ssr:
        try:
            other = _levenberg_marquardt(
                double_exponential_model, double_exponential_jacobian,
                t, y, grid_start)
        except ConvergenceError as exc:
            other = exc.result
        if (other.converged, -_ssr_of(other, t, y)) > \
                (best.converged, -_ssr_of(best, t, y)):
            best = other
    if not best.converged:
        raise ConvergenceError(
            f"fit did not converge within {MAX_ITERATIONS} iterations",
            _order_double_exponential(best))
    return _order_double_exponential(best)


def _ssr_of(result: FitResult, t, y) -> float:
    resid = np.asarray(y, dtype=float) - double_exponential_model(t, result.params)
    return float(resid @ resid)


def _order_double_exponential(result: FitResult) -> FitResult:
    if result.params[2] >= result.params[4]:
        return result
    perm = [0, 3, 4, 1, 2]
    cov = result.covariance
    if cov is not None:
        cov = cov[np.ix_(perm, perm)]
    return FitResult(result.params[perm], result.sigmas[perm], result.rmse,
                     result.reduced_chi2, result.converged, result.iterations,
                     covariance=cov)


# ---------------------------------------------------------------------------
# polynomial fits

def fit_polynomial(x, y, degree: int, sigma=None) -> FitResult:
    """Weighted least-squares polynomial fit; params ascending [c0, c1, ...].

    ``sigma`` gives per-point 1-sigma uncertainties for weighting and a
    meaningful reduced chi-square; without it the fit is unweighted. Needs
    at least degree+1 points (degree+2 for finite uncertainty estimates);
    a rank-deficient design (e.g. repeated abscissae) raises DomainError.
    """
    if degree not in (1, 2):
        raise DomainError(f"degree must be 1 or 2, got {degree}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    npar = degree + 1
    if x.size != y.size or x.size < npar:
        raise DomainError(f"need at least {npar} points for degree {degree}")
    design = np.vander(x, npar, increasing=True)
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.size != x.size or np.any(sigma <= 0):
            raise DomainError("sigma must be positive and match the data length")
        whitened = design / sigma[:, None]
        rhs = y / sigma
    else:
        whitened, rhs = design, y
    if np.linalg.matrix_rank(whitened) < npar:
        raise DomainError("design matrix is rank deficient")
    params, *_ = np.linalg.lstsq(whitened, rhs, rcond=None)
    residual = y - design @ params
    n = x.size
    dof = n - npar
    ssr = float(residual @ residual)
    rmse = math.sqrt(ssr / n)
    normal = whitened.T @ whitened
    if sigma is not None:
        chi2 = float(np.sum((residual / sigma) ** 2))
        reduced_chi2 = chi2 / dof if dof > 0 else 0.0
        sigmas, cov = _sigmas_from_normal_matrix(normal, 1.0)
    else:
        scale = ssr / dof if dof > 0 else 0.0
        reduced_chi2 = (ssr / (rmse ** 2) / dof) if dof > 0 and rmse > 0 else 0.0
        sigmas, cov = _sigmas_from_normal_matrix(normal, scale)
    return FitResult(params, sigmas, rmse, reduced_chi2, True, 1, covariance=cov)


def polynomial_vertex(params) -> float:
    """Stationary abscissa of a degree-2 polynomial (ascending coefficients)."""
    if len(params) != 3 or params[2] == 0:
        raise DomainError("vertex requires a degree-2 fit with nonzero curvature")
    return -float(params[1]) / (2.0 * float(params[2]))


def polynomial_slope(params, x: float) -> float:
    """Derivative of an ascending-coefficient polynomial at ``x``."""
    coeffs = np.asarray(params, dtype=float)
    powers = np.arange(1, coeffs.size)
    return float(np.sum(powers * coeffs[1:] * x ** (powers - 1)))


# ---------------------------------------------------------------------------
# scalar statistics and conversions

def pearson_correlation(x, y) -> float:
    """Product-moment correlation coefficient in [-1, 1]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise DomainError("series must have equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise UndefinedCorrelationError("a series has zero variance")
    return float(dx @ dy) / denom


def rmse_to_frequency(rmse_nm: float, delta_l0_m: float, f0_hz: float) -> float:
    """Laser frequency variation (Hz) that a path RMSE (nm) could hide."""
    if delta_l0_m <= 0:
        raise DomainError("nominal path must be positive")
    return rmse_nm * 1e-9 * f0_hz / delta_l0_m


def extract_path_from_power(trace: DriftTrace, alpha: float,
                            wavelength_m: float) -> np.ndarray:
    """Invert the fringe relation at the pi/2 operating point; returns nm.

    Uses alpha * P_ref as the per-sample input power. Valid only while the
    fringe stays on its monotonic branch (|k dL| < pi/2); samples at or past
    the fringe turning point raise ``SaturationError`` instead of silently
    unwrapping.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    if wavelength_m <= 0:
        raise DomainError("wavelength must be positive")
    alpha_p0 = alpha * trace.p_ref_w
    if np.any(alpha_p0 <= 0):
        raise DomainError("reference power must be positive")
    x = 2.0 * trace.p_plus_w / alpha_p0 - 1.0
    bad = np.abs(x) >= 1.0
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise SaturationError(
            f"sample {idx} left the invertible fringe branch "
            f"(normalized excursion {x[idx]:+.6f})")
    k = 2.0 * math.pi / wavelength_m
    return -np.arcsin(x) / k * 1e9


# ---------------------------------------------------------------------------
# TDPS pipeline

@dataclass(frozen=True, eq=False)
class TdpsPipelineResult:
    """Equilibrium curve extracted from a sequence of heating intervals."""

    curve: TdpsCurve
    selected_degree: int
    poly_fit: FitResult
    linear_fit: FitResult
    quadratic_fit: FitResult | None
    temperature_fits: tuple
    path_fits: tuple
    temperatures_c: np.ndarray
    cumulative_shift_nm: np.ndarray
    increment_sigmas_nm: np.ndarray


def tdps_pipeline(traces, alpha: float | None = None,
                  wavelength_m: float | None = None,
                  quadratic_improvement: float = 1.5) -> TdpsPipelineResult:
    """Per-interval exponential fits -> cumulative equilibrium curve.

    For each interval the temperature is fit with a single exponential
    (giving the settled temperature) and the path shift with a double
    exponential (giving the settled shift increment a1 + a2, which is
    baseline-free). Increments are accumulated from (initial temperature,
    0). Degree 1 and 2 polynomials are then fit; the quadratic is selected
    only if it lowers the unbiased residual variance by more than
    ``quadratic_improvement``.

    If ``alpha`` and ``wavelength_m`` are given, the path series is
    extracted from the recorded powers; otherwise the trace's path column
    is used directly.
    """
    traces = list(traces)
    if len(traces) < 2:
        raise PipelineError(f"need at least 2 intervals, got {len(traces)}")
    if (alpha is None) != (wavelength_m is None):
        raise DomainError("alpha and wavelength must be given together")

    temp_fits, path_fits = [], []
    t_eq, increments, inc_sigmas = [], [], []
    for i, trace in enumerate(traces):
        try:
            tfit = fit_exponential(trace.time_s, trace.temperature_c)
        except ConvergenceError as exc:
            raise PipelineError(f"interval {i}: temperature fit did not converge") from exc
        if alpha is not None:
            series = extract_path_from_power(trace, alpha, wavelength_m)
        else:
            series = trace.delta_l_nm
        try:
            pfit = fit_double_exponential(trace.time_s, series)
        except ConvergenceError as exc:
            raise PipelineError(f"interval {i}: path fit did not converge") from exc
        temp_fits.append(tfit)
        path_fits.append(pfit)
        t_eq.append(float(tfit.params[1]))
        increments.append(float(pfit.params[1] + pfit.params[3]))
        cov = pfit.covariance
        if cov is not None and np.all(np.isfinite(cov[np.ix_([1, 3], [1, 3])])):
            var = float(cov[1, 1] + cov[3, 3] + 2.0 * cov[1, 3])
            inc_sigmas.append(math.sqrt(max(var, 0.0)))
        else:
            inc_sigmas.append(float(np.hypot(pfit.sigmas[1], pfit.sigmas[3])))

    t_anchor = float(traces[0].temperature_c[0])
    temperatures = np.array([t_anchor] + t_eq)
    cumulative = np.concatenate([[0.0], np.cumsum(increments)])

    linear = fit_polynomial(temperatures, cumulative, 1)
    quadratic = None
    selected = 1
    if temperatures.size >= 4:
        quadratic = fit_polynomial(temperatures, cumulative, 2)
        n = temperatures.size
        s2_lin = linear.rmse ** 2 * n / (n - 2)
        s2_quad = quadratic.rmse ** 2 * n / (n - 3) if n > 3 else 0.0
        if quadratic.params[2] != 0.0 and s2_quad > 0.0 \
                and s2_lin / s2_quad > quadratic_improvement:
            selected = 2

    if selected == 2:
        c0, c1, c2 = (float(v) for v in quadratic.params)
        vertex = -c1 / (2.0 * c2)
        curve = TdpsCurve("quadratic", 0.0, vertex, curvature_nm_per_c2=c2,
                          offset_nm=c0 - c1 * c1 / (4.0 * c2))
        poly = quadratic
    else:
        c0, c1 = (float(v) for v in linear.params)
        curve = TdpsCurve("linear", c1, t_anchor, offset_nm=c0 + c1 * t_anchor)
        poly = linear

    return TdpsPipelineResult(
        curve=curve, selected_degree=selected, poly_fit=poly,
        linear_fit=linear, quadratic_fit=quadratic,
        temperature_fits=tuple(temp_fits), path_fits=tuple(path_fits),
        temperatures_c=temperatures, cumulative_shift_nm=cumulative,
        increment_sigmas_nm=np.array(inc_sigmas))
