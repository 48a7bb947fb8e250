"""Ground states and traveling-wave minimizers.

Two independent methods are implemented so that each serves as the other's
oracle: a Petviashvili fixed-point iteration (run inside a secant loop on
the multiplier when the mass is constrained) and a mass-projected descent
on the energy.  Both operate on the renormalized problem, where profiles
have O(1) width; all other formulations are reached through the exact
rescalings in :mod:`fracnls.renorm`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    Profile,
    SpectralGrid,
    make_grid,
    pad_evaluate,
)
from .symbols import ModelParams, symbol_nN

__all__ = [
    "SolveResult",
    "ContinuationPath",
    "ConvergenceError",
    "local_ground_state",
    "lambda_of_s",
    "petviashvili_solve",
    "petviashvili_mass_constrained",
    "gradient_flow_minimize",
    "descend_symbol",
    "fractional_ground_state",
    "continuation_in_N",
    "el_residual",
    "functional_energy",
]


class ConvergenceError(RuntimeError):
    """Solver failed to converge; carries the partial iteration log."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or {}


@dataclass
class SolveResult:
    """A converged profile with its multiplier, residual, energy, and log."""

    profile: Profile
    multiplier: float
    residual: float
    energy: float
    iterations: int
    converged: bool
    method: str
    stabilization: float = np.nan  # final Petviashvili factor, when applicable
    history: dict = field(default_factory=dict, repr=False)


@dataclass
class ContinuationPath:
    entries: list  # ordered (N, SolveResult)
    s: float
    direction: str

    def masses(self):
        return [n for n, _ in self.entries]

    def multipliers(self):
        return [r.multiplier for _, r in self.entries]


def _nonlinear_term(values: np.ndarray, p: float) -> np.ndarray:
    """|u|^{p-1} u evaluated with 2x zero padding (|u|^{p-1} := 0 at u = 0)."""
    q = p - 1.0

    def fn(v):
        a = np.abs(v)
        return np.where(a > 0.0, a**q, 0.0) * v

    return pad_evaluate(values, fn)


def _power_integral(grid: SpectralGrid, values: np.ndarray, p: float) -> float:
    """integral |u|^{p+1} with the same padded quadrature as the nonlinearity."""
    m = grid.points
    coeffs = np.fft.fft(values)
    padded = np.zeros(2 * m, dtype=complex)
    padded[: m // 2] = coeffs[: m // 2]
    padded[-m // 2 :] = coeffs[-m // 2 :]
    fine = np.fft.ifft(padded) * 2.0
    return float(grid.h / 2.0 * np.sum(np.abs(fine) ** (p + 1.0)))


def _sigma_array(grid: SpectralGrid, sigma) -> np.ndarray:
    vals = sigma(grid.xi) if callable(sigma) else np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("symbol is non-finite on the grid frequencies")
    return vals


def functional_energy(grid: SpectralGrid, values: np.ndarray, sigma, p: float) -> float:
    """E(u) = 1/2 <u, sigma(D) u> - (1/(p+1)) integral |u|^{p+1}.

    With sigma = n_N this is the renormalized energy; with sigma = n it is
    the beta-independent energy; with sigma = |xi|^2 the local one.
    """
    sig = _sigma_array(grid, sigma)
    coeffs = np.fft.fft(values)
    quad = grid.h / grid.points * float(np.sum(sig * np.abs(coeffs) ** 2))
    return 0.5 * quad - _power_integral(grid, values, p) / (p + 1.0)


def el_residual(grid: SpectralGrid, values: np.ndarray, sigma, theta: float, p: float) -> float:
    """Relative L2 norm of sigma(D)u + theta u - |u|^{p-1}u."""
    sig = _sigma_array(grid, sigma)
    w = _nonlinear_term(values, p)
    r = np.fft.ifft((sig + theta) * np.fft.fft(values)) - w
    return float(np.linalg.norm(r) / np.linalg.norm(values))


def rayleigh_multiplier(grid: SpectralGrid, values: np.ndarray, sigma, p: float) -> float:
    """theta = <|u|^{p-1}u - sigma(D)u, u> / <u, u>, the L2 pairing identity."""
    sig = _sigma_array(grid, sigma)
    w = _nonlinear_term(values, p)
    su = np.fft.ifft(sig * np.fft.fft(values))
    num = np.real(np.sum((w - su) * np.conj(values)))
    den = np.real(np.sum(values * np.conj(values)))
    return float(num / den)


def local_ground_state(s: float, lam: float, grid: SpectralGrid) -> Profile:
    """Closed-form positive even solution of -R'' + lam R - R^{2s+1} = 0.

    R(x) = ((s+1) lam)^{1/(2s)} sech^{1/s}(s sqrt(lam) x), sampled on the
    grid; evaluated through logs so large arguments cannot overflow.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    amp = ((s + 1.0) * lam) ** (1.0 / (2.0 * s))
    u = np.abs(s * math.sqrt(lam) * grid.x)
    sech_pow = np.exp((math.log(2.0) - u - np.log1p(np.exp(-2.0 * u))) / s)
    return Profile(grid, amp * sech_pow, gauge="fixed")


def lambda_of_s(s: float, grid: SpectralGrid | None = None) -> tuple[float, float]:
    """(rho0, lambda(s)) from the unit-multiplier ground state mass.

    rho0 is the trapezoid-rule mass of the sampled profile; lambda(s) =
    ((s(s-1)/2) rho0^s)^(-2/(2-s)).
    """
    if not 1.0 < s < 2.0:
        raise ValueError("lambda(s) requires 1 < s < 2")
    if grid is None:
        grid = make_grid(256.0, 8192)
    rho0 = local_ground_state(s, 1.0, grid).mass()
    lam = ((s * (s - 1.0) / 2.0) * rho0**s) ** (-2.0 / (2.0 - s))
    return rho0, lam


def petviashvili_solve(
    grid: SpectralGrid,
    sigma,
    theta: float,
    p: float,
    init: Profile,
    tol: float = 1e-10,
    max_iter: int = 2000,
) -> SolveResult:
    """Petviashvili iteration for sigma(D)u + theta u = |u|^{p-1}u.

    u <- M^gamma (sigma(D)+theta)^{-1}(|u|^{p-1}u) with the stabilization
    factor M = <(sigma(D)+theta)u, u> / <|u|^{p-1}u, u> and the
    contraction-optimal exponent gamma = p/(p-1).  Divergence is declared
    when M leaves [0.5, 2] for 50 consecutive iterations.
    """
    sig = _sigma_array(grid, sigma)
    denom = sig + theta
    if np.any(denom <= 0.0):
        raise ValueError("sigma + theta must be positive on all grid frequencies")
    if not np.any(init.values):
        raise ValueError("initial guess must be nonzero")
    gamma = p / (p - 1.0)
    u = init.values.astype(complex)
    m_hist, res_hist = [], []
    bad_streak = 0
    for it in range(1, max_iter + 1):
        w = _nonlinear_term(u, p)
        uh = np.fft.fft(u)
        wh = np.fft.fft(w)
        num = float(np.real(np.sum(denom * np.abs(uh) ** 2)))
        den = float(np.real(np.sum(wh * np.conj(uh))))
        if den <= 0.0:
            raise ConvergenceError(
                f"nonlinear pairing lost positivity at iteration {it}",
                {"M": m_hist, "residual": res_hist},
            )
        m_fac = num / den
        m_hist.append(m_fac)
        bad_streak = bad_streak + 1 if not 0.5 <= m_fac <= 2.0 else 0
        if bad_streak >= 50:
            raise ConvergenceError(
                f"stabilization factor out of [0.5, 2] for 50 iterations (M={m_fac:.3g})",
                {"M": m_hist, "residual": res_hist},
            )
        uh_next = (m_fac**gamma) * wh / denom
        u = np.fft.ifft(uh_next)
        res = float(np.linalg.norm(np.fft.ifft(denom * uh_next) - _nonlinear_term(u, p)) / np.linalg.norm(u))
        res_hist.append(res)
        # a residual can pass spuriously mid-collapse onto near-null symbol
        # modes; genuine fixed points also drive the stabilization to 1
        if res <= tol and abs(m_fac - 1.0) <= 1e-6:
            prof = Profile(grid, u)
            energy = functional_energy(grid, u, sig, p)
            return SolveResult(
                prof, float(theta), res, energy, it, True, "petviashvili",
                stabilization=m_fac, history={"M": m_hist, "residual": res_hist},
            )
    raise ConvergenceError(
        f"petviashvili did not reach tol={tol:g} in {max_iter} iterations "
        f"(residual {res_hist[-1]:.3e})",
        {"M": m_hist, "residual": res_hist},
    )


def petviashvili_mass_constrained(
    grid: SpectralGrid,
    params: ModelParams,
    mass: float | None = None,
    init: Profile | None = None,
    theta0: float | None = None,
    tol: float = 1e-10,
    mass_tol: float = 1e-11,
    max_outer: int = 60,
) -> SolveResult:
    """Solve n_N(D)R + theta R = |R|^{2s}R with the mass constraint.

    The multiplier is not known a priori; Petviashvili runs inside a
    one-dimensional secant loop on theta that enforces integral |R|^2 = s0
    (the mass-to-multiplier map is monotone near the small-mass limit).
    """
    s = params.s
    p = 2.0 * s + 1.0
    target = params.s0 if mass is None else mass
    sig = symbol_nN(grid.xi, params)
    if init is None:
        init = local_ground_state(s, params.lam, grid)
    th0 = params.lam if theta0 is None else theta0
    th1 = th0 * 1.05

    u = init
    solves = []

    def mass_at(theta, seed):
        r = petviashvili_solve(grid, sig, theta, p, seed, tol=tol)
        solves.append(r)
        return r.profile.mass(), r

    m0, r0 = mass_at(th0, u)
    m1, r1 = mass_at(th1, r0.profile)
    th_prev, m_prev = th0, m0
    th_cur, m_cur, r_cur = th1, m1, r1
    for _ in range(max_outer):
        if abs(m_cur - target) <= mass_tol * target:
            break
        if m_cur == m_prev:
            raise ConvergenceError("secant loop stalled: mass insensitive to theta")
        th_next = th_cur - (m_cur - target) * (th_cur - th_prev) / (m_cur - m_prev)
        if th_next <= 0.0:
            th_next = th_cur / 2.0
        th_prev, m_prev = th_cur, m_cur
        m_cur, r_cur = mass_at(th_next, r_cur.profile)
        th_cur = th_next
    else:
        raise ConvergenceError(
            f"mass constraint not met: |mass - target| = {abs(m_cur - target):.3e}"
        )
    # exact renormalization, then report the Rayleigh multiplier; at that
    # multiplier the residual is L2-orthogonal to the profile, so the
    # stabilization functional evaluates to 1 up to roundoff
    vals = r_cur.profile.values * math.sqrt(target / m_cur)
    theta = rayleigh_multiplier(grid, vals, sig, p)
    res = el_residual(grid, vals, sig, theta, p)
    energy = functional_energy(grid, vals, sig, p)
    uh = np.fft.fft(vals)
    num = float(np.real(np.sum((sig + theta) * np.abs(uh) ** 2)))
    den = float(np.real(np.sum(np.fft.fft(_nonlinear_term(vals, p)) * np.conj(uh))))
    total_iters = sum(r.iterations for r in solves)
    return SolveResult(
        Profile(grid, vals), theta, res, energy, total_iters, res <= 10 * tol,
        "petviashvili", stabilization=num / den,
        history={"outer_thetas": [r.multiplier for r in solves]},
    )


def descend_symbol(
    grid: SpectralGrid,
    sigma,
    p: float,
    mass: float,
    init: Profile,
    tol: float = 1e-10,
    max_iter: int = 20000,
    step0: float = 0.1,
    step_max: float = 1.0,
) -> SolveResult:
    """Mass-projected descent on E(u) = 1/2 <u,sigma(D)u> - |u|^{p+1}/(p+1).

    Steps along the negative Riemannian gradient sigma(D)u + theta u - w
    (theta the Rayleigh multiplier, w the nonlinearity) in the
    (sigma(D) + theta)^{-1} metric, renormalizes the mass after every step,
    and backtracks by halving on any energy increase; the step is re-grown
    on success so the iteration count stays at desk scale.  Terminates when
    the Euler-Lagrange residual drops below tol, or fails when the step
    underflows with non-monotone energy.
    """
    sig = _sigma_array(grid, sigma)
    if np.any(sig < 0.0):
        raise ValueError("descent preconditioner requires a nonnegative symbol")
    u = init.values.astype(complex)
    u *= math.sqrt(mass / (grid.h * np.sum(np.abs(u) ** 2)))
    tau = step0
    energy = functional_energy(grid, u, sig, p)
    e_hist, res_hist = [energy], []
    for it in range(1, max_iter + 1):
        w = _nonlinear_term(u, p)
        uh = np.fft.fft(u)
        su = np.fft.ifft(sig * uh)
        den = float(np.real(np.sum(u * np.conj(u))))
        theta = float(np.real(np.sum((w - su) * np.conj(u))) / den)
        grad = su + theta * u - w
        res = float(np.linalg.norm(grad) / np.linalg.norm(u))
        res_hist.append(res)
        if res <= tol:
            prof = Profile(grid, u)
            return SolveResult(
                prof, theta, res, energy, it, True, "gradient-flow",
                history={"energy": e_hist, "residual": res_hist},
            )
        shift = max(abs(theta), 1e-6)
        step_hat = np.fft.fft(grad) / (sig + shift)
        # energy roundoff floor: increments below a few ulps of the kinetic
        # scale are accepted so the line search cannot stall at convergence
        slack = 1e-13 * (1.0 + abs(energy))
        while True:
            cand = u - tau * np.fft.ifft(step_hat)
            cand *= math.sqrt(mass / (grid.h * np.sum(np.abs(cand) ** 2)))
            e_cand = functional_energy(grid, cand, sig, p)
            if e_cand <= energy + slack:
                u = cand
                energy = e_cand
                e_hist.append(energy)
                tau = min(tau * 1.5, step_max)
                break
            tau *= 0.5
            if tau < 1e-14:
                raise ConvergenceError(
                    "descent step underflow with non-monotone energy",
                    {"energy": e_hist, "residual": res_hist},
                )
    raise ConvergenceError(
        f"descent did not reach tol={tol:g} in {max_iter} iterations "
        f"(residual {res_hist[-1]:.3e})",
        {"energy": e_hist, "residual": res_hist},
    )


def gradient_flow_minimize(
    functional: str,
    mass: float,
    init: Profile | None,
    tol: float,
    *,
    grid: SpectralGrid,
    params: ModelParams,
) -> SolveResult:
    """Constrained minimization of the reduced energies.

    functional "Y_N": the renormalized problem at mass s0 (the native solver
    problem).  functional "I": the beta-independent problem at mass N; the
    minimizer has width 1/kappa, so the descent runs on the renormalized
    problem and the result is mapped back through the exact mass/energy
    scalings (profile on the metadata-rescaled grid, eta multiplier,
    energy I(S_N)).
    """
    from .renorm import scale_R_to_S  # deferred: renorm imports nothing from here

    s = params.s
    p = 2.0 * s + 1.0
    if functional == "Y_N":
        if abs(mass - params.s0) > 1e-12 * params.s0:
            raise ValueError("the renormalized problem fixes mass = s0")
        if init is None:
            init = local_ground_state(s, params.lam, grid)
        sig = symbol_nN(grid.xi, params)
        return descend_symbol(grid, sig, p, params.s0, init, tol=tol)
    if functional == "I":
        if params.mass_threshold is not None and mass >= params.mass_threshold:
            raise ValueError(
                f"mass {mass} is not below the ground-state threshold {params.mass_threshold}"
            )
        prm = params.with_mass(mass)
        renorm_res = gradient_flow_minimize("Y_N", prm.s0, init, tol, grid=grid, params=prm)
        s_prof = scale_R_to_S(renorm_res.profile, prm)
        eta = 0.5 * s * (s - 1.0) * prm.kappa**2 * renorm_res.multiplier
        e_scale = prm.s0 ** (s + 1.0) * mass ** (-(2.0 + s) / (2.0 - s))
        energy_i = renorm_res.energy / e_scale
        return SolveResult(
            s_prof, eta, renorm_res.residual, energy_i, renorm_res.iterations,
            renorm_res.converged, "gradient-flow", history=renorm_res.history,
        )
    raise ValueError(f"unknown functional {functional!r} (expected 'I' or 'Y_N')")


def fractional_ground_state(
    s: float, grid: SpectralGrid | None = None, validation: bool = False
) -> tuple[Profile, float, float]:
    """Ground state Q of |D|^s Q + Q = Q^{2s+1} and the sharp constant.

    Returns (Q, C_s, <Q,Q>) with C_s = (s+1)/<Q,Q>^s.  Q has an algebraic
    tail for s < 2, so the default torus is generous (L = 256).
    """
    if not (1.0 < s < 2.0) and not (s == 2.0 and validation):
        raise ValueError("fractional ground state requires 1 < s < 2 (s = 2 in validation mode)")
    if grid is None:
        grid = make_grid(256.0, 8192)
    init = Profile(grid, np.exp(-grid.x**2))
    sig = np.abs(grid.xi) ** s
    result = petviashvili_solve(grid, sig, 1.0, 2.0 * s + 1.0, init, tol=1e-12)
    q = result.profile
    # the solve is phase/translation-neutral: recentre and strip the phase
    from .renorm import gauge_fix

    q, _, _ = gauge_fix(q)
    mass = q.mass()
    c_s = (s + 1.0) / mass**s
    return q, c_s, mass


def continuation_in_N(
    s: float,
    n_list,
    grid: SpectralGrid,
    method: str = "petviashvili",
    direction: str = "down",
    tol: float = 1e-10,
    mass_threshold: float | None = None,
) -> ContinuationPath:
    """Solve along a mass path, seeding each solve from its neighbor.

    direction "down": descending masses, Gaussian seed at the largest N.
    direction "up": ascending masses, seeded from the closed-form local
    profile (the N -> 0 limit shape).  Both variants must agree after gauge
    fixing; that uniqueness probe lives in the test suite.
    """
    n_list = list(n_list)
    if direction == "down":
        n_sorted = sorted(n_list, reverse=True)
        seed = None  # Gaussian default inside the first solve
    elif direction == "up":
        n_sorted = sorted(n_list)
        seed = local_ground_state(s, lambda_of_s(s, grid)[1], grid)
    else:
        raise ValueError("direction must be 'down' or 'up'")
    if mass_threshold is not None:
        over = [n for n in n_sorted if n >= mass_threshold]
        if over:
            raise ValueError(f"masses {over} are not below the threshold {mass_threshold}")

    entries = []
    prev_prof = seed
    for n in n_sorted:
        prm = ModelParams(s, 0.0, n, mass_threshold=mass_threshold)
        init = prev_prof
        if init is None:
            init = Profile(grid, np.exp(-grid.x**2) * math.sqrt(prm.s0))
        try:
            if method == "petviashvili":
                res = petviashvili_mass_constrained(grid, prm, init=init, tol=tol)
            elif method == "gradient-flow":
                res = gradient_flow_minimize("Y_N", prm.s0, init, tol, grid=grid, params=prm)
            else:
                raise ValueError(f"unknown method {method!r}")
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"continuation aborted at N={n}: {exc}",
                {"partial_path": entries, "failed_N": n},
            ) from exc
        if entries:
            prev = entries[-1][1].profile.values
            rel = np.linalg.norm(res.profile.values - prev) / np.linalg.norm(prev)
            if rel > 0.5:
                raise ConvergenceError(
                    f"continuation step too large at N={n}: relative change {rel:.2f}",
                    {"partial_path": entries, "failed_N": n},
                )
        entries.append((n, res))
        prev_prof = res.profile
    return ContinuationPath(entries, s, direction)
