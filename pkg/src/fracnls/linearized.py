"""Linearized operator around a converged minimizer and its kernel structure.

The conjugation term makes the linearization real-linear but not
complex-linear, so the operator is represented on stacked (Re f, Im f)
coordinates, where it is a real symmetric matrix: spectral symbol blocks
(even part symmetric, odd part antisymmetric) plus pointwise potentials.
Eigenanalysis, the two symmetry null directions, coercivity diagnostics,
and the constrained linear solve of the uniqueness argument live here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import circulant, eigh

from .spectral import Profile, SpectralGrid, derivative, sobolev_norm
from .symbols import ModelParams, symbol_nN
from .solvers import SolveResult

__all__ = [
    "LinearizedOperator",
    "LinearizedReport",
    "build_linearized",
    "local_limit_operators",
    "kernel_diagnostics",
    "constrained_solve",
    "LocalOperator",
]


def _stack(values: np.ndarray) -> np.ndarray:
    return np.concatenate([values.real, values.imag])


def _unstack(vec: np.ndarray) -> np.ndarray:
    m = vec.shape[0] // 2
    return vec[:m] + 1j * vec[m:]


@dataclass
class LinearizedOperator:
    """L f = n_N(D) f + theta f - (s+1)|R|^{2s} f - s |R|^{2s-2} R^2 conj(f)."""

    params: ModelParams
    profile: Profile
    theta: float
    symbol: np.ndarray = field(repr=False)  # n_N + theta on the grid frequencies
    v1: np.ndarray = field(repr=False)  # (s+1)|R|^{2s}
    w: np.ndarray = field(repr=False)  # s |R|^{2s-2} R^2 (conjugation coupling)
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def grid(self) -> SpectralGrid:
        return self.profile.grid

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Matrix-free application to a complex field."""
        out = np.fft.ifft(self.symbol * np.fft.fft(values))
        return out - self.v1 * values - self.w * np.conj(values)

    def apply_stacked(self, vec: np.ndarray) -> np.ndarray:
        return _stack(self.apply(_unstack(vec)))

    def dense(self) -> np.ndarray:
        """Real symmetric 2M x 2M matrix on stacked (Re, Im) coordinates."""
        if self._dense is None:
            m = self.grid.points
            col = np.fft.ifft(self.symbol)  # circulant column of the symbol part
            a = circulant(col.real)
            b = circulant(col.imag)
            v1 = np.diag(self.v1)
            wr = np.diag(self.w.real)
            wi = np.diag(self.w.imag)
            top = np.hstack([a - v1 - wr, -b - wi])
            bot = np.hstack([b - wi, a - v1 + wr])
            mat = np.vstack([top, bot])
            self._dense = 0.5 * (mat + mat.T)  # symmetrize roundoff
        return self._dense

    def kernel_candidates(self) -> tuple[np.ndarray, np.ndarray]:
        """The symmetry null directions iR and dR/dx, as complex fields."""
        r = self.profile.values
        dr = derivative(self.profile).values
        return 1j * r, dr


def build_linearized(result: SolveResult, params: ModelParams) -> LinearizedOperator:
    """Assemble the linearization around a converged renormalized minimizer."""
    if not result.converged:
        raise ValueError("linearization requires a converged solve")
    s = params.s
    grid = result.profile.grid
    r = result.profile.values
    absr = np.abs(r)
    pow2s = np.where(absr > 0.0, absr ** (2.0 * s), 0.0)
    # |R|^{2s-2} R^2 = |R|^{2s} (R/|R|)^2, continuous (-> 0) at zeros of R
    phase2 = np.where(absr > 0.0, (r / np.where(absr > 0.0, absr, 1.0)) ** 2, 0.0)
    return LinearizedOperator(
        params=params,
        profile=result.profile,
        theta=result.multiplier,
        symbol=symbol_nN(grid.xi, params) + result.multiplier,
        v1=(s + 1.0) * pow2s,
        w=s * pow2s * phase2,
    )


@dataclass
class LocalOperator:
    """One of the real local-limit operators L+ / L- around the closed form."""

    grid: SpectralGrid
    lam: float
    potential: np.ndarray = field(repr=False)

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = np.fft.ifft(self.grid.xi**2 * np.fft.fft(values))
        return out + self.lam * values - self.potential * values

    def dense(self) -> np.ndarray:
        col = np.fft.ifft(self.grid.xi**2 + self.lam).real
        return circulant(col) - np.diag(self.potential)


def local_limit_operators(s: float, lam: float, grid: SpectralGrid, base: Profile):
    """L+ h = |D|^2 h + lam h - (2s+1) R^{2s} h and L- g = |D|^2 g + lam g - R^{2s} g.

    `base` is the closed-form profile from local_ground_state(s, lam, grid);
    the operators act on real fields.
    """
    pot = np.abs(base.values) ** (2.0 * s)
    lplus = LocalOperator(grid, lam, (2.0 * s + 1.0) * pot)
    lminus = LocalOperator(grid, lam, pot)
    return lplus, lminus


@dataclass
class LinearizedReport:
    eigenvalues: np.ndarray  # six lowest, ascending
    near_zero: np.ndarray  # eigenvalues with |ev| below the kernel threshold
    correlations: tuple  # projection of (iR, dR) onto the near-zero eigenspace
    coercivity: float  # smallest |ev| outside the kernel pair
    norm_estimate: float
    threshold: float
    grid_length: float
    grid_points: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "eigenvalues": [float(v) for v in self.eigenvalues],
                "near_zero": [float(v) for v in self.near_zero],
                "correlations": [float(c) for c in self.correlations],
                "coercivity": float(self.coercivity),
                "norm_estimate": float(self.norm_estimate),
                "threshold": float(self.threshold),
                "grid": {"L": self.grid_length, "M": self.grid_points},
            },
            indent=2,
        )


def kernel_diagnostics(op: LinearizedOperator, rel_threshold: float = 1e-6) -> LinearizedReport:
    """Eigenanalysis of the symmetric form: kernel pair, correlations, coercivity.

    Exactly two eigenvalues are expected below rel_threshold times the
    operator-norm estimate; their eigenspace is compared against
    span{iR, dR/dx} through orthogonal projections.
    """
    mat = op.dense()
    evals, evecs = eigh(mat)
    norm_est = float(np.max(np.abs(evals)))
    threshold = rel_threshold * norm_est
    order = np.argsort(np.abs(evals))
    near_idx = [i for i in order if abs(evals[i]) <= threshold]
    kernel_pair = order[:2]
    basis = evecs[:, kernel_pair]
    ir, dr = op.kernel_candidates()
    correlations = []
    for cand in (ir, dr):
        v = _stack(cand)
        v = v / np.linalg.norm(v)
        correlations.append(float(np.linalg.norm(basis.T @ v)))
    rest = [abs(evals[i]) for i in order[2:]]
    return LinearizedReport(
        eigenvalues=np.sort(evals)[:6],
        near_zero=np.array([evals[i] for i in near_idx]),
        correlations=tuple(correlations),
        coercivity=float(min(rest)),
        norm_estimate=norm_est,
        threshold=threshold,
        grid_length=op.grid.length,
        grid_points=op.grid.points,
    )


def constrained_solve(
    op: LinearizedOperator, rhs: Profile, overlap_tol: float = 1e-8
) -> tuple[Profile, dict]:
    """Solve L f = F on the orthogonal complement of span{iR, dR/dx}.

    Uses the augmented saddle system with the two constraint columns; a
    right-hand side with symmetry components beyond overlap_tol is projected
    first and the projection is reported.  The returned info carries the
    stability quotient ||f||_{H^{s/2}} / ||F||_{H^{-s/2}} in the weighted
    spectral norms.
    """
    grid = op.grid
    h = grid.h
    ir, dr = op.kernel_candidates()
    c1, c2 = _stack(ir), _stack(dr)
    f_vec = _stack(rhs.values)
    info = {"projected": False, "overlaps": []}
    # the two symmetry directions are not mutually orthogonal (the complex
    # profile carries momentum), so the removal must solve the 2x2 Gram system
    cmat = np.stack([c1, c2], axis=1)
    gram = cmat.T @ cmat
    coeff = np.linalg.solve(gram, cmat.T @ f_vec)
    for c, co in zip((c1, c2), coeff):
        ov = h * float(f_vec @ c)
        info["overlaps"].append(ov)
        scale = np.linalg.norm(f_vec) * np.linalg.norm(c) * h
        if scale > 0 and abs(ov) > overlap_tol * scale:
            info["projected"] = True
    if info["projected"]:
        f_vec = f_vec - cmat @ coeff
    m2 = 2 * grid.points
    mat = op.dense()
    aug = np.zeros((m2 + 2, m2 + 2))
    aug[:m2, :m2] = mat
    aug[:m2, m2] = c1
    aug[:m2, m2 + 1] = c2
    aug[m2, :m2] = c1
    aug[m2 + 1, :m2] = c2
    b = np.concatenate([f_vec, [0.0, 0.0]])
    try:
        sol = np.linalg.solve(aug, b)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "singular augmented system: kernel dimension is not 2"
        ) from exc
    f = _unstack(sol[:m2])
    f_prof = Profile(grid, f)
    rhs_proj = Profile(grid, _unstack(f_vec))
    num = sobolev_norm(f_prof, op.params.s / 2.0)
    den = sobolev_norm(rhs_proj, -op.params.s / 2.0)
    info["stability_constant"] = num / den if den > 0 else np.inf
    info["constraint_residuals"] = (
        h * float(_stack(f) @ c1),
        h * float(_stack(f) @ c2),
    )
    return f_prof, info
