"""Content-addressed solve cache.

Profiles persist in the container format from :mod:`fracnls.spectral`, with
a JSON sidecar for the solve metadata; the key hashes (s, N, L, M, method,
tol) together with the artifact version so stale entries invalidate on a
version bump.  Cache hits skip recomputation and reproduce results
bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import __version__
from .spectral import load_profile, save_profile
from .solvers import SolveResult

CACHE_ENV = "FRACNLS_CACHE"


def cache_key(s: float, mass: float, length: float, points: int, method: str, tol: float) -> str:
    payload = json.dumps(
        {
            "version": __version__,
            "s": repr(float(s)),
            "N": repr(float(mass)),
            "L": repr(float(length)),
            "M": int(points),
            "method": method,
            "tol": repr(float(tol)),
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "fracnls"))


def store_result(cache_dir, key: str, result: SolveResult, s: float, mass: float) -> None:
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    save_profile(
        cache_dir / f"{key}.prof",
        result.profile,
        s=s,
        mass=mass,
        multiplier=result.multiplier,
    )
    meta = {
        "multiplier": result.multiplier,
        "residual": result.residual,
        "energy": result.energy,
        "iterations": result.iterations,
        "converged": result.converged,
        "method": result.method,
        "stabilization": None if np.isnan(result.stabilization) else result.stabilization,
    }
    (cache_dir / f"{key}.json").write_text(json.dumps(meta, sort_keys=True))


def load_result(cache_dir, key: str) -> SolveResult | None:
    cache_dir = Path(cache_dir)
    prof_path = cache_dir / f"{key}.prof"
    meta_path = cache_dir / f"{key}.json"
    if not (prof_path.exists() and meta_path.exists()):
        return None
    profile, _ = load_profile(prof_path)
    meta = json.loads(meta_path.read_text())
    return SolveResult(
        profile=profile,
        multiplier=meta["multiplier"],
        residual=meta["residual"],
        energy=meta["energy"],
        iterations=meta["iterations"],
        converged=meta["converged"],
        method=meta["method"],
        stabilization=np.nan if meta["stabilization"] is None else meta["stabilization"],
    )


def cached_solve(cache_dir, s, mass, grid, method, tol, compute):
    """Return the cached SolveResult for this key, or compute and store it."""
    key = cache_key(s, mass, grid.length, grid.points, method, tol)
    hit = load_result(cache_dir, key)
    if hit is not None:
        return hit, True
    result = compute()
    store_result(cache_dir, key, result, s, mass)
    return result, False
