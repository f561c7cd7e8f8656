"""Hexagon packing: pack n unit regular hexagons into the smallest flat-topped
regular hexagon centered at the origin.

A solution is n centers plus n rotation angles; the container is never stored.
The reported side length is always the minimal enclosure of all 6n vertices, so
containment violations show up as a larger L rather than as a separate error.
Fitness is -L. Overlap is declared when the SAT depth of a pair exceeds
OVERLAP_TOL (touching is allowed).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from . import solutions
from .errors import ImprovementFailedError, InvalidSolutionError, MalformedSolutionError
from .geometry import (
    APOTHEM,
    CONTAINER_NORMALS,
    SQRT3,
    min_enclosing_side,
    pair_depths,
    pair_depths_batch,
    unit_hex_vertices,
)

OVERLAP_TOL = 1e-9
MAX_HEXAGONS = 64


@dataclass(frozen=True)
class HexConfig:
    """Packing solution: centers (n, 2) and angles (n,), both float arrays."""

    centers: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centers", np.asarray(self.centers, dtype=float))
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=float))
        n = self.angles.shape[0] if self.angles.ndim == 1 else -1
        if n < 1 or self.centers.shape != (n, 2):
            raise MalformedSolutionError(
                f"centers {self.centers.shape} / angles {self.angles.shape} mismatch")

    @property
    def n(self) -> int:
        return len(self.angles)

    def to_json(self) -> dict:
        return solutions.encode_hex(self.centers, self.angles)

    @classmethod
    def from_json(cls, obj: dict) -> "HexConfig":
        centers, angles = solutions.decode_hex(obj)
        return cls(centers, angles)


@dataclass(frozen=True)
class HexValidationReport:
    side_length: float
    overlaps: tuple  # of (i, j, depth) with depth > OVERLAP_TOL

    @property
    def valid(self) -> bool:
        return len(self.overlaps) == 0


def hex_validate(config: HexConfig) -> HexValidationReport:
    """Minimal enclosing side over all 6n vertices plus every overlapping pair."""
    if not (np.isfinite(config.centers).all() and np.isfinite(config.angles).all()):
        raise MalformedSolutionError("non-finite coordinate in configuration")
    verts = unit_hex_vertices(config.centers, config.angles).reshape(-1, 2)
    side = min_enclosing_side(verts)
    overlaps = []
    if config.n > 1:
        iu = np.triu_indices(config.n, 1)
        depths = pair_depths(config.centers, config.angles, iu)
        for k in np.nonzero(depths > OVERLAP_TOL)[0]:
            overlaps.append((int(iu[0][k]), int(iu[1][k]), float(depths[k])))
    return HexValidationReport(side_length=side, overlaps=tuple(overlaps))


def hex_fitness(config: HexConfig) -> float:
    """-L for a valid configuration; raises on overlap."""
    report = hex_validate(config)
    if not report.valid:
        raise InvalidSolutionError(
            f"{len(report.overlaps)} overlapping pair(s), worst depth "
            f"{max(o[2] for o in report.overlaps):.3e}", report=report)
    return -report.side_length


# ---------------------------------------------------------------------------
# generate_config
# ---------------------------------------------------------------------------

# Honeycomb lattice of flat-topped unit hexagons: neighbor distance sqrt(3).
_LAT_A1 = np.array([1.5, SQRT3 / 2.0])
_LAT_A2 = np.array([1.5, -SQRT3 / 2.0])


def _lattice_sites(n: int) -> np.ndarray:
    sites = []
    for i in range(-8, 9):
        for j in range(-8, 9):
            sites.append((3 * (i * i + i * j + j * j), i, j))
    sites.sort()
    return np.array([i * _LAT_A1 + j * _LAT_A2 for _, i, j in sites[:n]])


def hex_generate(n: int, seed: int, jitter: float = 0.05,
                 angle_jitter: float = 0.05) -> HexConfig:
    """Valid start: first n honeycomb sites by distance to origin, with seeded
    jitter backed off geometrically until the validator passes.

    Lattice neighbors touch exactly, so raw jitter almost always creates some
    hairline overlap at every scale; each backoff step therefore also allows a
    minimal outward spread of at most 0.5% to clear contacts. The combination
    keeps starts distinct per seed while staying within a percent of the
    lattice enclosure."""
    if not (1 <= n <= MAX_HEXAGONS):
        raise ValueError(f"n must be in [1, {MAX_HEXAGONS}], got {n}")
    centers = _lattice_sites(n)
    angles = np.zeros(n)
    rng = np.random.default_rng(seed)
    # clipped at 2 sigma: a lone jittered hexagon must stay within L <= 1.2
    dc = np.clip(rng.normal(0.0, jitter, size=(n, 2)), -2 * jitter, 2 * jitter)
    da = np.clip(rng.normal(0.0, angle_jitter, size=n),
                 -2 * angle_jitter, 2 * angle_jitter)
    scale = 1.0
    for _ in range(20):
        cand_angles = angles + da * scale
        spread, cand_centers = _spread_to_valid(centers + dc * scale, cand_angles)
        if spread <= 1.005:
            return HexConfig(cand_centers, cand_angles)
        scale *= 0.5
    return HexConfig(centers, angles)  # unjittered lattice is always valid


# ---------------------------------------------------------------------------
# improve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HexImproveParams:
    optimizer: str = "gradient"      # "gradient" (L-BFGS-B) or "sqp" (SLSQP)
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_rounds: int = 4
    polish_rounds: int = 2           # extra x100 weight rounds for tight contact
    maxiter: int = 200
    bound_pad: float = 2.0
    gen_jitter: float = 0.05
    gen_angle_jitter: float = 0.05

    @classmethod
    def for_mode(cls, mode: str) -> "HexImproveParams":
        if mode == "sqp":
            # Softer penalty warm-up, relaxed bounds, higher iteration cap.
            return cls(optimizer="sqp", penalty_init=1.0, maxiter=500, bound_pad=6.0)
        if mode == "gradient":
            return cls()
        raise ValueError(f"unknown optimizer mode: {mode}")


_FD_H = 1e-7  # central-difference step for the SAT overlap terms
_K3 = np.array([0.0, np.pi / 3.0, 2.0 * np.pi / 3.0])


def _fold_halfwidth(theta, phi):
    d = np.mod(theta - phi, np.pi / 3.0)
    return np.cos(np.minimum(d, np.pi / 3.0 - d))


def _objective_factory(n: int, iu, weight: float):
    """L + w*sum(relu(depth)^2) + w*sum(relu(|v.n| - L*apothem)^2) with gradient.

    Containment terms are differentiated analytically. The piecewise-smooth SAT
    depths use central differences (h = 1e-7), evaluated sparsely: a center
    step leaves every support halfwidth unchanged (the axis projection shifts
    linearly, so no trigonometry is redone), and an angle step only touches
    that hexagon's n-1 pairs.
    """
    k6 = np.arange(6) * (np.pi / 3.0)
    # per hexagon i: its n-1 pairs, the other member, and the sign of
    # d(delta c)/d(c_i) for each (pairs store c[j] - c[i] with i < j)
    pair_of = np.empty((n, max(n - 1, 1)), dtype=int)
    other = np.empty((n, max(n - 1, 1)), dtype=int)
    csign = np.empty((n, max(n - 1, 1)))
    if n > 1:
        lookup = {}
        for k, (i, j) in enumerate(zip(*iu)):
            lookup[(int(i), int(j))] = k
        for i in range(n):
            col = 0
            for j in range(n):
                if j == i:
                    continue
                if i < j:
                    pair_of[i, col] = lookup[(i, j)]
                    csign[i, col] = -1.0
                else:
                    pair_of[i, col] = lookup[(j, i)]
                    csign[i, col] = 1.0
                other[i, col] = j
                col += 1

    def overlap_terms(c, a):
        i, j = iu
        ti, tj = a[i], a[j]
        axes = np.concatenate([ti[:, None] + np.pi / 6.0 + _K3,
                               tj[:, None] + np.pi / 6.0 + _K3], axis=1)
        nvec = np.stack([np.cos(axes), np.sin(axes)], axis=2)
        dc = c[j] - c[i]
        sproj = np.einsum("pk,pak->pa", dc, nvec)
        hw = _fold_halfwidth(ti[:, None], axes) + _fold_halfwidth(tj[:, None], axes)
        return nvec, sproj, hw

    def angle_shift_depths(c, a, shift):
        """Depths of hexagon i's pairs with a[i] += shift, rows i = 0..n-1."""
        ti = (a[:, None] + shift)[:, :, None]                     # (n, 1, 1)
        tj = a[other][:, :, None]                                 # (n, n-1, 1)
        axes = np.concatenate([ti + np.pi / 6.0 + _K3 + np.zeros_like(tj),
                               tj + np.pi / 6.0 + _K3], axis=2)   # (n, n-1, 6)
        nvec = np.stack([np.cos(axes), np.sin(axes)], axis=3)
        dc = (c[other] - c[:, None, :]) * (-csign)[:, :, None]    # c[j] - c[i]
        proj = np.abs(np.einsum("iok,ioak->ioa", dc, nvec))
        hw = _fold_halfwidth(ti, axes) + _fold_halfwidth(tj, axes)
        return (hw - proj).min(axis=2)                            # (n, n-1)

    def fun(z):
        c = z[:2 * n].reshape(n, 2)
        a = z[2 * n:3 * n]
        L = z[3 * n]
        ang = a[:, None] + k6[None, :]
        cosv, sinv = np.cos(ang), np.sin(ang)
        verts = np.stack([c[:, 0][:, None] + cosv, c[:, 1][:, None] + sinv], axis=2)
        sproj = np.einsum("nvk,mk->nvm", verts, CONTAINER_NORMALS)
        act = np.maximum(np.abs(sproj) - L * APOTHEM, 0.0)
        f = L + weight * float(np.sum(act * act))
        g = np.zeros_like(z)
        g[3 * n] = 1.0 - weight * 2.0 * float(np.sum(act)) * APOTHEM
        coef = 2.0 * weight * act * np.sign(sproj)
        g[:2 * n] = np.einsum("nvm,mk->nk", coef, CONTAINER_NORMALS).ravel()
        dvert = np.stack([-sinv, cosv], axis=2)
        g[2 * n:3 * n] = np.einsum("nvm,mk,nvk->n", coef, CONTAINER_NORMALS, dvert)
        if n > 1:
            pnvec, psproj, phw = overlap_terms(c, a)
            base = np.maximum((phw - np.abs(psproj)).min(axis=1), 0.0)
            f += weight * float(base @ base)

            def pair_penalties(depths):                           # (n, n-1) -> (n,)
                r = np.maximum(depths, 0.0)
                return weight * np.sum(r * r, axis=1)

            # center coordinates: projection shifts by +-h * csign * n_xy
            hw_i = phw[pair_of]                                   # (n, n-1, 6)
            sp_i = psproj[pair_of]
            shift = csign[:, :, None] * _FD_H
            for axis_xy in (0, 1):
                comp = pnvec[pair_of, :, axis_xy]
                plus = (hw_i - np.abs(sp_i + shift * comp)).min(axis=2)
                minus = (hw_i - np.abs(sp_i - shift * comp)).min(axis=2)
                g[axis_xy:2 * n:2] += (pair_penalties(plus)
                                       - pair_penalties(minus)) / (2.0 * _FD_H)
            # angles: redo the n-1 affected pairs per hexagon
            plus = angle_shift_depths(c, a, _FD_H)
            minus = angle_shift_depths(c, a, -_FD_H)
            g[2 * n:3 * n] += (pair_penalties(plus)
                               - pair_penalties(minus)) / (2.0 * _FD_H)
        return f, g

    return fun


def _separate_duplicates(centers: np.ndarray) -> np.ndarray:
    """Nudge exactly-coincident centers apart so outward scaling can separate them."""
    c = centers.copy()
    n = len(c)
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(c[j] - c[i])) < 1e-12:
                t = 2.0 * np.pi * (j + 1) / (n + 1)
                c[j] = c[j] + 1e-3 * np.array([math.cos(t), math.sin(t)])
    return c


def _spread_to_valid(centers: np.ndarray,
                     angles: np.ndarray) -> tuple[float, np.ndarray]:
    """Scale centers outward about the origin until every pair depth <= tol/2;
    returns (scale factor, scaled centers).

    Depth along each fixed axis decreases monotonically in the scale, so
    bisection applies. Always succeeds once centers are pairwise distinct.
    """
    n = len(angles)
    if n < 2:
        return 1.0, centers
    iu = np.triu_indices(n, 1)
    target = 0.5 * OVERLAP_TOL
    if pair_depths(centers, angles, iu).max() <= target:
        return 1.0, centers
    centers = _separate_duplicates(centers)
    hi = 1.0
    while pair_depths(centers * hi, angles, iu).max() > target:
        hi *= 1.3
        if hi > 1e9:
            raise ImprovementFailedError("could not separate overlapping hexagons")
    lo = 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if pair_depths(centers * mid, angles, iu).max() > target:
            lo = mid
        else:
            hi = mid
    return hi, centers * hi


def hex_improve(config: HexConfig, mode: str = "gradient",
                params: HexImproveParams | None = None,
                deadline: float | None = None) -> HexConfig:
    """Penalty-method refinement of a packing; repairs invalid inputs.

    Joint descent over (centers, angles, L) with escalating penalty weights;
    "gradient" runs bounded L-BFGS-B on the penalized objective, "sqp" runs
    SLSQP with explicit non-overlap/containment inequalities and the softer
    penalty warm-up. Never returns an invalid configuration, and never returns
    a worse side length than a valid input.
    """
    if params is None:
        params = HexImproveParams.for_mode(mode)
    n = config.n
    iu = np.triu_indices(n, 1)
    in_report = hex_validate(config)

    # angles drift across accepted perturbations; re-base once so the optimizer
    # box never silently clips them to a different orientation
    angles0 = np.mod(config.angles + np.pi, 2.0 * np.pi) - np.pi
    verts = unit_hex_vertices(config.centers, angles0).reshape(-1, 2)
    L0 = max(min_enclosing_side(verts), 1.0)
    z = np.concatenate([config.centers.ravel(), angles0, [L0]])
    span = max(float(np.abs(config.centers).max()) if n else 0.0, L0) + params.bound_pad
    bounds = [(-span, span)] * (2 * n) + [(-4 * np.pi, 4 * np.pi)] * n + [(1.0, None)]

    weights = [params.penalty_init * params.penalty_growth ** k
               for k in range(params.penalty_rounds)]
    weights += [weights[-1] * 100.0 ** (k + 1) for k in range(params.polish_rounds)]

    constraints = ()
    if params.optimizer == "sqp":
        def cons(zv):
            c = zv[:2 * n].reshape(n, 2)
            a = zv[2 * n:3 * n]
            L = zv[3 * n]
            vs = unit_hex_vertices(c, a)
            proj = np.abs(np.einsum("nvk,mk->nvm", vs, CONTAINER_NORMALS))
            parts = [(L * APOTHEM - proj).ravel()]
            if n > 1:
                parts.append(-pair_depths(c, a, iu))
            return np.concatenate(parts)
        constraints = ({"type": "ineq", "fun": cons},)

    def deadline_callback(_xk):
        if deadline is not None and time.monotonic() > deadline:
            raise StopIteration

    method = "SLSQP" if params.optimizer == "sqp" else "L-BFGS-B"
    for w in weights:
        try:
            res = minimize(_objective_factory(n, iu, w), z, jac=True, method=method,
                           bounds=bounds, constraints=constraints,
                           callback=deadline_callback,
                           options={"maxiter": params.maxiter})
        except (ValueError, FloatingPointError):
            break
        if np.isfinite(res.x).all():
            z = res.x
        if deadline is not None and time.monotonic() > deadline:
            break

    centers = z[:2 * n].reshape(n, 2)
    angles = z[2 * n:3 * n]
    try:
        _, centers = _spread_to_valid(centers, angles)
        out = HexConfig(centers, angles)
        out_report = hex_validate(out)
    except (ImprovementFailedError, MalformedSolutionError):
        out_report = None
        out = None
    if out_report is None or not out_report.valid:
        if in_report.valid:
            return config
        raise ImprovementFailedError("no valid configuration reached")
    if in_report.valid and out_report.side_length >= in_report.side_length:
        return config
    return out


# ---------------------------------------------------------------------------
# perturb
# ---------------------------------------------------------------------------

def hex_perturb(config: HexConfig, sigma: float, seed: int) -> HexConfig:
    """Gaussian kick of centers and angles; at sigma >= 10 one hexagon is also
    teleported uniformly inside the current enclosing hexagon. Output may be
    invalid by design; improve() is expected to repair it."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    centers = config.centers + rng.normal(0.0, min(sigma, 10.0) * 0.1,
                                          size=config.centers.shape)
    angles = config.angles + rng.normal(0.0, min(sigma, math.pi),
                                        size=config.angles.shape)
    if sigma >= 10.0:
        idx = int(rng.integers(config.n))
        verts = unit_hex_vertices(config.centers, config.angles).reshape(-1, 2)
        L = max(min_enclosing_side(verts), 1.0)
        while True:
            p = rng.uniform(-L, L, size=2)
            if np.abs(p @ CONTAINER_NORMALS.T).max() <= L * APOTHEM:
                break
        centers[idx] = p
    return HexConfig(centers, angles)


# ---------------------------------------------------------------------------
# operator-triple plumbing for the basin-hopping engine and the evolution loop
# ---------------------------------------------------------------------------

PARAM_SPEC = {
    "optimizer": ("enum", ("gradient", "sqp")),
    "penalty_init": ("float", 0.1, 1e4),
    "penalty_growth": ("float", 2.0, 100.0),
    "penalty_rounds": ("int", 3, 8),
    "polish_rounds": ("int", 0, 4),
    "maxiter": ("int", 20, 2000),
    "bound_pad": ("float", 0.5, 20.0),
    "gen_jitter": ("float", 0.0, 0.5),
    "gen_angle_jitter": ("float", 0.0, 1.0),
}


def default_payload(mode: str = "gradient") -> dict:
    p = HexImproveParams.for_mode(mode)
    return {name: getattr(p, name) for name in PARAM_SPEC}


def params_from_payload(payload: dict) -> HexImproveParams:
    known = {k: v for k, v in payload.items() if k in PARAM_SPEC}
    return replace(HexImproveParams(), **known)


def make_triple(n: int, payload: dict | None = None):
    """Built-in reference operators bound to a problem size and payload."""
    from .basinhop import OperatorTriple

    params = params_from_payload(payload) if payload else HexImproveParams()
    return OperatorTriple(
        generate=lambda seed: hex_generate(n, seed, jitter=params.gen_jitter,
                                           angle_jitter=params.gen_angle_jitter),
        improve=lambda cfg, deadline=None: hex_improve(
            cfg, mode=params.optimizer, params=params, deadline=deadline),
        perturb=lambda cfg, sigma, seed: hex_perturb(cfg, sigma, seed),
    )
