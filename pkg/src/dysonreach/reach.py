"""Finite covers of Dyson-term sets and of truncated attainable sets.

Everything here works on point clouds in R^d or C^d with the Euclidean norm
(a complex vector is measured through its real view in R^{2d}).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .controls import PiecewiseConstantControl, control_family
from .dyson import DysonConfig, choose_truncation, w_trajectories
from .errors import InvalidInputError, NetBudgetExceededError, UncoveredPointError
from .linops import as_operator, as_vector, operator_norm, semigroup_bounds

__all__ = [
    "EpsNet",
    "PartitionOfUnity",
    "sample_w_set",
    "greedy_eps_net",
    "covering_number",
    "verify_cover",
    "nearest_distances",
    "partition_weights",
    "minkowski_sum_net",
    "attainable_net",
    "sample_attainable_points",
    "obstruction_report",
    "unit_sphere_targets",
]

# Cap on the number of entries in one block of a pairwise distance matrix.
_BLOCK = 4_000_000
# Up to this real dimension nearest-center queries go through a k-d tree.
_TREE_DIM = 8


@dataclass
class EpsNet:
    """Finite set of centers whose ``radius``-balls cover ``source_count`` source points."""

    centers: np.ndarray
    radius: float
    source_count: int
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.centers)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass
class PartitionOfUnity:
    centers: np.ndarray
    delta: float

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers))
        if not self.delta > 0:
            raise InvalidInputError("delta must be positive")


def _as_points(points) -> np.ndarray:
    P = np.asarray(points)
    if P.ndim == 1:
        P = P.reshape(-1, 1) if P.size else P.reshape(0, 1)
    if P.ndim != 2:
        raise InvalidInputError(f"expected a 2-D point array, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidInputError("points must be finite")
    return P


def _real(P: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(P):
        return np.concatenate([P.real, P.imag], axis=-1)
    return P.astype(float, copy=False)


def _exact_recheck(X, C, d, idx, r):
    """Re-measure pairs whose distance sits within rounding of ``r`` against every nearby center."""
    near = np.nonzero(np.abs(d - r) <= 1e-10 * (r + 1.0))[0]
    for i in near:
        dist = np.linalg.norm(C - X[i], axis=1)
        j = int(np.argmin(dist))
        d[i], idx[i] = dist[j], j
    return d, idx


def _nearest(X: np.ndarray, C: np.ndarray, r: float | None = None):
    """Nearest-center distances and indices for real point sets ``X`` and ``C``.

    Distances of the winners are measured by direct subtraction, and any
    point within rounding of the threshold ``r`` is re-checked against all
    centers, so ``d <= r`` is an exact cover predicate.
    """
    if X.shape[1] <= _TREE_DIM:
        d, idx = cKDTree(C).query(X, k=1)
        idx = np.asarray(idx, dtype=int)
    else:
        d = np.empty(len(X))
        idx = np.empty(len(X), dtype=int)
        cn = (C * C).sum(1)
        rows = max(1, _BLOCK // len(C))
        for s in range(0, len(X), rows):
            Xb = X[s:s + rows]
            d2 = (Xb * Xb).sum(1)[:, None] + cn[None, :] - 2.0 * (Xb @ C.T)
            idx[s:s + rows] = np.argmin(d2, axis=1)
    d = np.linalg.norm(X - C[idx], axis=1)
    if r is not None and X.shape[1] > _TREE_DIM:
        # The Gram shortcut can pick a slightly farther center when two tie near the threshold.
        d, idx = _exact_recheck(X, C, d, idx, r)
    return d, idx


def _covered(X: np.ndarray, C: np.ndarray, r: float) -> np.ndarray:
    """Boolean mask: is each row of X within distance r (inclusive) of some row of C."""
    if len(C) == 0 or len(X) == 0:
        return np.zeros(len(X), dtype=bool)
    d, _ = _nearest(X, C, r)
    return d <= r


def nearest_distances(points, centers) -> np.ndarray:
    """Distance from each point to its nearest center."""
    X = _real(_as_points(points))
    C = _real(_as_points(centers))
    if len(C) == 0:
        raise InvalidInputError("no centers")
    return _nearest(X, C)[0]


def _greedy(chunks: Iterable[np.ndarray], eps: float, dim: int, limit: int | None = None):
    """Scan-order greedy admission over real point chunks; returns (center rows, count)."""
    centers = np.empty((0, dim))
    seen = 0
    for X in chunks:
        seen += len(X)
        pending = np.nonzero(~_covered(X, centers, eps))[0]
        if len(pending) == 0:
            continue
        Xc = X[pending]
        alive = np.ones(len(Xc), dtype=bool)
        admitted = []
        for j in range(len(Xc)):
            if not alive[j]:
                continue
            admitted.append(j)
            rest = slice(j + 1, None)
            near = np.linalg.norm(Xc[rest] - Xc[j], axis=1) <= eps
            alive[rest] &= ~near
        centers = np.vstack([centers, Xc[admitted]])
        if limit is not None and len(centers) > limit:
            raise NetBudgetExceededError(
                f"re-netting at radius {eps:.3g} exceeded {limit} centers; raise eps or the budget"
            )
    return centers, seen


def _chunks_of(P: np.ndarray, rows: int = 2048):
    for s in range(0, len(P), rows):
        yield P[s:s + rows]


def _from_real(R: np.ndarray, complex_out: bool) -> np.ndarray:
    if complex_out:
        d = R.shape[1] // 2
        return R[:, :d] + 1j * R[:, d:]
    return R


def greedy_eps_net(points, eps: float) -> EpsNet:
    """Greedy eps-net in scan order.

    A point becomes a center iff it is farther than ``eps`` from every center
    admitted before it. Each point is therefore either a center or within
    ``eps`` of one (checked exactly when it sits on the threshold), and
    distinct centers are more than ``eps`` apart.
    """
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    P = _as_points(points)
    R = _real(P)
    centers, seen = _greedy(_chunks_of(R), eps, R.shape[1])
    return EpsNet(_from_real(centers, np.iscomplexobj(P)), float(eps), seen)


def covering_number(points, eps: float) -> int:
    """Greedy covering number, an upper bound on the minimal one (and within the packing bound)."""
    return len(greedy_eps_net(points, eps))


def verify_cover(points, net: EpsNet, radius: float | None = None) -> np.ndarray:
    """Mask of points lying within ``radius`` (default ``net.radius``) of some center."""
    r = net.radius if radius is None else radius
    return _covered(_real(_as_points(points)), _real(_as_points(net.centers)), r)


def partition_weights(pou: PartitionOfUnity, x) -> np.ndarray:
    """Normalised hat weights of ``x``.

    Raw weight of center j is 1 within ``delta``, ``2 - d/delta`` on
    ``[delta, 2 delta)`` and 0 beyond. The query must lie in some open
    ``delta``-ball, otherwise the raw weights could all vanish.
    """
    x = np.asarray(x)
    C = pou.centers
    if x.shape != (C.shape[1],):
        raise InvalidInputError(f"query has shape {x.shape}, centers have dimension {C.shape[1]}")
    d = np.linalg.norm(C - x, axis=1)
    if not (d < pou.delta).any():
        raise UncoveredPointError(f"point is not within delta={pou.delta} of any center")
    raw = np.clip(2.0 - d / pou.delta, 0.0, 1.0)
    return raw / raw.sum()


def minkowski_sum_net(nets: Sequence[EpsNet], budget: int = 50_000, renet_radius: float | None = None,
                      max_centers: int | None = None) -> EpsNet:
    """Net of the Minkowski sum of the sets covered by ``nets``.

    Nets are folded left to right. While the running product of center
    counts stays within ``budget`` all sums are kept; otherwise the fold step
    is greedily re-netted at an even share of ``renet_radius`` (default: the
    combined radius of the inputs). The returned radius is the sum of input
    radii plus every share actually spent, so coverage stays sound. The
    budget triggers re-netting; it does not cap the output size. A re-net
    producing more than ``max_centers`` (default ``20 * budget``) centers
    raises NetBudgetExceededError.
    """
    if not nets:
        raise InvalidInputError("need at least one net")
    dims = {n.dim for n in nets}
    if len(dims) != 1:
        raise InvalidInputError(f"nets have mismatched dimensions {sorted(dims)}")
    if any(len(n) == 0 for n in nets):
        raise InvalidInputError("cannot sum an empty net")
    is_complex = any(np.iscomplexobj(n.centers) for n in nets)
    combined = sum(n.radius for n in nets)
    if renet_radius is None:
        renet_radius = combined
    share = renet_radius / max(len(nets) - 1, 1)
    limit = 20 * budget if max_centers is None else max_centers

    acc = _real(nets[0].centers.astype(complex) if is_complex else nets[0].centers)
    radius = nets[0].radius
    sources = len(nets[0])
    spent = 0.0
    for net in nets[1:]:
        C = _real(net.centers.astype(complex) if is_complex else net.centers)
        radius += net.radius
        sources *= len(net)
        if len(acc) * len(C) <= budget:
            acc = (acc[:, None, :] + C[None, :, :]).reshape(-1, acc.shape[1])
        else:
            rows = max(1, 2048 // len(C))
            chunks = ((acc[i:i + rows, None, :] + C[None, :, :]).reshape(-1, acc.shape[1])
                      for i in range(0, len(acc), rows))
            acc, _ = _greedy(chunks, share, acc.shape[1], limit)
            spent += share
    return EpsNet(_from_real(acc, is_complex), radius + spent, sources,
                  info={"renet_spent": spent, "input_radius": combined})


def _family_trajectories(A, B, psi0, controls, times, p_max, steps):
    """Trajectories for arbitrary controls, batched per shared breakpoint list, original order kept."""
    groups = {}
    for k, u in enumerate(controls):
        groups.setdefault(u.breakpoints, []).append(k)
    out = None
    for idx in groups.values():
        part = w_trajectories(A, B, psi0, [controls[k] for k in idx], times, p_max, steps)
        if out is None:
            out = np.empty((part.shape[0], len(controls)) + part.shape[2:], dtype=part.dtype)
        out[:, idx] = part
    return out


def _check_budget(controls, K):
    for k, u in enumerate(controls):
        if u.l1_norm() > K * (1 + 1e-12) + 1e-15:
            raise InvalidInputError(f"control {k} has L1 norm {u.l1_norm():.6g} > K={K}")


def sample_w_set(A, B, psi0, j: int, T: float, K: float, n_times: int,
                 controls: Sequence[PiecewiseConstantControl], cfg: DysonConfig | None = None) -> np.ndarray:
    """Points ``W_j(t_i, u_k) psi0`` on a uniform time grid of ``[0, T]``.

    Rows are ordered time-major, then by control index.
    """
    cfg = cfg or DysonConfig()
    if j < 0 or not T > 0 or n_times < 1:
        raise InvalidInputError("need j >= 0, T > 0 and n_times >= 1")
    if not controls:
        raise InvalidInputError("need at least one control")
    _check_budget(controls, K)
    times = np.linspace(0.0, T, n_times).tolist()
    traj = _family_trajectories(A, B, psi0, controls, times, j, cfg.steps_per_piece)
    return traj[:, :, j, :].reshape(-1, traj.shape[-1])


def _worst_time(bounds, T):
    # tail_bound is monotone in t with the sign of omega; take the sup over [0, T].
    return T if bounds.omega >= 0 else 0.0


def sample_attainable_points(A, B, psi0, T: float, K: float, eps: float, controls, n_times: int = 11,
                             cfg: DysonConfig | None = None) -> np.ndarray:
    """Truncated Dyson states for ``controls`` on a uniform time grid (time-major order).

    The truncation order is the uniform one chosen for ``[0, T]`` and
    ``||u||_1 <= K``, so each state is within ``eps / 2`` of the true solution
    up to quadrature error.
    """
    cfg = cfg or DysonConfig()
    A = as_operator(A, "A")
    psi0 = as_vector(psi0, A.shape[0])
    _check_budget(controls, K)
    bounds = semigroup_bounds(A)
    N = choose_truncation(eps, _worst_time(bounds, T), K, float(np.linalg.norm(psi0)), bounds,
                          operator_norm(B), cfg.max_order)
    order = max(N, 1)
    times = np.linspace(0.0, T, n_times).tolist()
    traj = _family_trajectories(A, B, psi0, controls, times, order - 1, cfg.steps_per_piece)
    return traj.sum(axis=2).reshape(-1, traj.shape[-1])


def attainable_net(A, B, psi0, T: float, K: float, eps: float, family_size: int, seed: int,
                   cfg: DysonConfig | None = None, *, n_times: int = 11, n_pieces: int = 4,
                   budget: int = 50_000) -> EpsNet:
    """Net of radius at most ``eps`` for the attainable set over ``t <= T``, ``||u||_1 <= K``.

    Radius budget: ``eps / 2`` for the series tail beyond order ``N_eps``,
    ``eps / 4`` split evenly over the nets of the Dyson layers ``j = 0..N_eps``
    and ``eps / 4`` reserved for re-netting inside the Minkowski sum. Coverage
    of the sampled attainable states is checked exactly before returning; it
    is a certificate for those samples only.
    """
    cfg = cfg or DysonConfig()
    A = as_operator(A, "A")
    B = as_operator(B, "B")
    psi0 = as_vector(psi0, A.shape[0])
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    bounds = semigroup_bounds(A)
    psi0_norm = float(np.linalg.norm(psi0))
    N = choose_truncation(eps, _worst_time(bounds, T), K, psi0_norm, bounds, operator_norm(B), cfg.max_order)

    controls = control_family(T, K, n_pieces, family_size, seed)
    times = np.linspace(0.0, T, n_times).tolist()
    traj = w_trajectories(A, B, psi0, controls, times, max(N, 1), cfg.steps_per_piece)
    dim = traj.shape[-1]

    layer_radius = eps / (4 * (N + 1))
    layers = [greedy_eps_net(traj[:, :, j, :].reshape(-1, dim), layer_radius) for j in range(N + 1)]
    summed = minkowski_sum_net(layers, budget=budget, renet_radius=eps / 4)
    radius = summed.radius + eps / 2

    states = traj[:, :, :max(N, 1), :].sum(axis=2).reshape(-1, dim)
    net = EpsNet(summed.centers, radius, len(states))
    covered = verify_cover(states, net)
    if not covered.all():
        raise AssertionError(f"{int((~covered).sum())} sampled attainable states escaped the net")
    net.info = {
        "N_eps": N,
        "layer_radius": layer_radius,
        "layer_sizes": [len(layer) for layer in layers],
        "renet_spent": summed.info["renet_spent"],
        "in_sample_coverage": True,
        "n_samples": len(states),
        "family_size": family_size,
        "n_times": n_times,
        "n_pieces": n_pieces,
    }
    return net


def obstruction_report(net: EpsNet, targets) -> list[tuple[np.ndarray, float]]:
    """``(target, max(0, dist(target, centers) - radius))`` for each target."""
    if len(net) == 0:
        raise InvalidInputError("net has no centers")
    T = _as_points(targets)
    if len(T) == 0:
        return []
    if T.shape[1] != net.dim:
        raise InvalidInputError(f"targets have dimension {T.shape[1]}, net has {net.dim}")
    d = nearest_distances(T, net.centers) - net.radius
    return [(T[i], float(max(d[i], 0.0))) for i in range(len(T))]


def unit_sphere_targets(n: int, dim: int, complex_field: bool, seed: int) -> np.ndarray:
    """``n`` seeded points uniform on the unit sphere of R^dim or C^dim."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, dim))
    if complex_field:
        X = X + 1j * rng.standard_normal((n, dim))
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(norms == 0, 1.0, norms)
