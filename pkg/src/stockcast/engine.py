"""Exact recursive computation of the stock-level distribution.

Given a demand model and an initial stock of ``m`` units, the lattice
``P(n, k)`` is the probability of holding ``n`` units at the end of day
``k``. Day columns advance by convolving the previous column with the
demand mass; the absorbing level ``n = 0`` accumulates the stockout
probability ``P(0, k)`` and the per-day frustrated-sales probability
``P_F(k)`` (demand exceeding a still-positive stock) falls out of the
same sweep.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .demand import DemandModel

__all__ = [
    "DegenerateDemandWarning",
    "StockoutCurve",
    "StockDistribution",
    "solve_recursive",
    "frustrated_sales_via_pfk",
    "monte_carlo_oracle",
]

_FLUSH = 1e-300  # probabilities below this underflow to 0
_PF_SLACK = 1e-12  # frustrated-sales roundoff clamped to 0


class DegenerateDemandWarning(UserWarning):
    """Zero-sale probability of 0 or 1: the dynamics are still computed,
    but the strict-monotonicity facts become vacuous."""


@dataclass(frozen=True)
class StockoutCurve:
    """Stockout and frustrated-sales probabilities over a horizon.

    ``p0[k]`` is the probability of having stocked out by day ``k`` and
    ``pf[k]`` the probability of frustrated sales on day ``k``; both run
    over ``k = 0 .. horizon`` with ``p0[0] = pf[0] = 0``.
    """

    m: int
    horizon: int
    p0: np.ndarray
    pf: np.ndarray


@dataclass(frozen=True)
class StockDistribution:
    """Full stock lattice plus the derived stockout curve.

    ``lattice[n, k]`` is the probability of ``n`` units in stock on day
    ``k`` for ``0 <= n <= m`` and ``0 <= k <= horizon``.
    """

    m: int
    horizon: int
    lattice: np.ndarray
    p0: np.ndarray
    pf: np.ndarray

    def curve(self) -> StockoutCurve:
        return StockoutCurve(m=self.m, horizon=self.horizon, p0=self.p0, pf=self.pf)


def _validate_dims(m: int, horizon: int) -> tuple[int, int]:
    if m != int(m) or m < 1:
        raise ValueError(f"initial stock m must be an integer >= 1, got {m!r}")
    if horizon != int(horizon) or horizon < 1:
        raise ValueError(f"horizon must be an integer >= 1, got {horizon!r}")
    return int(m), int(horizon)


def solve_recursive(
    model: DemandModel,
    m: int,
    horizon: int,
    keep_lattice: bool = False,
) -> StockoutCurve | StockDistribution:
    """Run the day-by-day recursion from the initial column P(n, 0) = 1{n = m}.

    Memory is O(m) with two rolling columns unless ``keep_lattice`` asks
    for the full O(m * horizon) lattice.
    """
    m, horizon = _validate_dims(m, horizon)
    alphas = np.array([model.alpha(j) for j in range(m + 1)])
    betas = np.array([model.beta(n) for n in range(m + 2)])
    if alphas[0] in (0.0, 1.0):
        warnings.warn(
            f"degenerate zero-sale probability alpha_0={alphas[0]}",
            DegenerateDemandWarning,
            stacklevel=2,
        )

    col = np.zeros(m + 1)
    col[m] = 1.0
    p0 = np.zeros(horizon + 1)
    pf = np.zeros(horizon + 1)
    lattice = None
    if keep_lattice:
        lattice = np.zeros((m + 1, horizon + 1))
        lattice[:, 0] = col

    # only offsets with non-zero demand mass contribute to the convolution
    support = np.flatnonzero(alphas)
    for k in range(1, horizon + 1):
        prev = col
        pf_k = float(betas[2 : m + 2] @ prev[1 : m + 1])
        if -_PF_SLACK <= pf_k < 0.0:
            pf_k = 0.0
        pf[k] = pf_k
        # beta_0 = 1 keeps the absorbed mass; the rest feeds in from n >= 1
        p0[k] = betas[0] * p0[k - 1] + float(betas[1 : m + 1] @ prev[1 : m + 1])
        col = np.zeros(m + 1)
        for j in support:
            col[1 : m + 1 - j] += alphas[j] * prev[1 + j : m + 1]
        col[np.abs(col) < _FLUSH] = 0.0
        col[0] = p0[k]
        if lattice is not None:
            lattice[:, k] = col

    if keep_lattice:
        return StockDistribution(m=m, horizon=horizon, lattice=lattice, p0=p0, pf=pf)
    return StockoutCurve(m=m, horizon=horizon, p0=p0, pf=pf)


def frustrated_sales_via_pfk(model: DemandModel, dist: StockDistribution) -> np.ndarray:
    """Frustrated sales recomputed from stockout increments.

    Uses P_F(k) = P(0,k) - P(0,k-1) - sum_n alpha_n P(n,k-1), which must
    agree with the tail-weighted form produced by ``solve_recursive``;
    kept as an independent cross-check, not a production path.
    """
    m, horizon = dist.m, dist.horizon
    alphas = np.array([model.alpha(n) for n in range(m + 1)])
    out = np.zeros(horizon + 1)
    for k in range(1, horizon + 1):
        drained = float(alphas[1 : m + 1] @ dist.lattice[1 : m + 1, k - 1])
        value = dist.p0[k] - dist.p0[k - 1] - drained
        if -_PF_SLACK <= value < 0.0:
            value = 0.0
        out[k] = value
    return out


def monte_carlo_oracle(
    model: DemandModel,
    m: int,
    horizon: int,
    trials: int,
    seed: int,
    chunk_size: int = 250_000,
) -> StockoutCurve:
    """Empirical stockout curve from simulated daily demand draws.

    Stock follows S_k = max(0, S_{k-1} - D_k) from S_0 = m; a trial
    counts as frustrated on day k when S_{k-1} >= 1 and D_k > S_{k-1}.
    Deterministic for a fixed seed (and chunk size).
    """
    m, horizon = _validate_dims(m, horizon)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")
    # demand beyond m+1 units behaves identically to m+1, so the draw is
    # capped there and the tail mass lumped into the last cell
    probs = np.array([model.alpha(j) for j in range(m + 1)] + [model.beta(m + 1)])
    if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("demand mass is not a probability distribution; cannot simulate")
    cum = np.cumsum(np.clip(probs, 0.0, None))
    cum[-1] = 1.0

    rng = np.random.default_rng(seed)
    zero_counts = np.zeros(horizon + 1, dtype=np.int64)
    frus_counts = np.zeros(horizon + 1, dtype=np.int64)
    remaining = int(trials)
    while remaining > 0:
        size = min(chunk_size, remaining)
        stock = np.full(size, m, dtype=np.int64)
        for k in range(1, horizon + 1):
            draws = np.searchsorted(cum, rng.random(size), side="right")
            frus_counts[k] += int(np.count_nonzero((stock >= 1) & (draws > stock)))
            stock = np.maximum(stock - draws, 0)
            zero_counts[k] += int(np.count_nonzero(stock == 0))
        remaining -= size

    return StockoutCurve(
        m=m,
        horizon=horizon,
        p0=zero_counts / trials,
        pf=frus_counts / trials,
    )
