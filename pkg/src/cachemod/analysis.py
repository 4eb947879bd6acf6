"""Closed-form symbol error bounds and per-user error-rate metrics.

The per-symbol error probability is the classical nearest-neighbor union
bound evaluated at the minimum distance of the subconstellation a user
demodulates over; bounds are clamped to 1 since they are vacuous beyond
that.  Per-user rates weight each useful symbol equally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import erfc

from .caching import (
    PROPOSED,
    ZERO_PADDING,
    DeliveryPlan,
    DemandVector,
    SubfileMap,
    build_delivery_plan,
    known_bit_mask,
)
from .errors import ConfigurationError
from .modem import PSK, Constellation, min_distance


@dataclass(frozen=True)
class SnrProfile:
    """Per-user linear SNRs gamma_k."""

    gammas: tuple

    def __post_init__(self):
        gammas = tuple(float(g) for g in self.gammas)
        object.__setattr__(self, "gammas", gammas)
        if any(g <= 0 for g in gammas):
            raise ConfigurationError("SNRs must be positive")

    def gamma(self, user: int) -> float:
        return self.gammas[user - 1]

    @property
    def num_users(self) -> int:
        return len(self.gammas)


@dataclass(frozen=True)
class SerReport:
    """Per-user useful-symbol counts, errored-symbol counts and rates."""

    kind: str  # "analytic" | "empirical"
    useful_symbols: dict  # user -> L_k
    error_symbols: dict  # user -> S_k
    ser: dict  # user -> T_k = S_k / L_k
    average_ser: float
    load: float
    undefined_users: frozenset = frozenset()
    stderr: dict | None = None  # empirical only: per-user standard error
    average_stderr: float | None = None


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return 0.5 * erfc(x / math.sqrt(2.0))


def symbol_error_bound(family: str, gamma: float, dmin: float) -> float:
    """Union bound on symbol error for a (sub)constellation of min distance dmin.

    PSK has two nearest neighbors, QAM up to four; both clamp at 1.
    """
    if gamma <= 0 or dmin <= 0:
        raise ConfigurationError("gamma and dmin must be positive")
    neighbors = 2.0 if family == PSK else 4.0
    return min(1.0, neighbors * float(q_function(math.sqrt(gamma / 2.0) * dmin)))


def block_error_table(plan: DeliveryPlan, c: Constellation, snr: SnrProfile) -> dict:
    """Error-probability bound for every (subset, block, user) a plan serves.

    Blocks that carry no bits for a user are excluded.
    """
    if plan.label_len != c.m:
        raise ConfigurationError("plan and constellation disagree on bits per symbol")
    bound_cache: dict = {}
    table = {}
    for block in plan.blocks:
        for user in block.subset:
            if block.piece_len(user) == 0:
                continue
            shape = known_bit_mask(plan, block.subset, block.block_index, user)
            key = (shape, user)
            if key not in bound_cache:
                dmin = min_distance(c, *shape)
                bound_cache[key] = symbol_error_bound(c.family, snr.gamma(user), dmin)
            table[(block.subset, block.block_index, user)] = bound_cache[key]
    return table


def user_metrics(plan: DeliveryPlan, table: dict) -> SerReport:
    """Aggregate a block error table into per-user and average symbol error rates."""
    users = list(range(1, plan.num_users + 1))
    useful = {u: plan.useful_symbols(u) for u in users}
    errors = {u: 0.0 for u in users}
    for (_, _, user), p in table.items():
        errors[user] += p
    undefined = frozenset(u for u in users if useful[u] == 0)
    ser = {
        u: (errors[u] / useful[u]) if useful[u] > 0 else 0.0 for u in users
    }
    avg = sum(ser.values()) / len(users)
    return SerReport(
        kind="analytic",
        useful_symbols=useful,
        error_symbols=errors,
        ser=ser,
        average_ser=avg,
        load=plan.load,
        undefined_users=undefined,
    )


def analytic_report(
    subfiles: SubfileMap,
    demands: DemandVector,
    scheme: str,
    c: Constellation,
    snr: SnrProfile,
) -> SerReport:
    """Convenience: plan, bound table and metrics in one call."""
    plan = build_delivery_plan(subfiles, demands, scheme, c.m)
    return user_metrics(plan, block_error_table(plan, c, snr))


@dataclass(frozen=True)
class SchemeComparison:
    per_user: dict  # user -> (ser_proposed, ser_zero_padding, delta)
    load_proposed: float
    load_zero_padding: float


def compare_schemes(
    subfiles: SubfileMap, demands: DemandVector, c: Constellation, snr: SnrProfile
) -> SchemeComparison:
    """Analytic per-user comparison of the two padding schemes.

    delta_k = T_k(zero padding) - T_k(proposed) is the per-user gain; the
    symbol-level scheme never does worse.
    """
    reports = {
        scheme: analytic_report(subfiles, demands, scheme, c, snr)
        for scheme in (PROPOSED, ZERO_PADDING)
    }
    rp, rz = reports[PROPOSED], reports[ZERO_PADDING]
    per_user = {
        u: (rp.ser[u], rz.ser[u], rz.ser[u] - rp.ser[u]) for u in sorted(rp.ser)
    }
    return SchemeComparison(
        per_user=per_user, load_proposed=rp.load, load_zero_padding=rz.load
    )
