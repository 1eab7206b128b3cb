"""Advertiser collaboration scoring and selection.

The payoff functional Delta(a) equals the optimal payoff whenever no price
cap binds and upper-bounds it otherwise, which makes it both a fast exact
score in the benign regime and the sorting key of the reduced search for
the general regime.  Closed-form single-collaboration scores exist for
arc-based and location-based advertisers when demand is symmetric; with a
budget above one collaboration, callers supply their own candidate ad
vectors and rank them with :func:`delta` or :func:`reduced_search`.

Without any limit on simultaneous collaborations, no optimization is
needed: each arc simply takes its highest bidder.  Two advertisers, one
bidding 0.2 on arcs (0, 1) and (1, 2) and one bidding 0.1 on (1, 2) and
(2, 0), resolve per arc to

>>> bids = [{(0, 1): 0.2, (1, 2): 0.2}, {(1, 2): 0.1, (2, 0): 0.1}]
>>> arcs = [(0, 1), (0, 2), (1, 2), (2, 0)]
>>> [max(b.get(arc, 0.0) for b in bids) for arc in arcs]
[0.2, 0.0, 0.2, 0.1]

The selectors below handle the interesting case of a limited number of
collaborations, where choices couple through the flow balance.
"""

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .electrical import build_electrical, value_vector
from .network import AdRevenueVector, TrafficNetwork, ad_matrix
from .pricing import solve_general


@dataclass(frozen=True)
class AdvertiserCatalog:
    """Available advertisers and their willingness to pay.

    arc_based maps a target arc to its advertiser's willingness b;
    location_based maps a target location k to {origin i: d_ik} over the
    incoming arcs of k.  ``budget`` is the number of simultaneous
    collaborations; the closed-form selectors support budget == 1.
    """

    arc_based: Mapping[tuple[int, int], float]
    location_based: Mapping[int, Mapping[int, float]]
    budget: int = 1

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        for arc, b in self.arc_based.items():
            if b < 0:
                raise ValueError(f"negative willingness to pay on arc {arc}")
        for k, incoming in self.location_based.items():
            for i, d in incoming.items():
                if d < 0:
                    raise ValueError(
                        f"negative willingness to pay for ({i}, {k})")

    def validate_for(self, net: TrafficNetwork):
        for (i, j) in self.arc_based:
            if not net.has_arc(i, j):
                raise ValueError(f"arc-based target ({i}, {j}) is not an arc")
        for k, incoming in self.location_based.items():
            for i in incoming:
                if not net.has_arc(i, k):
                    raise ValueError(
                        f"location-based entry ({i}, {k}) is not an incoming arc")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a collaboration selection.

    ``chosen`` is an arc tuple, a location index, or a candidate index
    depending on the selector.  ``scores`` is the per-candidate table the
    decision was made from.
    """

    chosen: object
    ad_revenue: AdRevenueVector
    payoff: float
    scores: tuple


def arc_candidate(net: TrafficNetwork, arc: tuple[int, int],
                  b: float) -> AdRevenueVector:
    """Ad vector induced by collaborating with the advertiser of one arc."""
    return AdRevenueVector.from_arcs(net, {arc: b})


def location_candidate(net: TrafficNetwork, location: int,
                       incoming: Mapping[int, float]) -> AdRevenueVector:
    """Ad vector induced by one location-based advertiser.

    Revenue d_ik applies on every incoming arc (i, k) of the target
    location, zero elsewhere.
    """
    return AdRevenueVector.from_arcs(
        net, {(i, location): d for i, d in incoming.items()})


def delta(net: TrafficNetwork, a) -> float:
    """Payoff functional: exact optimal payoff when no cap binds.

    Delta(a) = sum theta xi ((1+a-c)/2)^2
             - sum (1/8) theta (1+a-c) sum_k (R_jk - R_ik) v_k,
    evaluated on the unmasked electrical network.  Always an upper bound
    on the optimal payoff, with equality when every cap multiplier is 0.
    """
    a_mat = ad_matrix(net, a)
    model = build_electrical(net)[0]
    v = value_vector(net, a_mat)
    s = model.effective_resistance @ v
    c = net.unit_cost
    total = 0.0
    for i, j in net.arcs:
        th, xi = net.demand[i, j], net.travel_time[i, j]
        gain = 1.0 + a_mat[i, j] - c
        total += th * xi * (gain / 2.0) ** 2
        total -= th * gain * (s[j] - s[i]) / 8.0
    return float(total)


def _demand_symmetric(net: TrafficNetwork) -> bool:
    return bool(np.array_equal(net.demand, net.demand.T))


def select_arc_advertiser(net: TrafficNetwork,
                          catalog: AdvertiserCatalog) -> SelectionResult:
    """Pick the single arc-based advertiser maximizing provider payoff.

    With symmetric demand the closed-form score
    theta xi (b^2 + 2(1-c) b) - theta^2 b^2 R_ij is exact; otherwise each
    candidate is scored by Delta of its induced ad vector.  Ties break to
    the lexicographically smallest arc.
    """
    catalog.validate_for(net)
    if catalog.budget != 1:
        raise ValueError("closed-form selector supports budget == 1; "
                         "rank caller-built candidates with delta() instead")
    if not catalog.arc_based:
        raise ValueError("catalog has no arc-based advertisers")
    arcs = sorted(catalog.arc_based)
    if _demand_symmetric(net):
        model = build_electrical(net)[0]
        eff = model.effective_resistance
        c = net.unit_cost
        scores = []
        for (i, j) in arcs:
            b = catalog.arc_based[(i, j)]
            th, xi = net.demand[i, j], net.travel_time[i, j]
            scores.append(th * xi * (b * b + 2.0 * (1.0 - c) * b)
                          - th * th * b * b * eff[i, j])
    else:
        scores = [delta(net, arc_candidate(net, arc, catalog.arc_based[arc]))
                  for arc in arcs]
    # arcs are sorted, so keeping the first maximum breaks ties lexicographically
    best = 0
    for k in range(1, len(arcs)):
        if scores[k] > scores[best]:
            best = k
    chosen = arcs[best]
    a_win = arc_candidate(net, chosen, catalog.arc_based[chosen])
    payoff = solve_general(net, a_win).payoff
    return SelectionResult(
        chosen=chosen,
        ad_revenue=a_win,
        payoff=payoff,
        scores=tuple(zip(arcs, (float(s) for s in scores))),
    )


def select_location_advertiser(net: TrafficNetwork,
                               catalog: AdvertiserCatalog) -> SelectionResult:
    """Pick the single location-based advertiser maximizing payoff.

    With symmetric demand the closed-form score over incoming arcs of k,
    sum_s theta_sk xi_sk (d^2 + 2(1-c) d)
    + sum_s sum_t 0.5 theta_sk theta_tk d_sk d_tk (R_st - R_sk - R_tk),
    is exact; otherwise candidates are scored by Delta.  Ties break to the
    smallest location index.
    """
    catalog.validate_for(net)
    if catalog.budget != 1:
        raise ValueError("closed-form selector supports budget == 1; "
                         "rank caller-built candidates with delta() instead")
    if not catalog.location_based:
        raise ValueError("catalog has no location-based advertisers")
    locations = sorted(catalog.location_based)
    if _demand_symmetric(net):
        model = build_electrical(net)[0]
        eff = model.effective_resistance
        c = net.unit_cost
        scores = []
        for k in locations:
            incoming = sorted(catalog.location_based[k].items())
            score = 0.0
            for s, d_sk in incoming:
                th_s, xi_s = net.demand[s, k], net.travel_time[s, k]
                score += th_s * xi_s * (d_sk * d_sk + 2.0 * (1.0 - c) * d_sk)
                for t, d_tk in incoming:
                    th_t = net.demand[t, k]
                    score += 0.5 * th_s * th_t * d_sk * d_tk * (
                        eff[s, t] - eff[s, k] - eff[t, k])
            scores.append(score)
    else:
        scores = [
            delta(net, location_candidate(net, k, catalog.location_based[k]))
            for k in locations]
    best = 0
    for k in range(1, len(locations)):
        if scores[k] > scores[best]:
            best = k
    chosen = locations[best]
    a_win = location_candidate(net, chosen, catalog.location_based[chosen])
    payoff = solve_general(net, a_win).payoff
    return SelectionResult(
        chosen=chosen,
        ad_revenue=a_win,
        payoff=payoff,
        scores=tuple(zip(locations, (float(s) for s in scores))),
    )


def reduced_search(net: TrafficNetwork, candidates: Sequence) -> SelectionResult:
    """Exact selection over candidate ad vectors with few general solves.

    Candidates are sorted by Delta descending and scanned; the scan stops
    at the first candidate whose solve has an empty active set (position
    h), and only the first h are compared by true payoff.  Because Delta
    bounds the payoff from above and matches it at that h-th candidate, the
    winner equals the exhaustive payoff argmax.  ``chosen`` is the index
    into ``candidates``; payoff ties break to the smallest index.
    """
    if not candidates:
        raise ValueError("no candidates supplied")
    mats = [ad_matrix(net, cand) for cand in candidates]
    deltas = [delta(net, m) for m in mats]
    order = sorted(range(len(mats)), key=lambda k: (-deltas[k], k))
    solutions = {}
    h = len(order)
    for pos, idx in enumerate(order):
        solutions[idx] = solve_general(net, mats[idx])
        if not solutions[idx].active_set:
            h = pos + 1
            break
    best = None
    for idx in order[:h]:
        if best is None or solutions[idx].payoff > solutions[best].payoff \
                or (solutions[idx].payoff == solutions[best].payoff and idx < best):
            best = idx
    cand = candidates[best]
    if not isinstance(cand, AdRevenueVector):
        cand = AdRevenueVector(net, mats[best])
    return SelectionResult(
        chosen=best,
        ad_revenue=cand,
        payoff=solutions[best].payoff,
        scores=tuple(enumerate(deltas)),
    )


@dataclass(frozen=True)
class StrategyOutcome:
    strategy: str
    chosen: object
    payoff: float
    gap_to_optimal: float


@dataclass(frozen=True)
class StrategyComparison:
    """Per-strategy payoffs plus the per-candidate evaluation table."""

    outcomes: tuple
    candidates: tuple
    deltas: tuple
    payoffs: tuple

    def outcome(self, strategy: str) -> StrategyOutcome:
        for row in self.outcomes:
            if row.strategy == strategy:
                return row
        raise KeyError(strategy)


def strategy_compare(net: TrafficNetwork, catalog: AdvertiserCatalog,
                     mode: str = "location", model: str = "basic",
                     params=None, seed: int | None = None,
                     trials: int = 100) -> StrategyComparison:
    """Compare resistance-based, optimal, and randomized selection.

    Resistance-based picks the Delta argmax; optimal exhaustively
    maximizes the model payoff (basic pricing or the extended solver when
    ``model == 'extended'``, which requires ``params``); randomized
    averages the payoff of ``trials`` uniform candidate draws.  All
    randomness derives from ``seed``.
    """
    catalog.validate_for(net)
    if mode == "arc":
        labels = sorted(catalog.arc_based)
        vectors = [arc_candidate(net, arc, catalog.arc_based[arc])
                   for arc in labels]
    elif mode == "location":
        labels = sorted(catalog.location_based)
        vectors = [location_candidate(net, k, catalog.location_based[k])
                   for k in labels]
    else:
        raise ValueError("mode must be 'arc' or 'location'")
    if not labels:
        raise ValueError(f"catalog has no {mode}-based advertisers")
    if seed is None:
        raise ValueError("a seed is required (randomized strategy)")
    root = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    children = root.spawn(len(vectors) + 1)

    if model == "basic":
        payoffs = [solve_general(net, vec).payoff for vec in vectors]
    elif model == "extended":
        if params is None:
            raise ValueError("extended model requires params")
        from .extended import solve_extended
        payoffs = [
            solve_extended(net, vec, params, seed=child).payoff
            for vec, child in zip(vectors, children)]
    else:
        raise ValueError("model must be 'basic' or 'extended'")

    deltas = [delta(net, vec) for vec in vectors]
    res_idx = 0
    for k in range(1, len(labels)):
        if deltas[k] > deltas[res_idx]:
            res_idx = k
    opt_idx = 0
    for k in range(1, len(labels)):
        if payoffs[k] > payoffs[opt_idx]:
            opt_idx = k
    rng = np.random.default_rng(children[-1])
    draws = rng.integers(0, len(labels), size=trials)
    random_payoff = float(np.mean([payoffs[d] for d in draws]))

    opt = payoffs[opt_idx]

    def gap(value):
        return float((opt - value) / abs(opt)) if opt != 0 else 0.0

    outcomes = (
        StrategyOutcome("resistance", labels[res_idx],
                        float(payoffs[res_idx]), gap(payoffs[res_idx])),
        StrategyOutcome("optimal", labels[opt_idx], float(opt), 0.0),
        StrategyOutcome("random", None, random_payoff, gap(random_payoff)),
    )
    return StrategyComparison(
        outcomes=outcomes,
        candidates=tuple(labels),
        deltas=tuple(float(d) for d in deltas),
        payoffs=tuple(float(p) for p in payoffs),
    )
