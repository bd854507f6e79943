"""Collapse a relaxed solution onto at most one fractional value.

Nodes sharing a fractional value form a cluster. Moving a whole cluster
keeps the relaxed flip count linear in the cluster value, so a cluster with
balanced original labels can slide to a neighboring value for free, and two
unbalanced clusters can move in lockstep (step sizes chosen so their
objective contributions cancel) until one of them lands on an existing
value, on 0/1, or both meet. Each step removes at least one distinct
fractional value and never increases the pairwise error, so the loop
terminates with values in {0, alpha, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    FractionalSolution,
    NonConvergenceError,
    PreconditionViolatedError,
    RepairError,
    SimilarityGraph,
)
from .metrics import fractional_total_error

DEFAULT_EPS = 1e-7


@dataclass(frozen=True)
class ClusterInfo:
    """One cluster of equal-valued fractional nodes and its surroundings.

    ``label_balance`` is (#members originally labeled 0) minus (#originally
    labeled 1): the rate at which the relaxed flip count changes per unit of
    cluster value. ``weight_balance`` is the edge mass to neighbors below
    the cluster value minus the mass above it: the error slope. Anchors are
    the nearest neighbor values below/above, padded with 0 and 1. When a
    partner cluster is excluded, the edge mass to it goes to
    ``partner_weight`` instead of the neighbor list.
    """

    value: float
    members: np.ndarray
    n_label0: int
    n_label1: int
    label_balance: int
    neighbor_values: np.ndarray
    neighbor_weights: np.ndarray
    lower_anchor: float
    upper_anchor: float
    weight_balance: float
    partner_weight: float = 0.0

    @property
    def size(self) -> int:
        return self.members.shape[0]


def _fractional_groups(values: np.ndarray, eps: float) -> list:
    """Group node indices by fractional value, chaining gaps <= eps."""
    frac = np.flatnonzero((values > eps) & (values < 1 - eps))
    if frac.size == 0:
        return []
    order = frac[np.argsort(values[frac], kind="stable")]
    vs = values[order]
    breaks = np.flatnonzero(np.diff(vs) > eps) + 1
    groups = []
    for chunk in np.split(order, breaks):
        groups.append((float(values[chunk].mean()), np.sort(chunk)))
    return groups


def _cluster_info(solution: FractionalSolution, graph: SimilarityGraph,
                  value: float, members: np.ndarray,
                  partner: Optional[np.ndarray] = None) -> ClusterInfo:
    values = solution.values
    member_mask = np.zeros(values.shape[0], dtype=bool)
    member_mask[members] = True
    head_in = member_mask[graph.head]
    tail_in = member_mask[graph.tail]
    cross = head_in ^ tail_in
    other = np.where(head_in[cross], graph.tail[cross], graph.head[cross])
    w = graph.weights[cross]
    partner_weight = 0.0
    if partner is not None and partner.size:
        partner_mask = np.zeros(values.shape[0], dtype=bool)
        partner_mask[partner] = True
        to_partner = partner_mask[other]
        partner_weight = float(w[to_partner].sum())
        other, w = other[~to_partner], w[~to_partner]
    nv = values[other]
    below = nv < value
    above = nv > value
    lower = float(nv[below].max()) if below.any() else 0.0
    upper = float(nv[above].min()) if above.any() else 1.0
    originals = solution.original[members]
    n0 = int((originals == 0).sum())
    n1 = int(originals.shape[0] - n0)
    return ClusterInfo(
        value=value,
        members=members,
        n_label0=n0,
        n_label1=n1,
        label_balance=n0 - n1,
        neighbor_values=nv,
        neighbor_weights=w,
        lower_anchor=lower,
        upper_anchor=upper,
        weight_balance=float(w[below].sum() - w[above].sum()),
        partner_weight=partner_weight,
    )


def summarize_clusters(solution: FractionalSolution, original_labels=None,
                       graph: SimilarityGraph = None,
                       eps: float = DEFAULT_EPS) -> list:
    """One ClusterInfo per distinct fractional value, in ascending value order."""
    if graph is None:
        raise TypeError("graph is required")
    if original_labels is not None:
        if not np.array_equal(np.asarray(original_labels, dtype=np.int8), solution.original):
            raise ValueError("original_labels disagree with the solution's originals")
    return [
        _cluster_info(solution, graph, value, members)
        for value, members in _fractional_groups(solution.values, eps)
    ]


def transform_one_cluster(solution: FractionalSolution, cluster: ClusterInfo,
                          graph: SimilarityGraph) -> FractionalSolution:
    """Slide a balanced cluster to the anchor that does not raise the error.

    The flip count is unaffected for any target because the cluster's label
    balance is zero; the error changes by weight_balance * step, so the sign
    of the balance picks the direction.
    """
    if cluster.label_balance != 0:
        raise PreconditionViolatedError(
            f"cluster at {cluster.value} has label balance {cluster.label_balance}, expected 0")
    target = cluster.upper_anchor if cluster.weight_balance <= 0 else cluster.lower_anchor
    new_values = solution.values.copy()
    new_values[cluster.members] = target
    return solution.replace_values(new_values)


def transform_two_clusters(solution: FractionalSolution, cluster_a: ClusterInfo,
                           cluster_b: ClusterInfo, graph: SimilarityGraph) -> FractionalSolution:
    """Move two unbalanced clusters in lockstep until one is eliminated.

    Step sizes keep n_a * step_a +/- n_b * step_b = 0 so the flip count is
    exactly preserved; the direction is chosen so the error cannot grow, and
    the step runs to the first of: an anchor of either cluster, or the values
    meeting. The landing value is assigned exactly.
    """
    if cluster_a.label_balance == 0 or cluster_b.label_balance == 0:
        raise PreconditionViolatedError("both clusters must have nonzero label balance")
    if not cluster_a.value < cluster_b.value:
        raise PreconditionViolatedError("cluster_a must hold the smaller value")

    # partner-adjusted views: edges between the two clusters count as E,
    # not as orientation-carrying neighbors
    a = _cluster_info(solution, graph, cluster_a.value, cluster_a.members,
                      partner=cluster_b.members)
    b = _cluster_info(solution, graph, cluster_b.value, cluster_b.members,
                      partner=cluster_a.members)
    na, nb = a.label_balance, b.label_balance
    e = a.partner_weight
    alpha, beta = a.value, b.value
    ratio = abs(na / nb)

    # error slope along the coupled direction; integer products keep the
    # case guards exact
    y_num = (a.weight_balance - e) * nb - (b.weight_balance + e) * na
    y_nonpos = y_num * nb <= 0
    opposite = na * nb < 0

    candidates = []  # (step in alpha units, landing kind)
    if opposite:
        sum_sign = (na + nb) * nb
        if y_nonpos:
            dir_a, dir_b = 1.0, 1.0
            candidates.append((a.upper_anchor - alpha, "a_up"))
            candidates.append((abs(nb / na) * (b.upper_anchor - beta), "b_up"))
            if sum_sign > 0:
                candidates.append((nb * (beta - alpha) / (na + nb), "merge"))
        else:
            dir_a, dir_b = -1.0, -1.0
            candidates.append((alpha - a.lower_anchor, "a_lo"))
            candidates.append((abs(nb / na) * (beta - b.lower_anchor), "b_lo"))
            if sum_sign < 0:
                candidates.append((-nb * (beta - alpha) / (na + nb), "merge"))
    else:
        if y_nonpos:
            dir_a, dir_b = 1.0, -1.0
            candidates.append((a.upper_anchor - alpha, "a_up"))
            candidates.append((abs(nb / na) * (beta - b.lower_anchor), "b_lo"))
            candidates.append((nb * (beta - alpha) / (na + nb), "merge"))
        else:
            dir_a, dir_b = -1.0, 1.0
            candidates.append((alpha - a.lower_anchor, "a_lo"))
            candidates.append((abs(nb / na) * (b.upper_anchor - beta), "b_up"))

    step, kind = min(candidates, key=lambda sk: sk[0])
    if step <= 0:
        raise RepairError(f"non-positive transform step {step} ({kind})")

    # land exactly on the binding bound; the partner follows at |na/nb| rate
    if kind == "a_up":
        new_a = a.upper_anchor
        new_b = beta + dir_b * ratio * (new_a - alpha)
    elif kind == "a_lo":
        new_a = a.lower_anchor
        new_b = beta + dir_b * ratio * (alpha - new_a)
    elif kind == "b_up":
        new_b = b.upper_anchor
        new_a = alpha + dir_a * abs(nb / na) * (new_b - beta)
    elif kind == "b_lo":
        new_b = b.lower_anchor
        new_a = alpha + dir_a * abs(nb / na) * (beta - new_b)
    else:
        new_a = new_b = (alpha * na + beta * nb) / (na + nb)

    new_values = solution.values.copy()
    new_values[a.members] = new_a
    new_values[b.members] = new_b
    return solution.replace_values(new_values)


def convert_solution(solution: FractionalSolution, original_labels=None,
                     graph: SimilarityGraph = None, eps: float = DEFAULT_EPS,
                     check_each_step: bool = True) -> FractionalSolution:
    """Run transform steps until at most one fractional value remains.

    Balanced clusters are eliminated first (lowest value first); then the
    two lowest-valued unbalanced clusters are merged, recomputing cluster
    data from scratch after every step. Objective preservation and error
    monotonicity are verified per step when check_each_step is set.
    """
    if graph is None:
        raise TypeError("graph is required")
    if original_labels is not None:
        if not np.array_equal(np.asarray(original_labels, dtype=np.int8), solution.original):
            raise ValueError("original_labels disagree with the solution's originals")
    current = solution
    error = fractional_total_error(current.values, graph)
    cap = max(10 * current.values.shape[0], 20)
    for _ in range(cap):
        clusters = summarize_clusters(current, graph=graph, eps=eps)
        if len(clusters) <= 1:
            return current
        balanced = [c for c in clusters if c.label_balance == 0]
        if balanced:
            stepped = transform_one_cluster(current, balanced[0], graph)
        else:
            stepped = transform_two_clusters(current, clusters[0], clusters[1], graph)
        if check_each_step:
            if abs(stepped.objective - current.objective) > 1e-9:
                raise RepairError(
                    f"transform step moved the objective by "
                    f"{stepped.objective - current.objective:.3e}")
            new_error = fractional_total_error(stepped.values, graph)
            if new_error > error + 1e-9:
                raise RepairError(
                    f"transform step raised the error by {new_error - error:.3e}")
            error = new_error
        current = stepped
    raise NonConvergenceError(f"conversion did not finish within {cap} steps")
