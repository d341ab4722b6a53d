"""Regular-vine copula: greedy structure selection, edge fitting, simulation.

Tree by tree, a maximum spanning tree on absolute Kendall tau picks the
structure; each edge gets the minimum-AIC pair copula from the bivariate
candidate set; h-functions propagate conditional pseudo-observations to the
next tree. Simulation inverts the Rosenblatt chain column by column in the
order implied by the structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .bivariate import PairCopula, fit_pair_copula

_CLAMP_LO = 1e-10
_CLAMP_HI = 1.0 - 1e-10


@dataclass(frozen=True)
class VineEdge:
    """Edge (a, b | cond) with a pair copula oriented first-argument-a."""

    tree: int
    a: int
    b: int
    cond: frozenset
    pc: PairCopula
    loglik: float

    @property
    def variables(self) -> frozenset:
        return self.cond | {self.a, self.b}


def _max_spanning_tree(nodes, weights):
    """Prim's algorithm maximizing total weight; weights maps frozenset pairs."""
    nodes = list(nodes)
    in_tree = {nodes[0]}
    out = []
    while len(in_tree) < len(nodes):
        best, best_w = None, -np.inf
        for i in in_tree:
            for j in nodes:
                if j in in_tree:
                    continue
                w = weights.get(frozenset((i, j)))
                if w is not None and w > best_w:
                    best, best_w = (i, j), w
        if best is None:
            raise ValueError("proximity graph is disconnected")
        out.append(best)
        in_tree.add(best[1])
    return out


class _Node:
    """A node of tree m >= 2: wraps the underlying edge plus its pseudo-data."""

    __slots__ = ("edge", "data")

    def __init__(self, edge, data):
        self.edge = edge  # VineEdge or (for tree 1 nodes) an int variable
        self.data = data  # dict var -> conditional pseudo-observations


def _clamp(u, counter):
    clipped = np.clip(u, _CLAMP_LO, _CLAMP_HI)
    counter[0] += int(np.sum((u < _CLAMP_LO) | (u > _CLAMP_HI)))
    return clipped


def fit_vine(u: np.ndarray):
    """Fit a regular vine on pseudo-observations; returns a FittedCopula."""
    from .copulas import FittedCopula

    t, d = u.shape
    counter = [0]
    edges: list[VineEdge] = []

    # tree 1: nodes are the variables themselves
    nodes = []
    for j in range(d):
        n = _Node(j, {j: u[:, j]})
        nodes.append(n)
    level = 1
    while len(nodes) > 1:
        weights = {}
        pair_info = {}
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                ni, nj = nodes[i], nodes[j]
                av, bv = _conditioned_pair(ni, nj, level)
                if av is None:
                    continue
                xa, xb = ni.data[av], nj.data[bv]
                tau = stats.kendalltau(xa, xb).statistic
                if not np.isfinite(tau):
                    tau = 0.0
                key = frozenset((i, j))
                weights[key] = abs(tau)
                pair_info[key] = (av, bv)
        mst = _max_spanning_tree(range(len(nodes)), weights)
        new_nodes = []
        for i, j in mst:
            if i > j:
                i, j = j, i  # pair_info is stored in i < j orientation
            ni, nj = nodes[i], nodes[j]
            av, bv = pair_info[frozenset((i, j))]
            xa, xb = ni.data[av], nj.data[bv]
            cond = _var_set(ni) & _var_set(nj)
            pc, ll = fit_pair_copula(xa, xb)
            edge = VineEdge(tree=level, a=av, b=bv, cond=frozenset(cond), pc=pc, loglik=ll)
            edges.append(edge)
            data = {
                av: _clamp(np.asarray(pc.h1(xa, xb), dtype=float), counter),
                bv: _clamp(np.asarray(pc.h2(xa, xb), dtype=float), counter),
            }
            new_nodes.append(_Node(edge, data))
        nodes = new_nodes
        level += 1

    order, columns = _sampling_columns(edges, d)
    loglik = float(sum(e.loglik for e in edges))
    n_params = int(sum(e.pc.n_params for e in edges))
    return FittedCopula(
        "vine",
        d,
        {
            "edges": tuple(edges),
            "order": tuple(order),
            "columns": tuple(columns),
            "clamp_count": counter[0],
            "n_params": n_params,
        },
        loglik=loglik,
    )


def _var_set(node: _Node) -> frozenset:
    if isinstance(node.edge, int):
        return frozenset((node.edge,))
    return node.edge.variables


def _conditioned_pair(ni: _Node, nj: _Node, level: int):
    """Conditioned variables of a candidate edge, or (None, None) if not allowed."""
    if level == 1:
        return ni.edge, nj.edge
    ei, ej = ni.edge, nj.edge
    # proximity: the two edges of the previous tree must share a node,
    # i.e. their variable sets differ in exactly one element each
    vi, vj = ei.variables, ej.variables
    only_i = vi - vj
    only_j = vj - vi
    if len(only_i) != 1 or len(only_j) != 1:
        return None, None
    (av,), (bv,) = only_i, only_j
    if av not in (ei.a, ei.b) or bv not in (ej.a, ej.b):
        return None, None
    return av, bv


def _sampling_columns(edges, d):
    """Peel the vine from the top tree into per-variable sampling columns.

    Column j holds, for each tree level from 1 up, the partner variable, the
    conditioning set, and the pair copula oriented with the column variable
    first. The conditioning set of each consumed edge must match the set of
    lower-level partners, which is what makes column-wise inversion valid.
    """
    remaining = {m: [e for e in edges if e.tree == m] for m in range(1, d)}
    order = []
    columns = []
    for step in range(d - 1):
        top = d - 1 - step
        top_edge = remaining[top][0]
        x = top_edge.a
        by_level = {}
        for m in range(top, 0, -1):
            match = [e for e in remaining[m] if x in (e.a, e.b)]
            if len(match) != 1:
                raise RuntimeError("vine structure violates the single-edge property")
            e = match[0]
            remaining[m].remove(e)
            other = e.b if e.a == x else e.a
            pc = e.pc if e.a == x else e.pc.swapped()
            by_level[m] = (other, e.cond, pc)
        col = []
        partners = set()
        for m in range(1, top + 1):
            other, cond, pc = by_level[m]
            if cond != frozenset(partners):
                raise RuntimeError("column conditioning sets are inconsistent")
            col.append((other, cond, pc))
            partners.add(other)
        order.append(x)
        columns.append(tuple(col))
    last = next(iter(_all_vars(edges) - set(order)))
    order.append(last)
    columns.append(())
    return order, columns


def _all_vars(edges) -> set:
    out = set()
    for e in edges:
        out |= e.variables
    return out


def _edge_lookup(edges):
    table = {}
    for e in edges:
        table[(e.a, e.cond | {e.b})] = ("h1", e)
        table[(e.b, e.cond | {e.a})] = ("h2", e)
    return table


def _cond_cdf(var, cond, cache, table):
    """F(var | cond) on the current sample, built recursively from edge h-functions."""
    key = (var, cond)
    if key in cache:
        return cache[key]
    hit = table.get(key)
    if hit is None:
        raise RuntimeError(f"no vine edge yields F({var} | {sorted(cond)})")
    which, e = hit
    fa = _cond_cdf(e.a, e.cond, cache, table)
    fb = _cond_cdf(e.b, e.cond, cache, table)
    val = e.pc.h1(fa, fb) if which == "h1" else e.pc.h2(fa, fb)
    val = np.clip(np.asarray(val, dtype=float), _CLAMP_LO, _CLAMP_HI)
    cache[key] = val
    return val


def simulate_vine(fc, n: int, rng) -> np.ndarray:
    """Inverse-Rosenblatt sampling along the stored column structure."""
    edges = fc.params["edges"]
    order = fc.params["order"]
    columns = fc.params["columns"]
    d = fc.dim
    table = _edge_lookup(edges)
    w = rng.uniform(size=(n, d))
    cache = {}
    out = np.empty((n, d))

    last = order[-1]
    u_last = np.clip(w[:, d - 1], _CLAMP_LO, _CLAMP_HI)
    out[:, last] = u_last
    cache[(last, frozenset())] = u_last

    for j in range(d - 2, -1, -1):
        x = order[j]
        col = columns[j]
        t = np.clip(w[:, j], _CLAMP_LO, _CLAMP_HI)
        # walk the column from the top tree down, inverting one h per level
        for other, cond, pc in reversed(col):
            cache[(x, cond | {other})] = t
            f_other = _cond_cdf(other, cond, cache, table)
            t = np.clip(np.asarray(pc.h1_inv(t, f_other), dtype=float), _CLAMP_LO, _CLAMP_HI)
        out[:, x] = t
        cache[(x, frozenset())] = t
    return out
