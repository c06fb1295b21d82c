"""Networks of agents, visibility rounds, and per-agent inference.

One agent sits on each vertex of an undirected graph and is assigned one
die side; it always knows the total roll count and the shared moment
target, and it sees the counts of every side assigned within graph
distance `round` of itself (round 0: own side only; round 1: own side plus
direct neighbors; a round at least the graph diameter reveals everything).
Every agent runs the same inference engine on its own view, so agents with
identical views hold bit-identical beliefs.  Per-agent runs touch only
immutable shared inputs and results are collected in agent-index order.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import (
    ConstraintSpec,
    PosteriorModel,
    PosteriorSummary,
    PriorSpec,
    posterior,
    posterior_summary,
    solve_beta,
)
from .multinomial import AgentView, CountVector


@dataclass(frozen=True)
class AgentNetwork:
    """Undirected agent graph with an agent-to-side assignment (both 1-based)."""

    k: int
    edges: tuple[tuple[int, int], ...]
    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on agent {a}")
            if not (1 <= a <= self.k and 1 <= b <= self.k):
                raise ValueError(f"edge ({a}, {b}) out of range [1, {self.k}]")
            if a > b:
                raise ValueError(f"edges must be stored as (low, high), got ({a}, {b})")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")
        if sorted(self.assignment) != list(range(1, self.k + 1)):
            raise ValueError("assignment must be a bijection onto sides 1..k")

    def neighbors(self, agent: int) -> tuple[int, ...]:
        out = [b for a, b in self.edges if a == agent]
        out += [a for a, b in self.edges if b == agent]
        return tuple(sorted(out))

    def agents_within(self, agent: int, distance: int) -> tuple[int, ...]:
        """All agents at graph distance <= distance of `agent` (BFS)."""
        seen = {agent: 0}
        queue = deque([agent])
        while queue:
            cur = queue.popleft()
            if seen[cur] == distance:
                continue
            for nxt in self.neighbors(cur):
                if nxt not in seen:
                    seen[nxt] = seen[cur] + 1
                    queue.append(nxt)
        return tuple(sorted(seen))

    def side_of(self, agent: int) -> int:
        return self.assignment[agent - 1]


def _normalize_edges(edges: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    out = {(min(a, b), max(a, b)) for a, b in edges}
    return tuple(sorted(out))


def complete_network(k: int) -> AgentNetwork:
    edges = [(a, b) for a in range(1, k + 1) for b in range(a + 1, k + 1)]
    return AgentNetwork(k=k, edges=tuple(edges), assignment=tuple(range(1, k + 1)))


def triangle_lattice_network(rows: int, cols: int) -> AgentNetwork:
    """Parallelogram patch of the triangular lattice; interior degree is 6.

    Vertex (i, j) is agent i*cols + j + 1; neighbor offsets are (0, +-1),
    (+-1, 0), (+1, -1) and (-1, +1).  Boundary agents simply have fewer
    neighbors.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    k = rows * cols
    edges = set()
    offsets = [(0, 1), (1, 0), (1, -1)]
    for i in range(rows):
        for j in range(cols):
            a = i * cols + j + 1
            for di, dj in offsets:
                ii, jj = i + di, j + dj
                if 0 <= ii < rows and 0 <= jj < cols:
                    b = ii * cols + jj + 1
                    edges.add((min(a, b), max(a, b)))
    return AgentNetwork(k=k, edges=tuple(sorted(edges)), assignment=tuple(range(1, k + 1)))


def explicit_network(k: int, edges: Iterable[Sequence[int]],
                     assignment: Sequence[int] | None = None) -> AgentNetwork:
    assign = tuple(assignment) if assignment is not None else tuple(range(1, k + 1))
    return AgentNetwork(k=k, edges=_normalize_edges(edges), assignment=assign)


def build_network(preset: str, *, k: int | None = None, rows: int | None = None,
                  cols: int | None = None,
                  edges: Iterable[Sequence[int]] | None = None) -> AgentNetwork:
    """Build a network from a preset name: complete, triangle-lattice, explicit."""
    if preset == "complete":
        if k is None:
            raise ValueError("complete preset needs k")
        return complete_network(k)
    if preset == "triangle-lattice":
        if rows is None or cols is None:
            raise ValueError("triangle-lattice preset needs rows and cols")
        return triangle_lattice_network(rows, cols)
    if preset == "explicit":
        if k is None or edges is None:
            raise ValueError("explicit preset needs k and edges")
        return explicit_network(k, edges)
    raise ValueError(f"unknown network preset {preset!r}")


def views_at_round(net: AgentNetwork, counts: CountVector, round: int) -> dict[int, AgentView]:
    """Each agent's view after `round` hops of glancing.

    Agent a sees the counts of the sides assigned to every agent within
    graph distance <= round; its own side is always included.
    """
    if counts.k != net.k:
        raise ValueError(f"counts have k={counts.k} but network has k={net.k}")
    if round < 0:
        raise ValueError("round must be >= 0")
    views = {}
    for agent in range(1, net.k + 1):
        sides = {net.side_of(b) for b in net.agents_within(agent, round)}
        visible = {s: counts.counts[s - 1] for s in sides}
        views[agent] = AgentView.from_mapping(net.k, counts.n, visible)
    return views


@dataclass(frozen=True)
class BeliefEntry:
    view: AgentView
    model: PosteriorModel
    summary: PosteriorSummary


@dataclass(frozen=True, eq=False)
class BeliefTable:
    """Per-agent inference results; failed agents land in `errors`."""

    entries: Mapping[int, BeliefEntry]
    errors: Mapping[int, Exception]

    def agents(self) -> tuple[int, ...]:
        return tuple(sorted(self.entries))


def infer_all(net: AgentNetwork, counts: CountVector, round: int, prior: PriorSpec,
              constraint: ConstraintSpec, engine) -> BeliefTable:
    """Run the same solve for every agent on its own view.

    One agent failing (infeasible constraint, non-convergence) does not
    abort the others; its exception is recorded under its agent index.
    """
    views = views_at_round(net, counts, round)
    entries: dict[int, BeliefEntry] = {}
    errors: dict[int, Exception] = {}
    for agent in range(1, net.k + 1):
        view = views[agent]
        try:
            solved = solve_beta(prior, view, constraint, engine)
            model = posterior(prior, view, solved, engine)
            summary = posterior_summary(model)
            entries[agent] = BeliefEntry(view=view, model=model, summary=summary)
        except Exception as exc:  # noqa: BLE001 - per-agent isolation is the contract
            exc.args = (f"agent {agent}: {exc}",) + exc.args[1:]
            errors[agent] = exc
    return BeliefTable(entries=entries, errors=errors)


def belief_divergence(table: BeliefTable, a: int, b: int, engine=None) -> float:
    """Symmetrized relative entropy between two agents' posteriors.

    KL(p_a || p_b) + KL(p_b || p_a), each term evaluated under the nodes of
    the model whose expectation it is; >= 0, and 0 exactly when the two
    densities coincide on all nodes.
    """
    for agent in (a, b):
        if agent not in table.entries:
            raise KeyError(f"agent {agent} has no entry in the belief table")
    ma, mb = table.entries[a].model, table.entries[b].model

    def one_sided(p: PosteriorModel, q: PosteriorModel) -> float:
        fam = p._family
        w = fam.posterior_weights(p.beta)
        log_p = fam.log_density(p.beta, p.log_norm, fam.theta)
        log_q = q.log_density_at(fam.theta)
        return float(w @ (log_p - log_q))

    return one_sided(ma, mb) + one_sided(mb, ma)
