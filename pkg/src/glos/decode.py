"""State graphs and exact Viterbi decoding.

A :class:`StateGraph` is a DAG of emitting HMM states with self-loops:
chains of phone states joined by forward edges, optional silence chains
that may be skipped, and parallel pronunciation variants.  Nodes are
created in topological order, which keeps shortest-path bookkeeping and
the DP recurrence simple.

Transition log weights come from the acoustic model.  Branching between
alternatives is unweighted: entering any variant costs only the forward
probability of the state being left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentFailure, GraphTooLong

NEG_INF = float("-inf")


@dataclass
class StateGraph:
    """Emitting nodes plus the edges of the alignment search space."""

    phones: list[str] = field(default_factory=list)       # phone per node
    states: list[int] = field(default_factory=list)       # HMM state index
    word_idx: list[int] = field(default_factory=list)     # -1 outside any word
    self_logp: list[float] = field(default_factory=list)
    preds: list[list[tuple[int, float]]] = field(default_factory=list)
    entry_logp: dict[int, float] = field(default_factory=dict)
    exit_logp: dict[int, float] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.phones)

    def min_path_frames(self) -> int:
        """Fewest frames any accepted path needs (one per node visited)."""
        best = [np.inf] * self.n_nodes
        for j in range(self.n_nodes):
            here = 1.0 if j in self.entry_logp else np.inf
            for p, _ in self.preds[j]:
                here = min(here, best[p] + 1)
            best[j] = here
        result = min((best[j] for j in self.exit_logp), default=np.inf)
        if result is np.inf:
            raise AlignmentFailure("graph has no accepting path")
        return int(result)

    def distinct_emitters(self) -> list[tuple[str, int]]:
        return sorted({(p, s) for p, s in zip(self.phones, self.states)})


class GraphBuilder:
    """Assembles a StateGraph left to right.

    The frontier holds (node, leave-log-weight) pairs: every path that
    has consumed the graph so far ends in one of those nodes.  A `None`
    node stands for the graph entry.
    """

    def __init__(self, model):
        self.model = model
        self.graph = StateGraph()
        self.frontier: list[tuple[int | None, float]] = [(None, 0.0)]

    def _new_node(self, phone: str, state: int, word_idx: int,
                  entries: list[tuple[int | None, float]]) -> int:
        g = self.graph
        node = g.n_nodes
        self_p, fwd_p = self.model.transition_logs(phone, state)
        g.phones.append(phone)
        g.states.append(state)
        g.word_idx.append(word_idx)
        g.self_logp.append(self_p)
        g.preds.append([])
        for src, weight in entries:
            if src is None:
                prev = g.entry_logp.get(node, NEG_INF)
                g.entry_logp[node] = max(prev, weight)
            else:
                g.preds[node].append((src, weight))
        return node

    def add_chain(self, phones: list[str], word_idx: int) -> tuple[int, float]:
        """Append a mandatory chain of phone HMMs; returns its exit."""
        entries = self.frontier
        node = -1
        for phone in phones:
            n_states = self.model.n_states
            for state in range(n_states):
                node = self._new_node(phone, state, word_idx, entries)
                _, fwd = self.model.transition_logs(phone, state)
                entries = [(node, fwd)]
        self.frontier = entries
        return node, entries[0][1]

    def add_word(self, prons: list[list[str]], word_idx: int) -> None:
        """Append a word as parallel pronunciation chains."""
        saved = list(self.frontier)
        ends: list[tuple[int | None, float]] = []
        for pron in prons:
            self.frontier = saved
            ends.append(self.add_chain(pron, word_idx))
        self.frontier = ends

    def add_optional(self, phones: list[str], word_idx: int = -1) -> None:
        """Append a chain that paths may skip (e.g. inter-word silence)."""
        saved = list(self.frontier)
        end = self.add_chain(phones, word_idx)
        self.frontier = saved + [end]

    def finish(self) -> StateGraph:
        if not self.graph.n_nodes:
            raise AlignmentFailure("empty graph")
        for node, weight in self.frontier:
            if node is None:
                continue
            self.graph.exit_logp[node] = weight
        return self.graph


def viterbi(graph: StateGraph, emissions: np.ndarray) -> tuple[list[int], float]:
    """Exact best path through the graph for T frames of emissions.

    ``emissions[t, j]`` is the emission log-likelihood of node j at
    frame t.  Returns (node per frame, total path log score including
    entry/exit and transition weights).  Raises GraphTooLong when the
    graph needs more frames than available and AlignmentFailure when no
    path has finite probability.
    """
    n_frames, n_nodes = emissions.shape
    if n_nodes != graph.n_nodes:
        raise ValueError("emission table does not match graph")
    if n_frames < graph.min_path_frames():
        raise GraphTooLong(
            f"{n_frames} frames but shortest path needs "
            f"{graph.min_path_frames()} states")

    # Padded predecessor matrices; column 0 is always the self-loop.
    max_pred = max((len(p) for p in graph.preds), default=0)
    pred_idx = np.zeros((n_nodes, max_pred + 1), dtype=np.int64)
    pred_w = np.full((n_nodes, max_pred + 1), NEG_INF)
    for j in range(n_nodes):
        pred_idx[j, 0] = j
        pred_w[j, 0] = graph.self_logp[j]
        for col, (src, weight) in enumerate(graph.preds[j], start=1):
            pred_idx[j, col] = src
            pred_w[j, col] = weight

    entry = np.full(n_nodes, NEG_INF)
    for j, w in graph.entry_logp.items():
        entry[j] = w
    exit_w = np.full(n_nodes, NEG_INF)
    for j, w in graph.exit_logp.items():
        exit_w[j] = w

    dp = entry + emissions[0]
    backcol = np.zeros((n_frames, n_nodes), dtype=np.int32)
    for t in range(1, n_frames):
        cand = dp[pred_idx] + pred_w          # (n_nodes, max_pred+1)
        best_col = np.argmax(cand, axis=1)
        dp = cand[np.arange(n_nodes), best_col] + emissions[t]
        backcol[t] = best_col

    final = dp + exit_w
    end = int(np.argmax(final))
    if final[end] == NEG_INF:
        raise AlignmentFailure("no finite-probability path")
    path = [0] * n_frames
    node = end
    for t in range(n_frames - 1, -1, -1):
        path[t] = node
        if t > 0:
            node = int(pred_idx[node, backcol[t, node]])
    return path, float(final[end])


def emission_table(graph: StateGraph, model, features: np.ndarray) -> np.ndarray:
    """(T, n_nodes) emission log-likelihoods, one GMM eval per distinct state."""
    columns: dict[tuple[str, int], np.ndarray] = {}
    for pair in graph.distinct_emitters():
        columns[pair] = model.state_loglik(pair[0], pair[1], features)
    table = np.empty((features.shape[0], graph.n_nodes))
    for j, pair in enumerate(zip(graph.phones, graph.states)):
        table[:, j] = columns[pair]
    return table
