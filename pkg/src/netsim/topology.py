# src/netsim/topology.py

from __future__ import annotations

from typing import Dict, List

import networkx as nx

from src.errors import DomainError
from src.rates.models import NoiseModel, Pair


SOURCE_NODE: str = "source"


class StarNetwork:
    """
    N users around a central GHZ source.

    ``graph`` holds the quantum links (source to every user); ``channels`` is
    the complete graph of pairwise private channels, annotated with each
    pair's Bell-pair error rates.
    """

    def __init__(self, noise: NoiseModel) -> None:
        self.noise = noise
        self.n_parties = noise.n_parties

        self.graph = nx.Graph()
        self.graph.add_node(SOURCE_NODE, role="source")
        for user in range(self.n_parties):
            self.graph.add_node(user, role="user")
            self.graph.add_edge(SOURCE_NODE, user)

        self.channels = nx.complete_graph(self.n_parties)
        for q, t in self.channels.edges():
            q_xb, q_zb = noise.pair_rates(q, t)
            self.channels[q][t]["q_xb"] = q_xb
            self.channels[q][t]["q_zb"] = q_zb

    def users(self) -> List[int]:
        return sorted(node for node, role in self.graph.nodes(data="role") if role == "user")

    def pairs(self) -> List[Pair]:
        """Unordered user pairs (q, t), q < t, in lexicographic order."""
        return sorted((min(q, t), max(q, t)) for q, t in self.channels.edges())

    def distribute_rounds(self, l_bi: int) -> Dict[Pair, int]:
        """Split bipartite rounds evenly; the remainder goes to the first pairs."""
        if l_bi < 0:
            raise DomainError(f"l_bi={l_bi} must be non-negative")
        pairs = self.pairs()
        share, remainder = divmod(l_bi, len(pairs))
        return {pair: share + (1 if i < remainder else 0) for i, pair in enumerate(pairs)}
