"""
Bipartite actor-event graph of an incidence matrix, annotated with the
MAP clustering, for export to graph tools (GraphML)
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import networkx as nx
import numpy as np

from backend.models.entities import IncidenceMatrix

logger = logging.getLogger(__name__)

ACTOR_LAYER = 0
EVENT_LAYER = 1


class GraphManager:
    """Builds and queries the two-mode graph: actors on one side, events on the other"""

    def __init__(self, data: IncidenceMatrix):
        self.data = data
        self.graph = nx.Graph()
        self._build()

    def _actor_id(self, i: int) -> str:
        return f"actor:{self.data.actor_labels[i]}"

    def _event_id(self, j: int) -> str:
        return f"event:{self.data.event_labels[j]}"

    def _build(self) -> None:
        counts = self.data.attendance_counts()
        for i, label in enumerate(self.data.actor_labels):
            self.graph.add_node(
                self._actor_id(i), label=label, bipartite=ACTOR_LAYER, attendances=int(counts[i])
            )
        attendance = self.data.y.sum(axis=0)
        for j, label in enumerate(self.data.event_labels):
            self.graph.add_node(
                self._event_id(j), label=label, bipartite=EVENT_LAYER, attendance=int(attendance[j])
            )
        rows, cols = np.nonzero(self.data.y)
        self.graph.add_edges_from((self._actor_id(i), self._event_id(j)) for i, j in zip(rows, cols))

    # --- Annotation ---

    def annotate_clusters(self, labels: np.ndarray, names: Optional[List[str]] = None) -> None:
        """Attach MAP heir index (1-based) and, optionally, its name to every actor node"""
        labels = np.asarray(labels)
        if labels.shape != (self.data.n,):
            raise ValueError(f"Expected {self.data.n} labels, got {labels.shape}")
        for i, code in enumerate(labels):
            node = self.graph.nodes[self._actor_id(i)]
            node["heir"] = int(code) + 1
            if names is not None:
                node["cluster"] = names[int(code)]

    # --- Queries ---

    def actor_nodes(self) -> List[str]:
        return [n for n, layer in self.graph.nodes(data="bipartite") if layer == ACTOR_LAYER]

    def event_nodes(self) -> List[str]:
        return [n for n, layer in self.graph.nodes(data="bipartite") if layer == EVENT_LAYER]

    def get_graph_stats(self) -> Dict[str, int]:
        return {
            "actors": self.data.n,
            "events": self.data.d,
            "edges": self.graph.number_of_edges(),
            "isolated_actors": sum(1 for n in self.actor_nodes() if self.graph.degree(n) == 0),
            "isolated_events": sum(1 for n in self.event_nodes() if self.graph.degree(n) == 0),
            "components": nx.number_connected_components(self.graph),
        }

    # --- Export ---

    def write_graphml(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        nx.write_graphml(self.graph, path)
        logger.info(f"Wrote bipartite graph ({self.graph.number_of_edges()} edges) to {path}")
        return path
