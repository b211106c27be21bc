import networkx as nx
import numpy as np
import pytest

from backend.models.entities import IncidenceMatrix
from backend.services.graph_manager import GraphManager


@pytest.fixture
def graph():
    data = IncidenceMatrix(
        y=np.array([[1, 1, 0], [0, 1, 0], [0, 0, 0]]),
        actor_labels=["ann", "bob", "cat"],
        event_labels=["e1", "e2", "e3"],
    )
    return GraphManager(data)


def test_bipartite_structure(graph):
    assert sorted(graph.actor_nodes()) == ["actor:ann", "actor:bob", "actor:cat"]
    assert len(graph.event_nodes()) == 3
    assert graph.graph.has_edge("actor:ann", "event:e2")
    assert not graph.graph.has_edge("actor:bob", "event:e1")
    assert graph.graph.nodes["actor:ann"]["attendances"] == 2
    assert graph.graph.nodes["event:e2"]["attendance"] == 2


def test_stats(graph):
    stats = graph.get_graph_stats()
    assert stats == {"actors": 3, "events": 3, "edges": 3, "isolated_actors": 1, "isolated_events": 1, "components": 3}


def test_annotation(graph):
    graph.annotate_clusters(np.array([3, 1, 0]), names=["z=(0,0)", "z=(1,0)", "z=(0,1)", "z=(1,1)"])
    assert graph.graph.nodes["actor:ann"]["heir"] == 4
    assert graph.graph.nodes["actor:ann"]["cluster"] == "z=(1,1)"
    assert graph.graph.nodes["actor:cat"]["heir"] == 1
    assert "heir" not in graph.graph.nodes["event:e1"]


def test_annotation_length(graph):
    with pytest.raises(ValueError):
        graph.annotate_clusters(np.array([0, 1]))


def test_graphml_export(tmp_path, graph):
    graph.annotate_clusters(np.array([1, 1, 0]))
    path = graph.write_graphml(tmp_path / "g.graphml")
    again = nx.read_graphml(path)
    assert again.number_of_edges() == 3
    assert again.nodes["actor:bob"]["heir"] == 2
