"""Building and shrinking the bipartite answer graph.

Retrieved evidences become one side of a bipartite graph; the entities they
mention become the other. Two evidences from different sources connect the
moment they mention the same entity, which is how a KB fact can corroborate
a table cell. Dates written in the text become pseudo-entities so temporal
answers are rankable nodes like any other.
"""

import numpy as np

from graphqa import build_graph, cap_bm25, parse_sr, retrieve, shrink_graph
from graphqa.demo_data import demo_store
from graphqa.graph import detect_temporal_entities

store = demo_store()
sr = parse_sr("Angels and Demons|Angels and Demons|wrote the book|human")
evidences = cap_bm25(retrieve(sr, store), sr.text_without_delimiters(), k=500)

graph = build_graph(evidences)
print(f"graph: {graph.num_entities} entities, {graph.num_evidences} evidences, "
      f"{len(graph.edges())} edges")

# entity nodes know which evidences touch them; cross-source overlap shows
# up as one entity with evidences from several source tags
for entity_id in graph.entity_ids():
    node = graph.entity_nodes[entity_id]
    sources = sorted({graph.evidence_nodes[ev_id].evidence.source
                      for ev_id in node.evidence_ids})
    print(f"  {node.entity.label!r} ({entity_id}) in "
          f"{len(node.evidence_ids)} evidences, sources {sources}")

# temporal expressions become entities too: "2000" in the publication fact
# is detected, normalized to an ISO id, and linked like a KB entity
sample = "Angels and Demons publication date 2000"
print(f"\ntemporal detection on {sample!r}: {detect_temporal_entities(sample)}")
date_nodes = [eid for eid in graph.entity_ids() if eid.startswith("date:")]
print(f"date pseudo-entities in the graph: {date_nodes}")

# shrinking keeps the k best-scored evidences plus the entities still
# touching them; in the pipeline the scores come from the pruning model,
# here random scores stand in
rng = np.random.default_rng(0)
scores = {ev_id: float(s) for ev_id, s in
          zip(graph.evidence_ids(), rng.random(graph.num_evidences))}
small = shrink_graph(graph, scores, k=3)
print(f"\nafter keeping top 3 evidences: {small.num_entities} entities, "
      f"{small.num_evidences} evidences")
for ev_id in small.evidence_ids():
    print(f"  kept [{scores[ev_id]:.2f}] {small.evidence_nodes[ev_id].evidence.text}")

# shrinking is monotone: every kept node existed before, no new edges appear
assert set(small.edges()) <= set(graph.edges())
print("\nshrunken edge set is a subset of the original: ok")
