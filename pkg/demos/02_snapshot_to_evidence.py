"""From a heterogeneous snapshot to a ranked evidence pool.

The knowledge snapshot has four record shapes: KB facts (with qualifiers),
entity-anchored sentences, table rows, and infobox entries. Everything is
verbalized into one evidence form so a single retriever and one graph
builder can treat them uniformly. Retrieval matches SR terms against
evidence entities, then a BM25 cap keeps the best-scoring slice.
"""

import json
import tempfile

from graphqa import cap_bm25, ingest_snapshot, parse_sr, retrieve
from graphqa.demo_data import write_demo_snapshot

snapshot_dir = tempfile.mkdtemp(prefix="snapshot-")
paths = write_demo_snapshot(snapshot_dir)

# one raw record of each shape, straight from the JSONL files
for name, path in paths.items():
    with open(path, encoding="utf-8") as handle:
        first = json.loads(handle.readline())
    print(f"{name}: {json.dumps(first)[:100]}...")

store = ingest_snapshot(paths["facts"], paths["text"], paths["tables"],
                        paths["infoboxes"])
print(f"\ningested {len(store)} evidences")

# every evidence carries a source tag, a verbalized text, and entity mentions
# with character spans into that text
by_source = {}
for ev in store.evidences.values():
    by_source.setdefault(ev.source, []).append(ev)
for source, evidences in sorted(by_source.items()):
    ev = evidences[0]
    print(f"\n[{source}] {ev.text}")
    for mention in ev.mentions:
        surface = ev.text[mention.start:mention.end]
        print(f"    {surface!r} -> {mention.entity.id} ({mention.entity.kb_type})")

# retrieval keys on the two entity slots only: an evidence qualifies when one
# of its mentioned entities' labels occurs inside the context-entity or
# question-entity text (relation words are too noisy to trust as names)
sr = parse_sr("Angels and Demons|Angels and Demons|wrote the book|human")
pool = retrieve(sr, store)
print(f"\nretrieved {len(pool)} evidences for "
      f"{sr.text_without_delimiters()!r}")

# the cap re-ranks the pool with BM25 over the verbalized texts and keeps
# the top k; in production k=500, here the pool is tiny so it just reorders
capped = cap_bm25(pool, sr.text_without_delimiters(), k=5)
print(f"top {len(capped)} after BM25 cap:")
for ev in capped:
    print(f"  [{ev.source}] {ev.text}")
