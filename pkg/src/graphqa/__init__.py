"""Conversational question answering over a local heterogeneous snapshot.

Three stages: questions become four-slot structured representations (SRs),
the SR pulls evidences for its entities out of the snapshot store, and a
pair of graph neural networks first shrinks the entity-evidence graph and
then scores entities as answers, with top evidences as the explanation.
"""

from .answers import entity_matches_gold, matching_entity_ids, ranked_ids
from .autodiff import Tensor, segment_softmax, softmax
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .evaluation import (BenchmarkConversation, BenchmarkTurn, MetricsReport,
                         evaluate, format_report, load_benchmark)
from .evidence import (EntityRef, Evidence, EvidenceStore, KbFact, Mention,
                       SOURCE_TAGS, cap_bm25, ingest_snapshot, load_store,
                       retrieve, save_store_dir, verbalize_fact,
                       verbalize_infobox_entry, verbalize_table_record)
from .gnn import (GnnConfig, GnnParameters, NodeScores, Vocabulary, forward,
                  forward_pass, loss, loss_from_pass, make_targets)
from .graph import (AnswerGraph, EntityNode, EvidenceNode, GraphInstance,
                    build_graph, dump_instances, load_instances, shrink_graph)
from .metrics import (answer_presence, evidence_set_has_answer, hit_at_k, mrr,
                      precision_at_1)
from .pipeline import (AnswerResult, PipelineRuntime, append_turn,
                       parse_schedule, run_turn, validate_schedule)
from .sr import (Conversation, StructuredRepresentation, Turn,
                 generate_sr_candidates, hallucination_filter,
                 is_existential_question, parse_sr, serialize_sr)
from .training import (OptimizerConfig, TrainResult, build_vocabulary,
                       evaluate_instances, gradient_check, train)

__all__ = [name for name in dir() if not name.startswith("_")]
