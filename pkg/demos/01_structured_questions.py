"""From conversational questions to structured representations.

A follow-up question like "who played him?" is unanswerable on its own; the
SR makes the intent explicit as four slots: context entity, question entity,
relation, expected answer type. This walk-through builds a small conversation
and shows candidate generation, the hallucination filter, and the yes/no
short circuit.
"""

from graphqa import (Conversation, Turn, generate_sr_candidates,
                     hallucination_filter, is_existential_question, parse_sr,
                     serialize_sr)

# a two-turn history: every turn stores the question and the answer given
conversation = Conversation((
    Turn("Who wrote the book Angels and Demons?", "Dan Brown", "Q7343"),
    Turn("the main character in his books?", "Robert Langdon", "Q310594"),
), "walkthrough")

question = "who played him in the films?"

print("history:")
for turn in conversation.turns:
    print(f"  Q: {turn.question}")
    print(f"  A: {turn.answer_label}")
print(f"now: {question}\n")

# the rule-based generator proposes pipe-delimited candidates, best first
candidates = generate_sr_candidates(conversation, question, k=5)
print("SR candidates:")
for rank, sr in enumerate(candidates, start=1):
    print(f"  {rank}. {serialize_sr(sr)}")

# suppose a learned generator had hallucinated an actor name instead.
# the filter rejects any candidate whose context/question/relation tokens
# do not occur in the conversation so far (the answer type is exempt,
# it names a class rather than quoting the history).
hallucinated = parse_sr(
    "Angels and Demons|Robert de Niro|played him in the films|human")
grounded = parse_sr(
    "Angels and Demons|Robert Langdon|played him in the films|human")
selection = hallucination_filter([hallucinated, grounded], conversation,
                                 question)
print(f"\nfilter picked rank {selection.rank}: "
      f"{serialize_sr(selection.sr)}")
print(f"fallback used: {selection.used_fallback}")

# yes/no questions are detected by their leading auxiliary and answered
# "Yes" before any SR or retrieval work happens
for q in (question, "Did Tom Hanks play Robert Langdon?"):
    print(f"\nexistential({q!r}) = {is_existential_question(q)}")
