/** Shapes returned by the graphqa HTTP service, field for field. */

export interface AnswerView {
  id: string | null;
  label: string;
  score: number | null;
}

export interface SrView {
  context: string;
  question: string;
  relation: string;
  type: string;
}

export interface EntityView {
  id: string;
  label: string;
  /** Character spans of this entity's mentions in the evidence text. */
  spans: [number, number][];
}

export interface EvidenceView {
  text: string;
  source: string;
  score: number;
  entities: EntityView[];
}

export interface TurnView {
  question: string;
  answer: AnswerView | null;
  ranked_answers: AnswerView[];
  sr: SrView | null;
  evidences: EvidenceView[];
  turn: number;
  existential: boolean;
  diagnostic?: string;
}

export interface SessionView {
  session_id: string;
  created: string;
  updated: string;
  turns: TurnView[];
}

export interface HealthView {
  status: string;
  model_versions: Record<string, string>;
}
