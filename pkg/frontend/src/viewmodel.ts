/**
 * Pure mapping from a validated trace to what the console shows. No
 * inference happens here: every number in the view is copied verbatim from
 * a trace field, so the rendered probabilities are exactly what the service
 * reported.
 */

import type { SpanInfo, Trace, Turn } from "./schema.js";
import { SchemaError } from "./schema.js";

export const ENTAILMENT_STATES = ["Entailment", "Contradiction", "Unknown"] as const;
export type EntailmentState = (typeof ENTAILMENT_STATES)[number];

/** Probability sums may drift from 1 only by floating-point noise. */
export const ROW_SUM_TOLERANCE = 1e-6;

export interface HeatmapCell {
  turnIndex: number;
  sentenceIndex: number;
  /** [entailment, contradiction, unknown], verbatim from the trace. */
  probabilities: readonly [number, number, number];
  state: EntailmentState;
  /** Largest of the three probabilities; drives cell opacity. */
  confidence: number;
}

export interface TranscriptEntry {
  speaker: "machine" | "user";
  text: string;
  turnIndex: number;
}

export interface SpanHighlight {
  turnIndex: number;
  sentenceIndex: number;
  charStart: number;
  charEnd: number;
  text: string;
}

export interface Banner {
  status: Trace["status"];
  /** "Yes" | "No" | "Irrelevant" when concluded, null otherwise. */
  conclusion: string | null;
  text: string;
}

export interface SessionView {
  sessionId: string;
  ruleText: string;
  scenario: string;
  question: string;
  sentences: string[];
  transcript: TranscriptEntry[];
  prompt: string | null;
  banner: Banner;
  /** turnCount rows by sentenceCount columns. */
  heatmap: HeatmapCell[][];
  turnCount: number;
  sentenceCount: number;
  /** Latest turn's extracted span, if the machine is inquiring. */
  highlight: SpanHighlight | null;
  inputsEnabled: boolean;
  /** Latest turn's decision probabilities, verbatim from the trace. */
  decisionProbabilities: Record<string, number>;
}

function argmaxState(row: readonly [number, number, number]): EntailmentState {
  let best = 0;
  if (row[1] > row[best]!) best = 1;
  if (row[2] > row[best]!) best = 2;
  return ENTAILMENT_STATES[best]!;
}

function toCell(turn: Turn, sentenceIndex: number): HeatmapCell {
  const row = turn.entailment[sentenceIndex];
  if (row === undefined || row.length !== 3) {
    throw new SchemaError(`turn ${turn.index} lacks probabilities for sentence ${sentenceIndex}`);
  }
  const probabilities = [row[0]!, row[1]!, row[2]!] as const;
  const sum = probabilities[0] + probabilities[1] + probabilities[2];
  if (Math.abs(sum - 1) > ROW_SUM_TOLERANCE) {
    throw new SchemaError(
      `entailment probabilities for turn ${turn.index}, sentence ${sentenceIndex} sum to ${sum}`);
  }
  return {
    turnIndex: turn.index,
    sentenceIndex,
    probabilities,
    state: argmaxState(probabilities),
    confidence: Math.max(...probabilities),
  };
}

function toHighlight(turn: Turn, ruleText: string): SpanHighlight | null {
  const span: SpanInfo | null = turn.span;
  if (turn.decision !== "Inquire" || span === null) return null;
  const { char_start: charStart, char_end: charEnd } = span;
  if (charStart < 0 || charEnd > ruleText.length || charStart >= charEnd) {
    throw new SchemaError(`span offsets [${charStart}, ${charEnd}) fall outside the rule text`);
  }
  if (ruleText.slice(charStart, charEnd) !== span.text) {
    throw new SchemaError("span text does not match the rule text at its offsets");
  }
  return { turnIndex: turn.index, sentenceIndex: span.sentence_index, charStart, charEnd, text: span.text };
}

function toBanner(trace: Trace): Banner {
  switch (trace.status) {
    case "active":
      return { status: "active", conclusion: null, text: "Dialog in progress" };
    case "concluded":
      return { status: "concluded", conclusion: trace.conclusion, text: `${trace.conclusion}` };
    case "aborted": {
      const last = trace.turns[trace.turns.length - 1];
      const why = last?.diagnostic ?? "turn limit reached";
      return { status: "aborted", conclusion: null, text: `Aborted: ${why}` };
    }
  }
}

/**
 * Build the console's view of a session. Throws SchemaError when the trace
 * violates a display invariant (bad probability sums, span offsets outside
 * the rule text), so corrupt data never renders as if it were fine.
 */
export function buildView(trace: Trace): SessionView {
  const transcript: TranscriptEntry[] = [];
  for (const turn of trace.turns) {
    if (turn.follow_up_question !== null) {
      transcript.push({ speaker: "machine", text: turn.follow_up_question, turnIndex: turn.index });
    }
    if (turn.answer !== null) {
      transcript.push({ speaker: "user", text: turn.answer, turnIndex: turn.index });
    }
  }

  const heatmap = trace.turns.map((turn) =>
    trace.sentences.map((_, sentenceIndex) => toCell(turn, sentenceIndex)));

  const lastTurn = trace.turns[trace.turns.length - 1];
  if (lastTurn === undefined) throw new SchemaError("trace holds no turns");

  return {
    sessionId: trace.session_id,
    ruleText: trace.rule_text,
    scenario: trace.scenario,
    question: trace.question,
    sentences: trace.sentences.map((s) => s.text),
    transcript,
    prompt: trace.status === "active" ? trace.pending_question : null,
    banner: toBanner(trace),
    heatmap,
    turnCount: trace.turns.length,
    sentenceCount: trace.sentences.length,
    highlight: toHighlight(lastTurn, trace.rule_text),
    inputsEnabled: trace.status === "active" && trace.pending_question !== null,
    decisionProbabilities: lastTurn.decision_probabilities,
  };
}
