/**
 * Typed mirror of the session service's versioned trace payload, plus a
 * structural validator. The console trusts nothing it did not validate:
 * every response body passes through validateTrace before any rendering.
 */

export const SUPPORTED_SCHEMA_VERSION = 1;

export type SessionStatus = "active" | "concluded" | "aborted";

export interface SpanInfo {
  sentence_index: number;
  token_start: number;
  token_end: number;
  text: string;
  char_start: number;
  char_end: number;
}

export interface SentenceInfo {
  index: number;
  text: string;
  char_start: number;
  char_end: number;
}

export interface Turn {
  index: number;
  decision: string;
  decision_probabilities: Record<string, number>;
  /** M rows of [entailment, contradiction, unknown] probabilities. */
  entailment: number[][];
  entailment_labels: string[];
  gates: number[][];
  span: SpanInfo | null;
  follow_up_question: string | null;
  answer: string | null;
  diagnostic: string | null;
}

export interface Trace {
  schema_version: number;
  session_id: string;
  status: SessionStatus;
  conclusion: string | null;
  rule_text: string;
  scenario: string;
  question: string;
  max_turns: number;
  sentences: SentenceInfo[];
  pending_question: string | null;
  turns: Turn[];
}

/** Envelope returned by session-creating and answer-posting endpoints. */
export interface TurnResponse {
  schema_version: number;
  session_id: string;
  turn: Turn;
  trace: Trace;
}

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export class SchemaVersionError extends SchemaError {
  readonly got: number;

  constructor(got: number) {
    super(`trace schema version ${got} is not supported (console speaks ${SUPPORTED_SCHEMA_VERSION})`);
    this.name = "SchemaVersionError";
    this.got = got;
  }
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function need<T>(obj: Record<string, unknown>, key: string, check: (v: unknown) => v is T, what: string): T {
  const v = obj[key];
  if (!check(v)) throw new SchemaError(`${what}.${key} is missing or has the wrong type`);
  return v;
}

const isString = (v: unknown): v is string => typeof v === "string";
const isNumber = (v: unknown): v is number => typeof v === "number" && Number.isFinite(v);
const isStringOrNull = (v: unknown): v is string | null => v === null || typeof v === "string";

function isNumberMatrix(v: unknown): v is number[][] {
  return Array.isArray(v) && v.every((row) => Array.isArray(row) && row.every(isNumber));
}

function isStringArray(v: unknown): v is string[] {
  return Array.isArray(v) && v.every(isString);
}

function validateSpan(v: unknown, what: string): SpanInfo | null {
  if (v === null) return null;
  if (!isRecord(v)) throw new SchemaError(`${what} is not an object`);
  return {
    sentence_index: need(v, "sentence_index", isNumber, what),
    token_start: need(v, "token_start", isNumber, what),
    token_end: need(v, "token_end", isNumber, what),
    text: need(v, "text", isString, what),
    char_start: need(v, "char_start", isNumber, what),
    char_end: need(v, "char_end", isNumber, what),
  };
}

function validateTurn(v: unknown, what: string): Turn {
  if (!isRecord(v)) throw new SchemaError(`${what} is not an object`);
  const probs = v["decision_probabilities"];
  if (!isRecord(probs) || !Object.values(probs).every(isNumber)) {
    throw new SchemaError(`${what}.decision_probabilities must map labels to numbers`);
  }
  const entailment = need(v, "entailment", isNumberMatrix, what);
  for (const row of entailment) {
    if (row.length !== 3) {
      throw new SchemaError(`${what}.entailment rows must hold 3 probabilities, got ${row.length}`);
    }
  }
  return {
    index: need(v, "index", isNumber, what),
    decision: need(v, "decision", isString, what),
    decision_probabilities: probs as Record<string, number>,
    entailment,
    entailment_labels: need(v, "entailment_labels", isStringArray, what),
    gates: need(v, "gates", isNumberMatrix, what),
    span: validateSpan(v["span"], `${what}.span`),
    follow_up_question: need(v, "follow_up_question", isStringOrNull, what),
    answer: need(v, "answer", isStringOrNull, what),
    diagnostic: need(v, "diagnostic", isStringOrNull, what),
  };
}

function validateSentence(v: unknown, what: string): SentenceInfo {
  if (!isRecord(v)) throw new SchemaError(`${what} is not an object`);
  return {
    index: need(v, "index", isNumber, what),
    text: need(v, "text", isString, what),
    char_start: need(v, "char_start", isNumber, what),
    char_end: need(v, "char_end", isNumber, what),
  };
}

/**
 * Check an untrusted value against the trace contract. An unexpected
 * schema_version raises SchemaVersionError before anything else is touched,
 * so a console talking to a newer service fails with a clear message.
 */
export function validateTrace(value: unknown): Trace {
  if (!isRecord(value)) throw new SchemaError("trace is not an object");
  const version = value["schema_version"];
  if (!isNumber(version)) throw new SchemaError("trace.schema_version is missing");
  if (version !== SUPPORTED_SCHEMA_VERSION) throw new SchemaVersionError(version);

  const status = need(value, "status", isString, "trace");
  if (status !== "active" && status !== "concluded" && status !== "aborted") {
    throw new SchemaError(`trace.status ${JSON.stringify(status)} is not a session status`);
  }
  const rawSentences = value["sentences"];
  const rawTurns = value["turns"];
  if (!Array.isArray(rawSentences)) throw new SchemaError("trace.sentences must be an array");
  if (!Array.isArray(rawTurns)) throw new SchemaError("trace.turns must be an array");

  const trace: Trace = {
    schema_version: version,
    session_id: need(value, "session_id", isString, "trace"),
    status,
    conclusion: need(value, "conclusion", isStringOrNull, "trace"),
    rule_text: need(value, "rule_text", isString, "trace"),
    scenario: need(value, "scenario", isString, "trace"),
    question: need(value, "question", isString, "trace"),
    max_turns: need(value, "max_turns", isNumber, "trace"),
    sentences: rawSentences.map((s, i) => validateSentence(s, `trace.sentences[${i}]`)),
    pending_question: need(value, "pending_question", isStringOrNull, "trace"),
    turns: rawTurns.map((t, i) => validateTurn(t, `trace.turns[${i}]`)),
  };

  const m = trace.sentences.length;
  for (const turn of trace.turns) {
    if (turn.entailment.length !== m) {
      throw new SchemaError(
        `trace.turns[${turn.index}].entailment has ${turn.entailment.length} rows for ${m} sentences`);
    }
  }
  return trace;
}

/** Validate the create-session / post-answer envelope. */
export function validateTurnResponse(value: unknown): TurnResponse {
  if (!isRecord(value)) throw new SchemaError("response is not an object");
  const trace = validateTrace(value["trace"]);
  return {
    schema_version: need(value, "schema_version", isNumber, "response"),
    session_id: need(value, "session_id", isString, "response"),
    turn: validateTurn(value["turn"], "response.turn"),
    trace,
  };
}
