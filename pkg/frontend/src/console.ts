/**
 * Query console state machine.
 *
 * The console always plans first: `ask` issues a dry run and surfaces the
 * staged interpretation for review. `runApproved` is the only path that
 * executes, and it refuses to run unless the current interpretation came
 * from the same question, so results can never appear before the plan.
 */
import { ApiClient, PlanningError } from "./api.js";
import { PlannerErrorPayload, QueryResponse, QueryResult } from "./types.js";

export type ConsolePhase = "idle" | "planned" | "executed" | "error";

export interface ConsoleState {
  phase: ConsolePhase;
  question: string;
  plan: QueryResponse | null;
  result: QueryResult | null;
  error: PlannerErrorPayload | null;
}

export class QueryConsole {
  state: ConsoleState = {
    phase: "idle",
    question: "",
    plan: null,
    result: null,
    error: null,
  };

  constructor(
    private readonly api: ApiClient,
    private readonly graphId: string,
  ) {}

  /** Plan the question without touching the data source. */
  async ask(question: string): Promise<ConsoleState> {
    this.state = { phase: "idle", question, plan: null, result: null, error: null };
    try {
      const plan = await this.api.query(this.graphId, question, { dryRun: true });
      this.state = { ...this.state, phase: "planned", plan };
    } catch (err) {
      if (err instanceof PlanningError) {
        this.state = { ...this.state, phase: "error", error: err.payload };
      } else {
        throw err;
      }
    }
    return this.state;
  }

  /** Execute the already-reviewed plan. Requires a prior dry run. */
  async runApproved(): Promise<ConsoleState> {
    if (this.state.phase !== "planned" || this.state.plan === null) {
      throw new Error("nothing planned: review a dry run before executing");
    }
    const response = await this.api.query(this.graphId, this.state.question, {
      execute: true,
    });
    this.state = {
      ...this.state,
      phase: "executed",
      plan: response,
      result: response.result ?? null,
    };
    return this.state;
  }
}

/** Lines shown in the review pane before any execution is offered. */
export function interpretationLines(state: ConsoleState): string[] {
  if (state.plan === null) return [];
  return state.plan.interpretation;
}

/**
 * Suggestions for an unresolvable phrase, best first.
 *
 * The backend reports scored alternatives; the console presents them as
 * clickable rewordings instead of a bare failure.
 */
export function errorSuggestions(error: PlannerErrorPayload): string[] {
  const alts = error.alternatives ?? [];
  return [...alts]
    .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]))
    .map(([name]) => name);
}

export interface ResultView {
  kind: "rows" | "summary";
  header: string[];
  body: string[][];
  note: string;
}

/** Shape an execution result for the table widget. */
export function resultView(result: QueryResult): ResultView {
  if (!result.summary_only) {
    return {
      kind: "rows",
      header: result.columns,
      body: result.rows.map((row) => row.map((cell) => String(cell ?? ""))),
      note: `${result.rows.length} rows`,
    };
  }
  const body = result.columns.map((col) => {
    const detail =
      "distinct" in col
        ? `${col.distinct} distinct values`
        : `min ${col.min}, max ${col.max}, sum ${col.sum}`;
    return [col.column, String(col.non_null), detail];
  });
  return {
    kind: "summary",
    header: ["column", "non-null", "summary"],
    body,
    note: `${result.row_count} matching rows (summary only for your role)`,
  };
}
