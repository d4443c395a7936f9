/**
 * Runtime schemas for every payload the UI consumes.
 *
 * These are validated at the API boundary so a drifting backend fails
 * loudly in one place instead of rendering garbage.
 */
import { z } from "zod";

export const ColumnSchema = z.object({
  name: z.string(),
  data_type: z.string(),
  display_name: z.string(),
  role: z.string(),
  pii: z.boolean(),
  description: z.string(),
  aliases: z.array(z.string()),
  sample_values: z.array(z.unknown()),
  stats_ref: z.string(),
});

export const TableSchema = z.object({
  table_id: z.string(),
  physical_name: z.string(),
  display_name: z.string(),
  alias: z.string(),
  description: z.string(),
  primary_key: z.array(z.string()),
  row_count_estimate: z.number(),
  columns: z.array(ColumnSchema),
});

export const JoinSchema = z.object({
  left_table: z.string(),
  left_columns: z.array(z.string()),
  right_table: z.string(),
  right_columns: z.array(z.string()),
  cardinality: z.string(),
  condition_kind: z.string(),
  confidence: z.number(),
  origin: z.string(),
});

export const AnnotationSchema = z.object({
  kind: z.string(),
  target: z.record(z.unknown()),
  payload: z.record(z.unknown()),
  author: z.string(),
  created_at: z.string(),
});

export const GraphSchema = z.object({
  graph_id: z.string(),
  schema_version: z.number(),
  version: z.number(),
  built_at: z.string(),
  tables: z.array(TableSchema),
  joins: z.array(JoinSchema),
  annotations: z.array(AnnotationSchema),
});
export type GraphDoc = z.infer<typeof GraphSchema>;

export const GroundingSchema = z.object({
  phrase: z.string(),
  target: z.record(z.unknown()),
  basis: z.string(),
  score: z.number(),
  alternatives: z.array(z.unknown()),
});

export const GroundingSetSchema = z.object({
  select: z.array(GroundingSchema),
  group: z.array(GroundingSchema),
  filters: z.array(GroundingSchema),
  time_anchor: GroundingSchema.nullable(),
  order: GroundingSchema.nullable(),
});

/** Per-column summary the service substitutes for raw rows. */
export const SummaryColumnSchema = z.union([
  z.object({
    column: z.string(),
    non_null: z.number(),
    min: z.number(),
    max: z.number(),
    sum: z.number(),
  }),
  z.object({
    column: z.string(),
    non_null: z.number(),
    distinct: z.number(),
  }),
]);
export type SummaryColumn = z.infer<typeof SummaryColumnSchema>;

export const FullResultSchema = z.object({
  columns: z.array(z.string()),
  rows: z.array(z.array(z.unknown())),
  summary_only: z.literal(false),
});

export const SummaryResultSchema = z.object({
  columns: z.array(SummaryColumnSchema),
  rows: z.array(z.array(z.unknown())).length(0),
  row_count: z.number(),
  summary_only: z.literal(true),
});

export const ResultSchema = z.union([FullResultSchema, SummaryResultSchema]);
export type QueryResult = z.infer<typeof ResultSchema>;

export const QueryResponseSchema = z.object({
  audit_id: z.string(),
  sql: z.string(),
  tables: z.array(z.string()),
  interpretation: z.array(z.string()),
  rules_applied: z.array(z.string()),
  sketch: z.record(z.unknown()),
  groundings: GroundingSetSchema,
  result: ResultSchema.optional(),
});
export type QueryResponse = z.infer<typeof QueryResponseSchema>;

export const PlannerErrorSchema = z.object({
  stage: z.string(),
  message: z.string(),
  phrase: z.string().optional(),
  pii_blocked: z.boolean().optional(),
  alternatives: z.array(z.tuple([z.string(), z.number()])).optional(),
});
export type PlannerErrorPayload = z.infer<typeof PlannerErrorSchema>;

export const AnnotationPatchResponseSchema = z.object({
  graph_id: z.string(),
  version: z.number(),
});

export const HistorySchema = z.object({
  history: z.array(
    z.object({
      audit_id: z.string().optional(),
      question: z.string().optional(),
      sql: z.string().optional(),
      principal: z.string(),
      error: z.record(z.unknown()).optional(),
    }).passthrough(),
  ),
});

export const InsightsSchema = z.object({
  query_count: z.number(),
  error_rate: z.number(),
  errors_by_stage: z.record(z.number()),
  median_latency_ms: z.number(),
  top_grounded_columns: z.array(
    z.object({ column: z.string(), count: z.number() }),
  ),
  feedback: z.record(z.number()),
});
export type Insights = z.infer<typeof InsightsSchema>;
