/** Graph explorer view model and the annotation round trip. */
import { ApiClient } from "./api.js";
import { GraphDoc } from "./types.js";

export interface GraphNode {
  id: string;
  label: string;
  rowCount: number;
  columnCount: number;
  piiColumns: string[];
  measures: string[];
}

export interface GraphEdge {
  id: string;
  source: string;
  target: string;
  label: string;
  cardinality: string;
  confidence: number;
}

export interface GraphView {
  graphId: string;
  version: number;
  nodes: GraphNode[];
  edges: GraphEdge[];
  annotations: { kind: string; summary: string }[];
}

export function graphView(doc: GraphDoc): GraphView {
  const nodes = doc.tables.map((table) => ({
    id: table.table_id,
    label: table.display_name,
    rowCount: table.row_count_estimate,
    columnCount: table.columns.length,
    piiColumns: table.columns.filter((c) => c.pii).map((c) => c.name),
    measures: table.columns
      .filter((c) => c.role === "measure")
      .map((c) => c.name),
  }));
  const edges = doc.joins.map((join) => ({
    id: `${join.left_table}.${join.left_columns.join(",")}->` +
      `${join.right_table}.${join.right_columns.join(",")}`,
    source: join.left_table,
    target: join.right_table,
    label: `${join.left_columns.join(", ")} = ${join.right_columns.join(", ")}`,
    cardinality: join.cardinality,
    confidence: join.confidence,
  }));
  const annotations = doc.annotations.map((a) => ({
    kind: a.kind,
    summary: JSON.stringify(a.target),
  }));
  return { graphId: doc.graph_id, version: doc.version, nodes, edges, annotations };
}

/**
 * Apply an annotation and re-fetch the graph.
 *
 * Returns both versions so the explorer can show the bump inline; the
 * refreshed document is the new source of truth for the view.
 */
export async function submitAnnotation(
  api: ApiClient,
  graphId: string,
  kind: string,
  target: Record<string, unknown>,
  payload: Record<string, unknown>,
): Promise<{ before: number; after: number; view: GraphView }> {
  const before = (await api.getGraph(graphId)).version;
  const after = await api.annotate(graphId, kind, target, payload);
  const refreshed = await api.getGraph(graphId);
  if (refreshed.version !== after) {
    throw new Error(
      `version skew: patch said ${after}, graph says ${refreshed.version}`,
    );
  }
  return { before, after, view: graphView(refreshed) };
}
