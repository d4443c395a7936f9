/** HTML renderers. Pure string-in, string-out so they test without a DOM. */
import { ConsoleState, errorSuggestions, interpretationLines, resultView } from "./console.js";
import { GraphView } from "./explorer.js";
import { Insights } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function table(header: string[], body: string[][]): string {
  const head = header.map((h) => `<th>${escapeHtml(h)}</th>`).join("");
  const rows = body
    .map((row) => `<tr>${row.map((c) => `<td>${escapeHtml(c)}</td>`).join("")}</tr>`)
    .join("");
  return `<table><thead><tr>${head}</tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderConsole(state: ConsoleState): string {
  const parts: string[] = [];
  if (state.phase === "error" && state.error) {
    parts.push(`<p class="error">${escapeHtml(state.error.message)}</p>`);
    if (state.error.pii_blocked) {
      parts.push('<p class="pii">This question asks for protected data.</p>');
    }
    const suggestions = errorSuggestions(state.error);
    if (suggestions.length > 0) {
      parts.push(
        "<ul class=\"suggestions\">" +
          suggestions
            .map((s) => `<li><button data-suggest>${escapeHtml(s)}</button></li>`)
            .join("") +
          "</ul>",
      );
    }
    return parts.join("");
  }
  if (state.phase === "planned" || state.phase === "executed") {
    parts.push(
      '<ol class="interpretation">' +
        interpretationLines(state)
          .map((line) => `<li>${escapeHtml(line)}</li>`)
          .join("") +
        "</ol>",
    );
  }
  if (state.phase === "planned") {
    parts.push('<button data-run>Run this query</button>');
  }
  if (state.phase === "executed" && state.result) {
    const view = resultView(state.result);
    parts.push(`<div class="result ${view.kind}">`);
    parts.push(table(view.header, view.body));
    parts.push(`<p class="note">${escapeHtml(view.note)}</p>`);
    parts.push("</div>");
  }
  return parts.join("");
}

export function renderExplorer(view: GraphView): string {
  const nodes = view.nodes
    .map((n) => {
      const pii = n.piiColumns.length > 0
        ? ` <span class="pii-badge">${n.piiColumns.length} PII</span>`
        : "";
      return `<li class="node" data-node="${escapeHtml(n.id)}">` +
        `${escapeHtml(n.label)} (${n.rowCount} rows)${pii}</li>`;
    })
    .join("");
  const edges = view.edges
    .map((e) =>
      `<li class="edge" data-edge="${escapeHtml(e.id)}">` +
      `${escapeHtml(e.source)} &rarr; ${escapeHtml(e.target)}` +
      ` on ${escapeHtml(e.label)} (${e.cardinality})</li>`)
    .join("");
  return (
    `<p class="version">Graph ${escapeHtml(view.graphId)}, version ${view.version}</p>` +
    `<ul class="nodes">${nodes}</ul><ul class="edges">${edges}</ul>`
  );
}

export function renderInsights(insights: Insights): string {
  const top = insights.top_grounded_columns
    .map((c) => [c.column, String(c.count)]);
  return (
    `<p>${insights.query_count} queries, ` +
    `${Math.round(insights.error_rate * 100)}% errors, ` +
    `median latency ${insights.median_latency_ms} ms</p>` +
    table(["column", "times grounded"], top)
  );
}
