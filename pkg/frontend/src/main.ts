/** Browser entry point: wires the console and explorer into the page. */
import { ApiClient } from "./api.js";
import { QueryConsole } from "./console.js";
import { graphView } from "./explorer.js";
import { renderConsole, renderExplorer, renderInsights } from "./render.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function start() {
  const params = new URLSearchParams(window.location.search);
  const graphId = params.get("graph") ?? "cu";
  const token = params.get("token") ?? "";
  const api = new ApiClient("", token);
  const queryConsole = new QueryConsole(api, graphId);

  const output = el("console-output");
  const input = el("question") as HTMLInputElement;

  const paint = () => {
    output.innerHTML = renderConsole(queryConsole.state);
    output.querySelector("[data-run]")?.addEventListener("click", async () => {
      await queryConsole.runApproved();
      paint();
    });
    for (const btn of output.querySelectorAll("[data-suggest]")) {
      btn.addEventListener("click", async () => {
        input.value = btn.textContent ?? "";
        await queryConsole.ask(input.value);
        paint();
      });
    }
  };

  el("ask").addEventListener("click", async () => {
    await queryConsole.ask(input.value);
    paint();
  });

  const refreshGraph = async () => {
    el("explorer").innerHTML = renderExplorer(graphView(await api.getGraph(graphId)));
  };
  await refreshGraph();

  try {
    el("insights").innerHTML = renderInsights(await api.insights(graphId));
  } catch {
    el("insights").textContent = "Insights unavailable for this role.";
  }
}

start().catch((err) => {
  document.body.insertAdjacentHTML(
    "beforeend",
    `<p class="fatal">${String(err)}</p>`,
  );
});
