// Browser entry point: wires the document loader, panel forms, ranking
// table and diagnostics area together. All numbers shown come verbatim
// from the service.

import { ServiceClient } from "./client.js";
import type { FormField, PanelForm } from "./forms.js";
import type { RankingView } from "./ranking.js";
import { LoadedConsole, loadSession } from "./session.js";
import type { ModelDocument } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showDiagnostics(messages: string[]): void {
  const area = el<HTMLDivElement>("diagnostics");
  area.textContent = messages.join("\n");
  area.style.display = messages.length ? "block" : "none";
}

function renderRanking(view: RankingView): void {
  const table = el<HTMLTableElement>("ranking");
  const header = view.usesNormalized
    ? "<tr><th>#</th><th>policy</th><th>score</th><th>raw EU</th><th>delta</th></tr>"
    : "<tr><th>#</th><th>policy</th><th>EU</th><th></th><th>delta</th></tr>";
  const rows = view.rows
    .map((row) => {
      const delta =
        row.delta === null ? "" : (row.delta >= 0 ? "+" : "") + row.delta.toPrecision(4);
      const tie = row.tied ? " (tie)" : "";
      return (
        `<tr><td>${row.position}</td><td>${row.policy}${tie}</td>` +
        `<td>${row.value}</td><td>${view.usesNormalized ? row.raw : ""}</td>` +
        `<td>${delta}</td></tr>`
      );
    })
    .join("");
  table.innerHTML = header + rows;
}

function fieldLabel(field: FormField): string {
  if (field.statistic === "value") {
    return `E(${field.target}) @ ${field.policy}`;
  }
  return `${field.statistic}(${field.target}) @ ${field.policy}`;
}

function renderForms(console_: LoadedConsole): void {
  const host = el<HTMLDivElement>("panels");
  host.innerHTML = "";
  for (const form of console_.session.forms) {
    const section = document.createElement("section");
    const title = document.createElement("h3");
    title.textContent = `Panel ${form.panel}`;
    section.appendChild(title);
    const needs = document.createElement("p");
    needs.className = "requirements";
    needs.textContent =
      "delivers: " + form.requirements.map((r) => `E(${r.monomial})`).join(", ");
    section.appendChild(needs);
    for (const field of form.fields) {
      const row = document.createElement("label");
      row.className = "field";
      const caption = document.createElement("span");
      caption.textContent = fieldLabel(field);
      const input = document.createElement("input");
      input.type = "number";
      input.step = "any";
      input.value = String(field.value);
      const note = document.createElement("em");
      input.addEventListener("input", () => {
        const problem = console_.session.edit(field.key, input.value);
        row.classList.toggle("dirty", field.dirty);
        note.textContent = problem ?? (field.dirty ? "unsaved" : "");
      });
      row.append(caption, input, note);
      section.appendChild(row);
    }
    host.appendChild(section);
  }
}

function attachForm(console_: LoadedConsole): void {
  renderForms(console_);
  el<HTMLButtonElement>("undo").onclick = () => {
    console_.session.undo();
    renderForms(console_);
  };
}

async function boot(): Promise<void> {
  const base = (el<HTMLInputElement>("service-url").value || "").trim() || window.location.origin;
  const client = new ServiceClient(base);
  const text = el<HTMLTextAreaElement>("document").value;
  let parsed: ModelDocument;
  try {
    parsed = JSON.parse(text) as ModelDocument;
  } catch (error) {
    showDiagnostics([`invalid JSON: ${String(error)}`]);
    return;
  }
  const utility = el<HTMLInputElement>("utility").value.trim() || undefined;
  try {
    const loaded = await loadSession(client, parsed, {
      utility,
      onUpdate: (view) => {
        renderRanking(view);
        showDiagnostics([]);
      },
      onError: (diagnostics) => showDiagnostics(diagnostics),
    });
    const conditions = loaded.adequacy.independences.conditions.map((c) => c.text);
    el<HTMLPreElement>("conditions").textContent = conditions.join("\n") || "(none)";
    attachForm(loaded);
    await loaded.session.rescore();
  } catch (error) {
    const diagnostics = (error as { diagnostics?: string[] }).diagnostics;
    showDiagnostics(diagnostics ?? [String(error)]);
  }
}

el<HTMLButtonElement>("load").addEventListener("click", () => {
  void boot();
});
