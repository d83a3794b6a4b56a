import type {
  Evaluation,
  InstanceRow,
  Meta,
  Prediction,
  Selection,
} from "./types.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(x: number, digits = 4): string {
  return Number.isFinite(x) ? x.toFixed(digits) : String(x);
}

export function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

export function renderMeta(meta: Meta): string {
  const total = meta.schema.groups.reduce((acc, g) => acc + g.dims, 0);
  return `
    <div class="meta-line">${meta.n_rows} rows &middot; ${meta.schema.num_classes} classes
      &middot; ${meta.schema.groups.length} concept groups (${total} dims)
      &middot; splits ${meta.splits["train"]}/${meta.splits["val"]}/${meta.splits["test"]}</div>
    <div class="meta-line mono">schema ${esc(meta.schema_fingerprint.slice(0, 12))}</div>`;
}

export interface GroupPanelState {
  edited: number[];
  mask: number[];
  lockedIn: Set<number>;
  excluded: Set<number>;
  suggested: Set<number>;
  oracleApplied: Set<number>;
}

export function renderGroups(meta: Meta, instance: InstanceRow | null, s: GroupPanelState): string {
  let offset = 0;
  const rows = meta.schema.groups.map((g, i) => {
    const start = offset;
    offset += g.dims;
    const shown = Boolean(s.mask[i]);
    const blocked = shown ? "" : ` disabled title="masked out — toggle the group on to edit it"`;
    const inputs = instance
      ? Array.from({ length: g.dims }, (_, d) => {
          const col = start + d;
          const value = s.edited[col] ?? 0;
          return `<input type="number" step="any" class="value-input" data-col="${col}"
                    value="${value}"${blocked}>`;
        }).join("")
      : "&mdash;";
    const badge = s.suggested.has(i) ? `<span class="badge" title="in the suggested set at the current k">&#9733;</span>` : "";
    const oracleMark = s.oracleApplied.has(i) ? " applied" : "";
    return `<tr>
      <td>${badge}</td>
      <td title="${esc(g.kind)}">${esc(g.name)}</td>
      <td class="values">${inputs}</td>
      <td><input type="checkbox" class="mask-toggle" data-group="${i}" ${shown ? "checked" : ""}></td>
      <td><input type="checkbox" class="lock-toggle" data-group="${i}" ${s.lockedIn.has(i) ? "checked" : ""}></td>
      <td><input type="checkbox" class="exclude-toggle" data-group="${i}" ${s.excluded.has(i) ? "checked" : ""}></td>
      <td><button class="oracle-btn${oracleMark}" data-group="${i}"${blocked}>oracle</button></td>
    </tr>`;
  });
  return `<table class="groups">
    <thead><tr><th></th><th>group</th><th>values</th><th>shown</th><th>lock</th><th>exclude</th><th></th></tr></thead>
    <tbody>${rows.join("")}</tbody>
  </table>`;
}

export function renderPrediction(
  pred: Prediction | null,
  classNames: string[],
  label: number | null,
): string {
  if (!pred) {
    return `<div class="pending">&hellip;</div>`;
  }
  const bars = pred.probs
    .map((p, i) => {
      const name = classNames[i] ?? String(i);
      const hit = label !== null && i === label ? " true-class" : "";
      return `<div class="bar-row${hit}">
        <span class="bar-label">${esc(name)}</span>
        <div class="bar-track"><div class="bar-fill" style="width:${(p * 100).toFixed(1)}%"></div></div>
        <span class="bar-value mono">${fmt(p)}</span>
      </div>`;
    })
    .join("");
  return `${bars}<div class="entropy">entropy ${fmt(pred.entropy_nats)} nats</div>`;
}

export function renderTrace(selection: Selection | null, groupNames: string[]): string {
  if (!selection) {
    return "";
  }
  const trace = selection.trace;
  const rows = trace.steps
    .map((s) => {
      const name = groupNames[s.group] ?? String(s.group);
      const verb = trace.method === "backward" ? "dropped" : "added";
      const entropy = s.entropy_nats === null ? "&mdash;" : fmt(s.entropy_nats);
      return `<tr><td>${s.size_after}</td><td>${verb} ${esc(name)}</td><td class="mono">${entropy}</td></tr>`;
    })
    .join("");
  return `<table class="trace">
    <thead><tr><th>size</th><th>step</th><th>entropy (nats)</th></tr></thead>
    <tbody>
      <tr><td>${trace.method === "backward" ? trace.n_groups - trace.excluded.length : 0}</td>
        <td>start</td><td class="mono">${fmt(trace.initial_entropy_nats)}</td></tr>
      ${rows}
    </tbody>
  </table>
  <div class="meta-line">suggested: ${selection.selected_names.map(esc).join(", ") || "(none)"}</div>`;
}

export function renderEvaluation(result: Evaluation | null): string {
  if (!result) {
    return "";
  }
  return `accuracy ${fmt(result.accuracy)} &middot; mean entropy ${fmt(result.mean_entropy_nats)} nats`;
}

export function renderError(message: string): string {
  return `<div class="error">${esc(message)}</div>`;
}
