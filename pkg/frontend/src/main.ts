import { ApiClient, ApiError } from "./api.js";
import {
  evaluateBody,
  interveneBody,
  maskFromSelection,
  predictBody,
  setAtSize,
  suggestBody,
  toggledMask,
} from "./flows.js";
import { LatestWins } from "./state.js";
import type { InstanceRow, Meta, Prediction, SelectionTrace } from "./types.js";
import {
  el,
  renderError,
  renderEvaluation,
  renderGroups,
  renderMeta,
  renderPrediction,
  renderTrace,
} from "./view.js";

const api = new ApiClient();

let meta: Meta | null = null;
let instance: InstanceRow | null = null;
let edited: number[] = [];
let mask: number[] = [];
let trace: SelectionTrace | null = null;
const lockedIn = new Set<number>();
const excluded = new Set<number>();
const oracleApplied = new Set<number>();

// Two gated displays: the prediction for the instance's own values and the
// prediction for the edited values, shown side by side. Stale responses are
// dropped so each pane always matches the (values, mask) pair it is labeled
// with.
const beforePane = new LatestWins<Prediction>();
const afterPane = new LatestWins<Prediction>();

function status(message: string): void {
  el("status").innerHTML = message ? renderError(message) : "";
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}

function pairKey(values: number[]): string {
  return `${mask.join("")}|${values.join(",")}`;
}

function sliderK(): number {
  return Number((el("sel-k") as HTMLInputElement).value) || 1;
}

function suggestedSet(): Set<number> {
  if (!trace) {
    return new Set();
  }
  try {
    return new Set(setAtSize(trace, sliderK()));
  } catch {
    return new Set();
  }
}

function refreshGroups(): void {
  if (!meta) {
    return;
  }
  el("groups").innerHTML = renderGroups(meta, instance, {
    edited,
    mask,
    lockedIn,
    excluded,
    suggested: suggestedSet(),
    oracleApplied,
  });
  el("k-label").textContent = String(sliderK());
}

function showPane(pane: LatestWins<Prediction>, target: string): void {
  const shown = pane.current;
  el(target).innerHTML = renderPrediction(
    shown ? shown.value : null,
    meta?.class_names ?? [],
    instance ? instance.label : null,
  );
}

async function requestPane(pane: LatestWins<Prediction>, target: string, values: number[]): Promise<void> {
  if (!instance) {
    return;
  }
  const seq = pane.issue(pairKey(values));
  showPane(pane, target);
  try {
    const pred = await api.predict(predictBody(values, mask));
    if (pane.apply(seq, pred)) {
      showPane(pane, target);
    }
  } catch (err) {
    status(describe(err));
  }
}

function requestBoth(): void {
  if (!instance) {
    return;
  }
  void requestPane(beforePane, "prediction-before", instance.concepts);
  void requestPane(afterPane, "prediction-after", edited);
}

async function loadInstance(index: number): Promise<void> {
  status("");
  try {
    instance = await api.instance(index);
  } catch (err) {
    status(describe(err));
    return;
  }
  edited = instance.concepts.slice();
  oracleApplied.clear();
  (el("instance-index") as HTMLInputElement).value = String(instance.index);
  el("instance-info").textContent =
    `label ${instance.label} (${meta?.class_names[instance.label] ?? "?"}) · ${instance.split} split`;
  refreshGroups();
  requestBoth();
}

async function suggest(): Promise<void> {
  if (!meta) {
    return;
  }
  status("");
  const method = (el("sel-method") as HTMLSelectElement).value === "forward" ? "forward" : "backward";
  const level = (el("sel-level") as HTMLSelectElement).value === "instance" ? "instance" : "dataset";
  const seed = Number((el("sel-seed") as HTMLInputElement).value) || 0;
  try {
    const selection = await api.select(
      suggestBody(method, sliderK(), seed, {
        level,
        instance: instance?.index,
        lockedIn: [...lockedIn],
        excluded: [...excluded],
      }),
    );
    trace = selection.trace;
    el("trace").innerHTML = renderTrace(selection, meta.schema.groups.map((g) => g.name));
    mask = maskFromSelection(meta.schema.groups.length, selection.selected);
    refreshGroups();
    requestBoth();
  } catch (err) {
    status(describe(err));
  }
}

async function applyOracle(group: number): Promise<void> {
  if (!instance) {
    return;
  }
  status("");
  const oracle = (el("sel-oracle") as HTMLSelectElement).value === "soft" ? "soft" : "class_level";
  oracleApplied.add(group);
  const fixed = [...oracleApplied].filter((g) => mask[g]);
  try {
    const result = await api.intervene(interveneBody(instance.index, mask, fixed, oracle));
    edited = result.intervened_concepts.slice();
    refreshGroups();
    // The intervention response is itself the prediction for the edited row;
    // route it through the gate so the pane stays tied to what is displayed.
    const seq = afterPane.issue(pairKey(edited));
    afterPane.apply(seq, { probs: result.probs, entropy_nats: result.entropy_nats });
    showPane(afterPane, "prediction-after");
  } catch (err) {
    oracleApplied.delete(group);
    status(describe(err));
  }
}

function revertEdits(): void {
  if (!instance) {
    return;
  }
  edited = instance.concepts.slice();
  oracleApplied.clear();
  refreshGroups();
  void requestPane(afterPane, "prediction-after", edited);
}

async function evaluateMask(): Promise<void> {
  status("");
  const value = (el("sel-split") as HTMLSelectElement).value;
  const split = value === "train" || value === "val" ? value : "test";
  try {
    const result = await api.evaluate(evaluateBody(mask, split));
    el("evaluation").innerHTML = renderEvaluation(result);
  } catch (err) {
    status(describe(err));
  }
}

function currentIndex(): number {
  return Number((el("instance-index") as HTMLInputElement).value) || 0;
}

function onGroupsChange(event: Event): void {
  const target = event.target as HTMLInputElement;
  const group = Number(target.dataset["group"] ?? NaN);
  if (target.classList.contains("value-input")) {
    const col = Number(target.dataset["col"] ?? NaN);
    if (Number.isInteger(col)) {
      edited[col] = Number(target.value) || 0;
      oracleApplied.clear();
      void requestPane(afterPane, "prediction-after", edited);
    }
    return;
  }
  if (!Number.isInteger(group)) {
    return;
  }
  if (target.classList.contains("mask-toggle")) {
    mask = toggledMask(mask, group);
    refreshGroups();
    requestBoth();
  } else if (target.classList.contains("lock-toggle")) {
    if (target.checked) {
      lockedIn.add(group);
    } else {
      lockedIn.delete(group);
    }
  } else if (target.classList.contains("exclude-toggle")) {
    if (target.checked) {
      excluded.add(group);
    } else {
      excluded.delete(group);
    }
  }
}

function wire(): void {
  el("btn-load").addEventListener("click", () => void loadInstance(currentIndex()));
  el("btn-prev").addEventListener("click", () => void loadInstance(Math.max(0, currentIndex() - 1)));
  el("btn-next").addEventListener("click", () => void loadInstance(currentIndex() + 1));
  el("btn-suggest").addEventListener("click", () => void suggest());
  el("btn-revert").addEventListener("click", () => revertEdits());
  el("btn-evaluate").addEventListener("click", () => void evaluateMask());
  el("sel-k").addEventListener("input", () => refreshGroups());
  el("groups").addEventListener("change", onGroupsChange);
  el("groups").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("oracle-btn")) {
      const group = Number((target as HTMLButtonElement).dataset["group"] ?? NaN);
      if (Number.isInteger(group)) {
        void applyOracle(group);
      }
    }
  });
}

async function init(): Promise<void> {
  wire();
  try {
    meta = await api.meta();
  } catch (err) {
    status(`service unreachable — ${describe(err)}`);
    (el("controls") as HTMLFieldSetElement).disabled = true;
    return;
  }
  el("meta").innerHTML = renderMeta(meta);
  const n = meta.schema.groups.length;
  mask = new Array<number>(n).fill(1);
  const slider = el("sel-k") as HTMLInputElement;
  slider.max = String(n);
  slider.value = String(n);
  await loadInstance(0);
}

void init();
