import type { EvaluateBody, InterveneBody, PredictBody, SelectBody, SelectionTrace } from "./types.js";

// Request builders and trace arithmetic shared by the app and the
// fixture-parity test, so the bodies the test replays are exactly the ones
// the UI would send. No model math happens here — the service is the only
// source of numeric truth; these functions only assemble requests and read
// sets back out of a recorded trace.

export function predictBody(concepts: number[], mask: number[]): PredictBody {
  return { concepts, mask };
}

export function toggledMask(mask: number[], group: number): number[] {
  const next = mask.slice();
  next[group] = next[group] ? 0 : 1;
  return next;
}

export function maskFromSelection(nGroups: number, selected: number[]): number[] {
  const mask = new Array<number>(nGroups).fill(0);
  for (const g of selected) {
    mask[g] = 1;
  }
  return mask;
}

export interface SuggestOptions {
  level?: "dataset" | "instance";
  instance?: number;
  lockedIn?: number[];
  excluded?: number[];
}

export function suggestBody(
  method: "forward" | "backward",
  k: number | null,
  seed: number,
  options: SuggestOptions = {},
): SelectBody {
  const body: SelectBody = { method, k, seed, level: options.level ?? "dataset" };
  if (body.level === "instance" && options.instance !== undefined) {
    body.instance = options.instance;
  }
  if (options.lockedIn && options.lockedIn.length > 0) {
    body.locked_in = [...options.lockedIn].sort((a, b) => a - b);
  }
  if (options.excluded && options.excluded.length > 0) {
    body.excluded = [...options.excluded].sort((a, b) => a - b);
  }
  return body;
}

export function interveneBody(
  instance: number,
  mask: number[],
  fixGroups: number[],
  oracle: "class_level" | "soft",
): InterveneBody {
  return { instance, mask, fix_groups: [...fixGroups].sort((a, b) => a - b), oracle };
}

export function evaluateBody(mask: number[], split: "train" | "val" | "test"): EvaluateBody {
  return { mask, split };
}

/**
 * The selected group indices at size `k`, read off a recorded trace.
 * Forward/random traces grow by prefixes; backward traces start from the
 * full non-excluded set and shed the recorded removals down to size `k`.
 */
export function setAtSize(trace: SelectionTrace, k: number): number[] {
  if (trace.method === "backward") {
    const excluded = new Set(trace.excluded);
    const selected = new Set<number>();
    for (let g = 0; g < trace.n_groups; g++) {
      if (!excluded.has(g)) {
        selected.add(g);
      }
    }
    for (const step of trace.steps) {
      if (step.size_after < k) {
        break;
      }
      selected.delete(step.group);
    }
    return [...selected].sort((a, b) => a - b);
  }
  return trace.steps.slice(0, k).map((s) => s.group).sort((a, b) => a - b);
}

/** Every set size readable from a trace, ascending (mirrors the service). */
export function traceSizes(trace: SelectionTrace): number[] {
  const recorded = trace.steps.map((s) => s.size_after).sort((a, b) => a - b);
  if (trace.method === "backward") {
    return recorded.concat(trace.n_groups - trace.excluded.length);
  }
  return [0].concat(recorded);
}
