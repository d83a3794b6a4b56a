import { describe, expect, it } from "vitest";
import { LatestWins } from "../src/state.js";

// The safety property behind rapid toggling: whatever arrival order the
// network produces, the gate never pairs a displayed prediction with a mask
// other than the one currently rendered.

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function responseFor(key: string): string {
  return `prediction(${key})`;
}

describe("LatestWins", () => {
  it("drops a response that arrives after a newer request was issued", () => {
    const gate = new LatestWins<string>();
    const first = gate.issue("mask:10");
    const second = gate.issue("mask:11");
    expect(gate.apply(first, responseFor("mask:10"))).toBe(false);
    expect(gate.current).toBeNull();
    expect(gate.apply(second, responseFor("mask:11"))).toBe(true);
    expect(gate.current?.key).toBe("mask:11");
    expect(gate.current?.value).toBe(responseFor("mask:11"));
  });

  it("clears the display the moment a new request is issued", () => {
    const gate = new LatestWins<string>();
    const seq = gate.issue("mask:01");
    gate.apply(seq, responseFor("mask:01"));
    expect(gate.current).not.toBeNull();
    gate.issue("mask:00");
    expect(gate.current).toBeNull();
  });

  it("ignores a response when nothing was ever issued", () => {
    const gate = new LatestWins<string>();
    expect(gate.apply(1, responseFor("mask:??"))).toBe(false);
    expect(gate.current).toBeNull();
  });

  it("never shows a prediction for anything but the latest mask, across random interleavings", () => {
    for (let seed = 1; seed <= 300; seed++) {
      const rand = mulberry32(seed);
      const gate = new LatestWins<string>();
      const inFlight: { seq: number; key: string }[] = [];
      let toggles = 0;

      const checkInvariant = () => {
        const shown = gate.current;
        if (shown !== null) {
          // displayed prediction belongs to the displayed mask…
          expect(shown.value).toBe(responseFor(shown.key));
          // …and that mask is the latest one the user set
          expect(shown.key).toBe(gate.latestKey);
        }
      };

      for (let op = 0; op < 60; op++) {
        if (inFlight.length === 0 || rand() < 0.5) {
          toggles += 1;
          const key = `mask:${toggles.toString(2)}`;
          const seq = gate.issue(key);
          inFlight.push({ seq, key });
          // issuing invalidates the display until a fresh response lands
          expect(gate.current).toBeNull();
        } else {
          const pick = Math.floor(rand() * inFlight.length);
          const [delivery] = inFlight.splice(pick, 1);
          const accepted = gate.apply(delivery!.seq, responseFor(delivery!.key));
          expect(accepted).toBe(delivery!.key === gate.latestKey && delivery!.seq === toggles);
        }
        checkInvariant();
      }

      // drain the rest in random order; the invariant must survive every step
      while (inFlight.length > 0) {
        const pick = Math.floor(rand() * inFlight.length);
        const [delivery] = inFlight.splice(pick, 1);
        gate.apply(delivery!.seq, responseFor(delivery!.key));
        checkInvariant();
      }
    }
  });
});
