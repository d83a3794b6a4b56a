/**
 * Guard against out-of-order async responses.
 *
 * Every request the UI fires gets a sequence number from `issue`. When the
 * response lands, `apply` only accepts it if no newer request was issued in
 * the meantime; a stale response is dropped on the floor. Issuing also clears
 * whatever is currently shown, so the display never pairs an old result with
 * a new input.
 */
export interface Shown<T> {
  key: string;
  seq: number;
  value: T;
}

export class LatestWins<T> {
  private seq = 0;
  private key: string | null = null;
  private shown: Shown<T> | null = null;

  /** Record that a request described by `key` is now in flight. */
  issue(key: string): number {
    this.seq += 1;
    this.key = key;
    this.shown = null;
    return this.seq;
  }

  /** Accept the response for `seq` only if it is still the latest request. */
  apply(seq: number, value: T): boolean {
    if (seq !== this.seq || this.key === null) {
      return false;
    }
    this.shown = { key: this.key, seq, value };
    return true;
  }

  get latestKey(): string | null {
    return this.key;
  }

  get current(): Shown<T> | null {
    return this.shown;
  }
}
