/** One mutation in flight at a time, cooperating with the server's 409
 * contract, plus a trailing debounce for slider-driven re-classification. */

export class MutationGate {
  private busy = false;
  private listeners: ((busy: boolean) => void)[] = [];

  get isBusy(): boolean {
    return this.busy;
  }

  onChange(fn: (busy: boolean) => void): void {
    this.listeners.push(fn);
  }

  /** Run a mutation if none is pending; returns null when skipped. */
  async run<T>(fn: () => Promise<T>): Promise<T | null> {
    if (this.busy) return null;
    this.busy = true;
    this.listeners.forEach((l) => l(true));
    try {
      return await fn();
    } finally {
      this.busy = false;
      this.listeners.forEach((l) => l(false));
    }
  }
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  delayMs: number,
  timers: { set: typeof setTimeout; clear: typeof clearTimeout } = {
    set: setTimeout,
    clear: clearTimeout,
  },
): (...args: A) => void {
  let handle: ReturnType<typeof setTimeout> | null = null;
  return (...args: A) => {
    if (handle !== null) timers.clear(handle);
    handle = timers.set(() => {
      handle = null;
      fn(...args);
    }, delayMs);
  };
}
