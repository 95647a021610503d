// Trailing-edge rate limiter for anchor drags: at most maxPerSecond sends per
// second, and the latest suppressed payload is flushed when the window opens
// so the final pointer position is never lost.

export type Clock = () => number;
export type Scheduler = (fn: () => void, delayMs: number) => void;

export class RateLimiter<T> {
  private readonly minIntervalMs: number;
  private lastSent = -Infinity;
  private pending: T | null = null;
  private timerArmed = false;

  constructor(
    maxPerSecond: number,
    private readonly send: (payload: T) => void,
    private readonly now: Clock = () => performance.now(),
    private readonly schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
  ) {
    this.minIntervalMs = 1000 / maxPerSecond;
  }

  // rounding guard: a timer firing within a microsecond of its window counts
  private ready(t: number): boolean {
    return t - this.lastSent >= this.minIntervalMs - 1e-3;
  }

  submit(payload: T): void {
    const t = this.now();
    if (this.ready(t)) {
      this.lastSent = t;
      this.send(payload);
    } else {
      this.pending = payload;
      if (!this.timerArmed) {
        this.timerArmed = true;
        this.schedule(() => this.flush(), Math.max(this.lastSent + this.minIntervalMs - t, 1));
      }
    }
  }

  private flush(): void {
    this.timerArmed = false;
    if (this.pending === null) return;
    const t = this.now();
    if (this.ready(t)) {
      this.lastSent = t;
      const payload = this.pending;
      this.pending = null;
      this.send(payload);
    } else {
      this.timerArmed = true;
      this.schedule(() => this.flush(), Math.max(this.lastSent + this.minIntervalMs - t, 1));
    }
  }
}
