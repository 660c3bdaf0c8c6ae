/**
 * Page countdown driven by a monotonic clock, not wall time or the network:
 * remaining time is recomputed from the start instant on every tick, so
 * interval drift or a laggy event loop cannot stretch the 30 seconds.
 */

export type MonotonicClock = () => number; // milliseconds

export class Countdown {
  private startedAt: number | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private expired = false;

  constructor(
    private readonly seconds: number,
    private readonly onTick: (secondsLeft: number) => void,
    private readonly onExpire: () => void,
    private readonly now: MonotonicClock = () => performance.now(),
    private readonly tickMs: number = 200,
  ) {}

  start(): void {
    if (this.startedAt !== null) {
      return;
    }
    this.startedAt = this.now();
    this.onTick(this.secondsLeft());
    this.timer = setInterval(() => this.tick(), this.tickMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  secondsLeft(): number {
    if (this.startedAt === null) {
      return this.seconds;
    }
    const elapsed = (this.now() - this.startedAt) / 1000;
    return Math.max(0, Math.ceil(this.seconds - elapsed));
  }

  private tick(): void {
    const left = this.secondsLeft();
    this.onTick(left);
    if (left <= 0 && !this.expired) {
      this.expired = true;
      this.stop();
      this.onExpire();
    }
  }
}
