// Command throttle: drags fire per pointer event but the service loop runs
// at 10 Hz, so outbound move commands are rate limited with a trailing
// send (the final position always goes out).

export class Throttle {
  private readonly intervalMs: number;
  private readonly send: (payload: string) => void;
  private lastSent = -Infinity;
  private trailing: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly clock: () => number;

  constructor(
    send: (payload: string) => void,
    intervalMs = 100,
    clock: () => number = () => Date.now(),
  ) {
    this.send = send;
    this.intervalMs = intervalMs;
    this.clock = clock;
  }

  offer(payload: string): void {
    const now = this.clock();
    if (now - this.lastSent >= this.intervalMs) {
      this.lastSent = now;
      this.send(payload);
      return;
    }
    this.trailing = payload;
    if (this.timer === null) {
      const wait = this.intervalMs - (now - this.lastSent);
      this.timer = setTimeout(() => this.flush(), wait);
    }
  }

  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.trailing !== null) {
      this.lastSent = this.clock();
      this.send(this.trailing);
      this.trailing = null;
    }
  }
}
