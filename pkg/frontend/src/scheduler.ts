/**
 * Latest-wins request scheduling for slider interaction.
 *
 * Guarantees: at most one request in flight; rapid argument changes are
 * debounced; a response belonging to anything but the newest arguments is
 * discarded; a failed request surfaces an error and is retried once the
 * retry delay elapses (newer input always supersedes the retry).
 */

export interface SchedulerOptions<A, R> {
  run: (args: A) => Promise<R>;
  onResult: (args: A, result: R) => void;
  onError?: (error: unknown) => void;
  debounceMs?: number;
  retryMs?: number;
}

export class LatestWinsScheduler<A, R> {
  private latest: A | undefined;
  private generation = 0;
  private inFlight = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stats = { issued: 0, discarded: 0, failed: 0 };

  constructor(private readonly options: SchedulerOptions<A, R>) {}

  /** Record the newest arguments and (re)schedule a request. */
  request(args: A): void {
    this.latest = args;
    this.generation += 1;
    if (!this.inFlight) {
      // resets any pending debounce or retry wait; newest input wins
      this.schedule(this.options.debounceMs ?? 0);
    }
    // an in-flight request picks the newest args up on completion
  }

  get requestsIssued(): number {
    return this.stats.issued;
  }

  get responsesDiscarded(): number {
    return this.stats.discarded;
  }

  get hasPendingWork(): boolean {
    return this.inFlight || this.timer !== null;
  }

  private schedule(delayMs: number): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, delayMs);
  }

  private async fire(): Promise<void> {
    if (this.inFlight || this.latest === undefined) return;
    const args = this.latest;
    const generation = this.generation;
    this.inFlight = true;
    this.stats.issued += 1;
    try {
      const result = await this.options.run(args);
      if (this.generation === generation) {
        this.options.onResult(args, result);
      } else {
        this.stats.discarded += 1;
      }
    } catch (error) {
      this.stats.failed += 1;
      this.options.onError?.(error);
      if (this.generation === generation) {
        // same arguments still wanted: retry after a pause
        this.inFlight = false;
        this.schedule(this.options.retryMs ?? 1000);
        return;
      }
    } finally {
      if (this.inFlight) {
        this.inFlight = false;
        if (this.generation !== generation) {
          // newer input arrived while this request ran
          this.schedule(this.options.debounceMs ?? 0);
        }
      }
    }
  }
}
