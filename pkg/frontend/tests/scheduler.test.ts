import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { LatestWinsScheduler } from "../src/scheduler.js";

describe("LatestWinsScheduler", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  function deferredRunner<T>() {
    const pending: Array<{ args: T; resolve: (v: string) => void;
                           reject: (e: Error) => void }> = [];
    const run = (args: T) =>
      new Promise<string>((resolve, reject) => {
        pending.push({ args, resolve, reject });
      });
    return { run, pending };
  }

  it("coalesces a rapid drag into very few requests", async () => {
    const { run, pending } = deferredRunner<number>();
    const results: Array<[number, string]> = [];
    const scheduler = new LatestWinsScheduler<number, string>({
      run,
      onResult: (args, result) => results.push([args, result]),
      debounceMs: 50,
    });
    for (let i = 0; i < 50; i++) scheduler.request(i);
    await vi.advanceTimersByTimeAsync(60);
    expect(pending.length).toBe(1);
    expect(pending[0].args).toBe(49); // latest slider value wins
    pending[0].resolve("mesh-49");
    await vi.advanceTimersByTimeAsync(1);
    expect(results).toEqual([[49, "mesh-49"]]);
    expect(scheduler.requestsIssued).toBe(1);
  });

  it("keeps at most one request in flight", async () => {
    const { run, pending } = deferredRunner<number>();
    const scheduler = new LatestWinsScheduler<number, string>({
      run,
      onResult: () => undefined,
      debounceMs: 10,
    });
    scheduler.request(1);
    await vi.advanceTimersByTimeAsync(20);
    expect(pending.length).toBe(1);
    scheduler.request(2);
    scheduler.request(3);
    await vi.advanceTimersByTimeAsync(100);
    expect(pending.length).toBe(1); // still waiting for the first response
    pending[0].resolve("one");
    await vi.advanceTimersByTimeAsync(20);
    expect(pending.length).toBe(2);
    expect(pending[1].args).toBe(3);
  });

  it("discards responses superseded by newer input", async () => {
    const { run, pending } = deferredRunner<number>();
    const results: number[] = [];
    const scheduler = new LatestWinsScheduler<number, string>({
      run,
      onResult: (args) => results.push(args),
      debounceMs: 10,
    });
    scheduler.request(1);
    await vi.advanceTimersByTimeAsync(20);
    scheduler.request(2); // newer input while request 1 is in flight
    pending[0].resolve("stale");
    await vi.advanceTimersByTimeAsync(20);
    pending[1].resolve("fresh");
    await vi.advanceTimersByTimeAsync(20);
    expect(results).toEqual([2]);
    expect(scheduler.responsesDiscarded).toBe(1);
  });

  it("final state matches the final slider value after interleaving", async () => {
    const { run, pending } = deferredRunner<number>();
    const results: number[] = [];
    const scheduler = new LatestWinsScheduler<number, string>({
      run,
      onResult: (args) => results.push(args),
      debounceMs: 5,
    });
    scheduler.request(10);
    await vi.advanceTimersByTimeAsync(10);
    for (let v = 11; v <= 30; v++) scheduler.request(v);
    pending[0].resolve("r0");
    await vi.advanceTimersByTimeAsync(10);
    pending[1].resolve("r1");
    await vi.advanceTimersByTimeAsync(10);
    expect(results[results.length - 1]).toBe(30);
    expect(scheduler.hasPendingWork).toBe(false);
  });

  it("reports failures and retries the same input later", async () => {
    const { run, pending } = deferredRunner<number>();
    const errors: unknown[] = [];
    const results: number[] = [];
    const scheduler = new LatestWinsScheduler<number, string>({
      run,
      onResult: (args) => results.push(args),
      onError: (e) => errors.push(e),
      debounceMs: 5,
      retryMs: 100,
    });
    scheduler.request(7);
    await vi.advanceTimersByTimeAsync(10);
    pending[0].reject(new Error("offline"));
    await vi.advanceTimersByTimeAsync(10);
    expect(errors.length).toBe(1);
    expect(pending.length).toBe(1); // retry not due yet
    await vi.advanceTimersByTimeAsync(100);
    expect(pending.length).toBe(2);
    expect(pending[1].args).toBe(7);
    pending[1].resolve("ok");
    await vi.advanceTimersByTimeAsync(1);
    expect(results).toEqual([7]);
  });

  it("newer input supersedes a pending retry", async () => {
    const { run, pending } = deferredRunner<number>();
    const results: number[] = [];
    const scheduler = new LatestWinsScheduler<number, string>({
      run,
      onResult: (args) => results.push(args),
      onError: () => undefined,
      debounceMs: 5,
      retryMs: 200,
    });
    scheduler.request(1);
    await vi.advanceTimersByTimeAsync(10);
    pending[0].reject(new Error("offline"));
    await vi.advanceTimersByTimeAsync(10);
    scheduler.request(2);
    await vi.advanceTimersByTimeAsync(10);
    expect(pending.length).toBe(2);
    expect(pending[1].args).toBe(2);
    pending[1].resolve("ok");
    await vi.advanceTimersByTimeAsync(1);
    expect(results).toEqual([2]);
  });
});
