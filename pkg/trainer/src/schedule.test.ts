import { describe, expect, it } from "vitest";
import { ReduceLROnPlateau } from "./schedule";

describe("ReduceLROnPlateau", () => {
  it("keeps the rate while the loss improves", () => {
    const sched = new ReduceLROnPlateau({ factor: 0.5, patience: 2, minLr: 1e-6 });
    let lr = 1e-3;
    for (const loss of [1.0, 0.9, 0.8, 0.7]) lr = sched.update(loss, lr);
    expect(lr).toBe(1e-3);
  });

  it("halves after `patience` epochs without improvement", () => {
    const sched = new ReduceLROnPlateau({ factor: 0.5, patience: 2, minLr: 1e-6 });
    let lr = 1e-3;
    lr = sched.update(1.0, lr); // baseline
    lr = sched.update(1.1, lr); // wait 1
    expect(lr).toBe(1e-3);
    lr = sched.update(1.2, lr); // wait 2 -> reduce
    expect(lr).toBe(5e-4);
    // counter restarts after a reduction
    lr = sched.update(1.3, lr);
    expect(lr).toBe(5e-4);
    lr = sched.update(1.4, lr);
    expect(lr).toBe(2.5e-4);
  });

  it("never drops below min_lr and never increases", () => {
    const sched = new ReduceLROnPlateau({ factor: 0.1, patience: 1, minLr: 1e-5 });
    let lr = 1e-4;
    const seen: number[] = [lr];
    lr = sched.update(1.0, lr);
    for (let i = 0; i < 5; i++) {
      lr = sched.update(2.0 + i, lr);
      seen.push(lr);
    }
    expect(lr).toBe(1e-5);
    for (let i = 1; i < seen.length; i++) expect(seen[i]).toBeLessThanOrEqual(seen[i - 1]);
  });

  it("reset() starts a fresh baseline for a new phase", () => {
    const sched = new ReduceLROnPlateau({ factor: 0.5, patience: 1, minLr: 1e-6 });
    let lr = 1e-3;
    lr = sched.update(0.1, lr); // very good baseline
    sched.reset();
    // After reset, a mediocre loss is the new baseline rather than a regression.
    lr = sched.update(5.0, lr);
    expect(lr).toBe(1e-3);
  });

  it("validates its options", () => {
    expect(() => new ReduceLROnPlateau({ factor: 1.5, patience: 2, minLr: 1e-6 })).toThrow(/factor/);
    expect(() => new ReduceLROnPlateau({ factor: 0.5, patience: 0, minLr: 1e-6 })).toThrow(/patience/);
    expect(() => new ReduceLROnPlateau({ factor: 0.5, patience: 2, minLr: 0 })).toThrow(/min_lr/);
  });
});
