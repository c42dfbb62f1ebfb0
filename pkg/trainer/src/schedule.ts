export interface PlateauOptions {
  factor: number;
  patience: number;
  minLr: number;
}

export const DEFAULT_PLATEAU: PlateauOptions = { factor: 0.5, patience: 2, minLr: 1e-6 };

/**
 * Reduce-on-plateau over validation loss. `update` is called once per epoch
 * with that epoch's validation loss and returns the learning rate for the
 * next epoch. The rate never increases and never drops below minLr.
 */
export class ReduceLROnPlateau {
  private readonly factor: number;
  private readonly patience: number;
  private readonly minLr: number;
  private best = Infinity;
  private wait = 0;

  constructor(opts: PlateauOptions) {
    if (!(opts.factor > 0 && opts.factor < 1)) {
      throw new Error(`plateau factor must be in (0, 1), got ${opts.factor}`);
    }
    if (!Number.isInteger(opts.patience) || opts.patience < 1) {
      throw new Error(`plateau patience must be a positive integer, got ${opts.patience}`);
    }
    if (!(opts.minLr > 0)) {
      throw new Error(`plateau min_lr must be positive, got ${opts.minLr}`);
    }
    this.factor = opts.factor;
    this.patience = opts.patience;
    this.minLr = opts.minLr;
  }

  update(valLoss: number, currentLr: number): number {
    if (valLoss < this.best) {
      this.best = valLoss;
      this.wait = 0;
      return currentLr;
    }
    this.wait += 1;
    if (this.wait < this.patience) return currentLr;
    this.wait = 0;
    return Math.max(currentLr * this.factor, this.minLr);
  }

  /** A new phase starts fresh: its first epoch sets a new baseline. */
  reset(): void {
    this.best = Infinity;
    this.wait = 0;
  }
}
