import * as fs from "fs";
import * as path from "path";

/** Column order is a contract with the evaluation side; do not reorder. */
export const HISTORY_HEADER = [
  "epoch",
  "train_accuracy",
  "train_loss",
  "val_accuracy",
  "val_loss",
  "learning_rate",
] as const;

export const PREDICTIONS_HEADER = ["id", "true_label", "prob_abnormal"] as const;

export interface HistoryRow {
  epoch: number;
  trainAccuracy: number;
  trainLoss: number;
  valAccuracy: number;
  valLoss: number;
  learningRate: number;
}

export interface PredictionRow {
  id: string;
  trueLabel: "Normal" | "Abnormal";
  probAbnormal: number;
}

/** Plain decimal text; JS default stringification never emits exponents
 *  for values in [1e-6, 1e21), and probabilities/losses live well inside. */
function num(v: number): string {
  if (!Number.isFinite(v)) throw new Error(`refusing to write non-finite value: ${v}`);
  return String(v);
}

function csvField(v: string): string {
  if (/[",\n\r]/.test(v)) return `"${v.replace(/"/g, '""')}"`;
  return v;
}

function writeFile(file: string, lines: string[]): void {
  fs.mkdirSync(path.dirname(path.resolve(file)), { recursive: true });
  fs.writeFileSync(file, lines.join("\n") + "\n");
}

export function writeHistoryCsv(file: string, rows: HistoryRow[]): void {
  const lines = [HISTORY_HEADER.join(",")];
  let prevEpoch = 0;
  for (const r of rows) {
    if (r.epoch !== prevEpoch + 1) {
      throw new Error(`history epochs must increase from 1; got ${r.epoch} after ${prevEpoch}`);
    }
    prevEpoch = r.epoch;
    lines.push(
      [r.epoch, num(r.trainAccuracy), num(r.trainLoss), num(r.valAccuracy), num(r.valLoss), num(r.learningRate)].join(",")
    );
  }
  writeFile(file, lines);
}

export function writePredictionsCsv(file: string, rows: PredictionRow[]): void {
  const lines = [PREDICTIONS_HEADER.join(",")];
  for (const r of rows) {
    const p = r.probAbnormal;
    if (!(p >= 0 && p <= 1)) throw new Error(`prob_abnormal out of range for ${r.id}: ${p}`);
    lines.push([csvField(r.id), r.trueLabel, num(p)].join(","));
  }
  writeFile(file, lines);
}
