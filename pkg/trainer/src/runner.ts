import * as path from "path";
import { writeHistoryCsv, writePredictionsCsv } from "./csv";
import { disposeSplit, loadSplit } from "./data";
import { readSplitManifest } from "./manifest";
import { BackboneName } from "./models";
import { saveModel } from "./io";
import { TrainerConfig, TrainOutcome, trainModel } from "./train";

export interface RunSummary {
  backbone: BackboneName;
  outDir: string;
  epochsRun: number;
  valImages: number;
  finalValAccuracy: number;
}

/**
 * Train one backbone from a split manifest and emit the full artifact set:
 * out_dir/predictions.csv, history.csv, model.json, weights.bin.
 */
export async function runTraining(
  manifestPath: string,
  config: TrainerConfig,
  outDir: string
): Promise<RunSummary> {
  const dataset = readSplitManifest(manifestPath);
  const train = loadSplit(dataset.train, config.imageSize);
  const val = loadSplit(dataset.val, config.imageSize);
  let outcome: TrainOutcome;
  try {
    outcome = await trainModel(train, val, config);
  } finally {
    disposeSplit(train);
    disposeSplit(val);
  }

  writePredictionsCsv(path.join(outDir, "predictions.csv"), outcome.predictions);
  writeHistoryCsv(path.join(outDir, "history.csv"), outcome.history);
  await saveModel(outcome.built.model, outDir);
  outcome.built.model.dispose();

  const last = outcome.history[outcome.history.length - 1];
  return {
    backbone: config.backbone,
    outDir,
    epochsRun: outcome.history.length,
    valImages: outcome.predictions.length,
    finalValAccuracy: last.valAccuracy,
  };
}
