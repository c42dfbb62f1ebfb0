import * as tf from "@tensorflow/tfjs";
import { HistoryRow, PredictionRow } from "./csv";
import { CLASSES, LoadedSplit } from "./data";
import { BackboneName, BuiltModel, buildModel, weightedLayers } from "./models";
import { DEFAULT_PLATEAU, PlateauOptions, ReduceLROnPlateau } from "./schedule";

export interface TrainerConfig {
  backbone: BackboneName;
  imageSize: number;
  batchSize: number;
  /** Phase-1 epochs: head only, backbone frozen. */
  epochs: number;
  /** Phase-2 epochs: last `unfreezeLastN` backbone layers unfrozen. */
  fineTuneEpochs: number;
  phase1Lr: number;
  phase2Lr: number;
  unfreezeLastN: number;
  seed: number;
  classWeighting: boolean;
  plateau: PlateauOptions;
}

export const CONFIG_DEFAULTS = {
  imageSize: 224,
  batchSize: 8,
  epochs: 10,
  fineTuneEpochs: 10,
  phase1Lr: 1e-4,
  phase2Lr: 1e-5,
  unfreezeLastN: 20,
  classWeighting: false,
  plateau: DEFAULT_PLATEAU,
} as const;

export interface TrainOutcome {
  built: BuiltModel;
  history: HistoryRow[];
  predictions: PredictionRow[];
  /** Weight-carrying layers trainable during phase 2 (head + unfrozen backbone). */
  trainableWeightedInPhase2: number;
}

function validateConfig(config: TrainerConfig): void {
  if (!Number.isInteger(config.epochs) || config.epochs < 1) {
    throw new Error(`epochs must be a positive integer, got ${config.epochs}`);
  }
  if (!Number.isInteger(config.fineTuneEpochs) || config.fineTuneEpochs < 0) {
    throw new Error(`fine-tune epochs must be a non-negative integer, got ${config.fineTuneEpochs}`);
  }
  if (!Number.isInteger(config.unfreezeLastN) || config.unfreezeLastN < 1) {
    throw new Error(`unfreeze-last must be a positive integer, got ${config.unfreezeLastN}`);
  }
  if (!(config.phase1Lr > 0) || !(config.phase2Lr > 0)) {
    throw new Error("learning rates must be positive");
  }
  if (!Number.isInteger(config.batchSize) || config.batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${config.batchSize}`);
  }
}

function snapshotWeights(layers: tf.layers.Layer[]): Float32Array[] {
  const out: Float32Array[] = [];
  // getWeights() hands back the layer variables' own tensors, so read
  // without disposing.
  for (const layer of layers) {
    for (const w of layer.getWeights()) {
      out.push(new Float32Array(w.dataSync()));
    }
  }
  return out;
}

function snapshotsIdentical(a: Float32Array[], b: Float32Array[]): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i].length !== b[i].length) return false;
    for (let j = 0; j < a[i].length; j++) {
      if (!Object.is(a[i][j], b[i][j])) return false;
    }
  }
  return true;
}

function compile(model: tf.LayersModel, lr: number): void {
  // Recompiling on every rate change resets Adam's moment estimates; the
  // alternative (mutating the optimizer in place) isn't part of the public API.
  model.compile({
    optimizer: tf.train.adam(lr),
    loss: "categoricalCrossentropy",
    metrics: ["accuracy"],
  });
}

function lastValue(history: tf.History, keys: string[]): number {
  for (const key of keys) {
    const series = history.history[key];
    if (series && series.length > 0) return series[series.length - 1] as number;
  }
  throw new Error(`fit logs missing ${keys[0]}`);
}

interface PhaseArgs {
  model: tf.LayersModel;
  train: LoadedSplit;
  val: LoadedSplit;
  startEpoch: number;
  epochs: number;
  initialLr: number;
  batchSize: number;
  classWeight?: { [classIndex: number]: number };
  plateau: ReduceLROnPlateau;
  history: HistoryRow[];
}

async function runPhase(args: PhaseArgs): Promise<void> {
  let lr = args.initialLr;
  compile(args.model, lr);
  for (let e = 0; e < args.epochs; e++) {
    const fit = await args.model.fit(args.train.xs, args.train.ys, {
      epochs: 1,
      batchSize: args.batchSize,
      validationData: [args.val.xs, args.val.ys],
      shuffle: false,
      verbose: 0,
      classWeight: args.classWeight,
    });
    const valLoss = lastValue(fit, ["val_loss"]);
    args.history.push({
      epoch: args.startEpoch + e,
      trainAccuracy: lastValue(fit, ["acc", "accuracy"]),
      trainLoss: lastValue(fit, ["loss"]),
      valAccuracy: lastValue(fit, ["val_acc", "val_accuracy"]),
      valLoss,
      learningRate: lr,
    });
    const next = args.plateau.update(valLoss, lr);
    if (next !== lr) {
      lr = next;
      compile(args.model, lr);
    }
  }
}

function classWeightFor(train: LoadedSplit): { [classIndex: number]: number } {
  const counts = [0, 0];
  for (const s of train.samples) counts[CLASSES.indexOf(s.label)]++;
  const n = train.samples.length;
  return { 0: n / (2 * Math.max(counts[0], 1)), 1: n / (2 * Math.max(counts[1], 1)) };
}

/**
 * Two-phase transfer-learning run. Phase 1 trains the head with every
 * backbone layer frozen; phase 2 unfreezes exactly the last
 * `unfreezeLastN` weight-carrying backbone layers and continues at the
 * lower rate. Layer counting ignores weightless bookkeeping layers
 * (pooling, add, concatenate), which is what "last N layers" means here —
 * conventions differ between runtimes, so it is pinned explicitly.
 *
 * Throws if the frozen backbone drifted during phase 1: that invariant is
 * what makes phase 1 "head training" rather than slow full fine-tuning.
 */
export async function trainModel(
  train: LoadedSplit,
  val: LoadedSplit,
  config: TrainerConfig
): Promise<TrainOutcome> {
  validateConfig(config);
  const built = buildModel(config.backbone, config.imageSize, config.seed);
  const { model, backboneLayers, headLayers } = built;

  const weightedBackbone = weightedLayers(backboneLayers);
  if (config.unfreezeLastN >= weightedBackbone.length) {
    throw new Error(
      `unfreeze-last ${config.unfreezeLastN} must leave part of the backbone frozen; ` +
        `${config.backbone} has ${weightedBackbone.length} weight-carrying layers`
    );
  }

  const classWeight = config.classWeighting ? classWeightFor(train) : undefined;
  const plateau = new ReduceLROnPlateau(config.plateau);
  const history: HistoryRow[] = [];

  // Phase 1: frozen backbone, head only.
  for (const layer of backboneLayers) layer.trainable = false;
  const before = snapshotWeights(weightedBackbone);
  await runPhase({
    model,
    train,
    val,
    startEpoch: 1,
    epochs: config.epochs,
    initialLr: config.phase1Lr,
    batchSize: config.batchSize,
    classWeight,
    plateau,
    history,
  });
  const after = snapshotWeights(weightedBackbone);
  if (!snapshotsIdentical(before, after)) {
    throw new Error(`${config.backbone}: frozen backbone weights changed during phase 1`);
  }

  // Phase 2: unfreeze exactly the last N weight-carrying backbone layers.
  for (const layer of weightedBackbone.slice(-config.unfreezeLastN)) {
    layer.trainable = true;
  }
  const trainableWeightedInPhase2 = weightedLayers([...backboneLayers, ...headLayers]).filter(
    (l) => l.trainable
  ).length;
  plateau.reset();
  if (config.fineTuneEpochs > 0) {
    await runPhase({
      model,
      train,
      val,
      startEpoch: config.epochs + 1,
      epochs: config.fineTuneEpochs,
      initialLr: config.phase2Lr,
      batchSize: config.batchSize,
      classWeight,
      plateau,
      history,
    });
  }

  // Validation predictions in the evaluation CSV contract.
  const probs = model.predict(val.xs) as tf.Tensor2D;
  const rows = (await probs.array()) as number[][];
  probs.dispose();
  const predictions: PredictionRow[] = val.samples.map((s, i) => ({
    id: s.id,
    trueLabel: s.label,
    probAbnormal: rows[i][1],
  }));

  return { built, history, predictions, trainableWeightedInPhase2 };
}
