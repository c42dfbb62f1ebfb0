import * as path from "path";
import yargs, { Argv } from "yargs";
import { hideBin } from "yargs/helpers";
import { BACKBONE_NAMES, BackboneName, isBackboneName } from "./models";
import { TrainerConfig, CONFIG_DEFAULTS } from "./train";
import { runTraining } from "./runner";

interface CommonArgs {
  manifest: string;
  epochs: number;
  "fine-tune-epochs": number;
  "image-size": number;
  "batch-size": number;
  seed: number;
  out: string;
  "phase1-lr": number;
  "phase2-lr": number;
  "unfreeze-last": number;
  "plateau-factor": number;
  "plateau-patience": number;
  "plateau-min-lr": number;
  "class-weighting": boolean;
}

function configFrom(args: CommonArgs, backbone: BackboneName): TrainerConfig {
  return {
    backbone,
    imageSize: args["image-size"],
    batchSize: args["batch-size"],
    epochs: args.epochs,
    fineTuneEpochs: args["fine-tune-epochs"],
    phase1Lr: args["phase1-lr"],
    phase2Lr: args["phase2-lr"],
    unfreezeLastN: args["unfreeze-last"],
    seed: args.seed,
    classWeighting: args["class-weighting"],
    plateau: {
      factor: args["plateau-factor"],
      patience: args["plateau-patience"],
      minLr: args["plateau-min-lr"],
    },
  };
}

function parseModels(spec: string): BackboneName[] {
  const names = spec.split(",").map((s) => s.trim()).filter((s) => s.length > 0);
  if (names.length === 0) throw new Error("no models given");
  for (const n of names) {
    if (!isBackboneName(n)) {
      throw new Error(`unknown model: ${n} (choose from ${BACKBONE_NAMES.join(", ")})`);
    }
  }
  const seen = new Set<string>();
  for (const n of names) {
    if (seen.has(n)) throw new Error(`duplicate model name: ${n}`);
    seen.add(n);
  }
  return names as BackboneName[];
}

function addCommon(y: Argv): Argv {
  return y
    .option("manifest", { type: "string", demandOption: true, describe: "split manifest JSON" })
    .option("epochs", { type: "number", default: CONFIG_DEFAULTS.epochs, describe: "phase-1 epochs (frozen backbone)" })
    .option("fine-tune-epochs", { type: "number", default: CONFIG_DEFAULTS.fineTuneEpochs, describe: "phase-2 epochs (last layers unfrozen)" })
    .option("image-size", { type: "number", default: CONFIG_DEFAULTS.imageSize, describe: "square input edge in pixels" })
    .option("batch-size", { type: "number", default: CONFIG_DEFAULTS.batchSize })
    .option("seed", { type: "number", default: 0, describe: "weight-initialization seed" })
    .option("out", { type: "string", demandOption: true, describe: "output directory" })
    .option("phase1-lr", { type: "number", default: CONFIG_DEFAULTS.phase1Lr })
    .option("phase2-lr", { type: "number", default: CONFIG_DEFAULTS.phase2Lr })
    .option("unfreeze-last", { type: "number", default: CONFIG_DEFAULTS.unfreezeLastN })
    .option("plateau-factor", { type: "number", default: CONFIG_DEFAULTS.plateau.factor })
    .option("plateau-patience", { type: "number", default: CONFIG_DEFAULTS.plateau.patience })
    .option("plateau-min-lr", { type: "number", default: CONFIG_DEFAULTS.plateau.minLr })
    .option("class-weighting", { type: "boolean", default: CONFIG_DEFAULTS.classWeighting });
}

async function cmdTrain(args: CommonArgs & { model: string }): Promise<void> {
  if (!isBackboneName(args.model)) {
    throw new Error(`unknown model: ${args.model} (choose from ${BACKBONE_NAMES.join(", ")})`);
  }
  const summary = await runTraining(args.manifest, configFrom(args, args.model), args.out);
  console.log(
    `${summary.backbone}: ${summary.epochsRun} epochs, ` +
      `val accuracy ${summary.finalValAccuracy.toFixed(4)}, artifacts in ${summary.outDir}`
  );
}

async function cmdCompare(args: CommonArgs & { models: string }): Promise<void> {
  const names = parseModels(args.models);
  const failures: string[] = [];
  for (const name of names) {
    const outDir = path.join(args.out, name);
    try {
      const summary = await runTraining(args.manifest, configFrom(args, name), outDir);
      console.log(
        `${name}: ${summary.epochsRun} epochs, val accuracy ${summary.finalValAccuracy.toFixed(4)}, ` +
          `predictions for ${summary.valImages} images -> ${outDir}`
      );
    } catch (e) {
      // One broken run must not take down the rest of the comparison.
      console.error(`${name}: failed: ${(e as Error).message}`);
      failures.push(name);
    }
  }
  if (failures.length > 0) {
    throw new Error(`${failures.length} model(s) failed: ${failures.join(", ")}`);
  }
}

export async function main(argv: string[]): Promise<number> {
  let failed = false;
  const parser = yargs(argv)
    .scriptName("colpo-trainer")
    .strict()
    .exitProcess(false)
    .fail((msg: string, err: Error | undefined) => {
      console.error(err ? err.message : msg);
      failed = true;
    })
    .command(
      "train",
      "train one backbone from a split manifest",
      (y) => addCommon(y).option("model", {
        type: "string",
        demandOption: true,
        describe: `backbone (${BACKBONE_NAMES.join(", ")})`,
      }),
      async (args) => cmdTrain(args as unknown as CommonArgs & { model: string })
    )
    .command(
      "compare",
      "train several backbones and emit per-model artifacts",
      (y) => addCommon(y).option("models", {
        type: "string",
        demandOption: true,
        describe: "comma-separated backbone names",
      }),
      async (args) => cmdCompare(args as unknown as CommonArgs & { models: string })
    )
    .demandCommand(1, "specify a command: train or compare")
    .help();

  try {
    await parser.parseAsync();
  } catch (e) {
    // Handler rejections also reach .fail(), which already reported them.
    if (!failed) console.error((e as Error).message);
    failed = true;
  }
  return failed ? 1 : 0;
}

if (require.main === module) {
  main(hideBin(process.argv)).then(
    (code) => {
      process.exitCode = code;
    },
    (e) => {
      console.error((e as Error).message);
      process.exitCode = 1;
    }
  );
}
