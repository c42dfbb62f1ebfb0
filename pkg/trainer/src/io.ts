import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

function concatWeightData(data: ArrayBuffer | ArrayBuffer[]): Buffer {
  if (Array.isArray(data)) {
    return Buffer.concat(data.map((b) => Buffer.from(b)));
  }
  return Buffer.from(data);
}

/**
 * Save topology + weights under `dir` (model.json, weights.bin). The plain
 * tfjs build has no file:// handler, so write the artifacts ourselves in the
 * standard layers-model layout.
 */
export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      fs.writeFileSync(path.join(dir, "weights.bin"), concatWeightData(artifacts.weightData as ArrayBuffer | ArrayBuffer[]));
      const manifest = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: null,
        weightsManifest: [{ paths: ["weights.bin"], weights: artifacts.weightSpecs }],
      };
      fs.writeFileSync(path.join(dir, "model.json"), JSON.stringify(manifest));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON" as const,
        },
      };
    })
  );
}
