import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";
import { Sample } from "./manifest";
import { decodePng, toRgb } from "./png";

/** Class order is a contract: softmax column 1 is the Abnormal probability. */
export const CLASSES = ["Normal", "Abnormal"] as const;

export interface LoadedSplit {
  xs: tf.Tensor4D;
  ys: tf.Tensor2D;
  samples: Sample[];
}

function loadOne(sample: Sample, imageSize: number): tf.Tensor3D {
  let buf: Buffer;
  try {
    buf = fs.readFileSync(sample.path);
  } catch {
    throw new Error(`image not found: ${sample.path} (id ${sample.id})`);
  }
  const img = toRgb(decodePng(buf));
  return tf.tidy(() => {
    const pixels = tf.tensor3d(img.data, [img.height, img.width, 3], "int32");
    const resized = tf.image.resizeBilinear(pixels.toFloat(), [imageSize, imageSize]);
    return resized.div(255) as tf.Tensor3D;
  });
}

/** Decode every sample to a [0,1] float tensor batch plus one-hot labels. */
export function loadSplit(samples: Sample[], imageSize: number): LoadedSplit {
  const images = samples.map((s) => loadOne(s, imageSize));
  const xs = tf.stack(images) as tf.Tensor4D;
  images.forEach((t) => t.dispose());
  const labelIdx = samples.map((s) => CLASSES.indexOf(s.label));
  const ys = tf.oneHot(tf.tensor1d(labelIdx, "int32"), CLASSES.length) as tf.Tensor2D;
  return { xs, ys: ys.toFloat() as tf.Tensor2D, samples };
}

export function disposeSplit(split: LoadedSplit): void {
  split.xs.dispose();
  split.ys.dispose();
}
