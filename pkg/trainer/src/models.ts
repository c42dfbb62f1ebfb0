import * as tf from "@tensorflow/tfjs";

export const BACKBONE_NAMES = ["MobileNetV2", "ResNet50", "EfficientNetB0", "DenseNet121"] as const;
export type BackboneName = (typeof BACKBONE_NAMES)[number];

export interface BuiltModel {
  model: tf.LayersModel;
  /** Backbone layers in flattened graph order (weightless bookkeeping included). */
  backboneLayers: tf.layers.Layer[];
  headLayers: tf.layers.Layer[];
}

/** Deterministic per-layer seed stream so a fixed config seed pins every weight. */
class SeedStream {
  private state: number;
  constructor(seed: number) {
    this.state = seed >>> 0;
  }
  next(): number {
    this.state = (this.state + 0x9e3779b9) >>> 0;
    return this.state === 0 ? 1 : this.state;
  }
}

interface Ctx {
  seeds: SeedStream;
  layers: tf.layers.Layer[];
}

function conv(
  ctx: Ctx,
  name: string,
  filters: number,
  kernel: number,
  stride: number,
  activation: "relu" | "linear"
) {
  const layer = tf.layers.conv2d({
    name,
    filters,
    kernelSize: kernel,
    strides: stride,
    padding: "same",
    activation,
    kernelInitializer: tf.initializers.glorotUniform({ seed: ctx.seeds.next() }),
    biasInitializer: "zeros",
  });
  ctx.layers.push(layer);
  return layer;
}

function depthwise(ctx: Ctx, name: string, stride: number) {
  const layer = tf.layers.depthwiseConv2d({
    name,
    kernelSize: 3,
    strides: stride,
    padding: "same",
    activation: "relu",
    depthwiseInitializer: tf.initializers.glorotUniform({ seed: ctx.seeds.next() }),
    biasInitializer: "zeros",
  });
  ctx.layers.push(layer);
  return layer;
}

function bookkeeping<T extends tf.layers.Layer>(ctx: Ctx, layer: T): T {
  ctx.layers.push(layer);
  return layer;
}

// ---------------------------------------------------------------------------
// Backbones. All are randomly initialized miniatures that keep the signature
// topology of their namesakes (inverted residuals, bottleneck blocks, MBConv
// with squeeze-excitation, densely concatenated blocks). Batch normalization
// is deliberately absent: its moving statistics update during training even
// on frozen layers, which would break the frozen-backbone guarantee.
// ---------------------------------------------------------------------------

function mobileNetV2(ctx: Ctx, x: tf.SymbolicTensor): tf.SymbolicTensor {
  x = conv(ctx, "bb_stem", 8, 3, 2, "relu").apply(x) as tf.SymbolicTensor;
  const widths = [8, 12, 12, 16, 16, 24, 24, 24];
  for (let i = 0; i < widths.length; i++) {
    const stride = i === 2 || i === 5 ? 2 : 1;
    const inWidth = x.shape[x.shape.length - 1] as number;
    const out = widths[i];
    let y = conv(ctx, `bb_b${i}_expand`, out * 3, 1, 1, "relu").apply(x) as tf.SymbolicTensor;
    y = depthwise(ctx, `bb_b${i}_dw`, stride).apply(y) as tf.SymbolicTensor;
    y = conv(ctx, `bb_b${i}_project`, out, 1, 1, "linear").apply(y) as tf.SymbolicTensor;
    if (stride === 1 && inWidth === out) {
      y = bookkeeping(ctx, tf.layers.add({ name: `bb_b${i}_add` })).apply([x, y]) as tf.SymbolicTensor;
    }
    x = y;
  }
  return x;
}

function resNet50(ctx: Ctx, x: tf.SymbolicTensor): tf.SymbolicTensor {
  x = conv(ctx, "bb_stem", 8, 3, 2, "relu").apply(x) as tf.SymbolicTensor;
  const stages = [8, 12, 16, 24];
  for (let s = 0; s < stages.length; s++) {
    const out = stages[s];
    for (let b = 0; b < 2; b++) {
      const stride = s > 0 && b === 0 ? 2 : 1;
      const inWidth = x.shape[x.shape.length - 1] as number;
      let y = conv(ctx, `bb_s${s}b${b}_reduce`, out / 2, 1, stride, "relu").apply(x) as tf.SymbolicTensor;
      y = conv(ctx, `bb_s${s}b${b}_conv`, out / 2, 3, 1, "relu").apply(y) as tf.SymbolicTensor;
      y = conv(ctx, `bb_s${s}b${b}_restore`, out, 1, 1, "linear").apply(y) as tf.SymbolicTensor;
      let shortcut = x;
      if (stride !== 1 || inWidth !== out) {
        shortcut = conv(ctx, `bb_s${s}b${b}_shortcut`, out, 1, stride, "linear").apply(x) as tf.SymbolicTensor;
      }
      x = bookkeeping(ctx, tf.layers.add({ name: `bb_s${s}b${b}_add` })).apply([shortcut, y]) as tf.SymbolicTensor;
    }
  }
  return x;
}

function efficientNetB0(ctx: Ctx, x: tf.SymbolicTensor): tf.SymbolicTensor {
  x = conv(ctx, "bb_stem", 8, 3, 2, "relu").apply(x) as tf.SymbolicTensor;
  const widths = [8, 12, 12, 16, 16, 24, 24];
  for (let i = 0; i < widths.length; i++) {
    const stride = i === 2 || i === 5 ? 2 : 1;
    const inWidth = x.shape[x.shape.length - 1] as number;
    const out = widths[i];
    let y = conv(ctx, `bb_mb${i}_expand`, out * 4, 1, 1, "relu").apply(x) as tf.SymbolicTensor;
    y = depthwise(ctx, `bb_mb${i}_dw`, stride).apply(y) as tf.SymbolicTensor;
    if (i % 2 === 1) {
      // squeeze-excitation: pool to 1x1, bottleneck, then rescale the block.
      const mid = y.shape[y.shape.length - 1] as number;
      let se = bookkeeping(
        ctx,
        tf.layers.globalAveragePooling2d({ name: `bb_mb${i}_se_pool` })
      ).apply(y) as tf.SymbolicTensor;
      se = bookkeeping(
        ctx,
        tf.layers.reshape({ name: `bb_mb${i}_se_reshape`, targetShape: [1, 1, mid] })
      ).apply(se) as tf.SymbolicTensor;
      se = conv(ctx, `bb_mb${i}_se_reduce`, Math.max(2, mid / 8), 1, 1, "relu").apply(se) as tf.SymbolicTensor;
      const expand = tf.layers.conv2d({
        name: `bb_mb${i}_se_expand`,
        filters: mid,
        kernelSize: 1,
        activation: "sigmoid",
        kernelInitializer: tf.initializers.glorotUniform({ seed: ctx.seeds.next() }),
        biasInitializer: "zeros",
      });
      ctx.layers.push(expand);
      se = expand.apply(se) as tf.SymbolicTensor;
      y = bookkeeping(ctx, tf.layers.multiply({ name: `bb_mb${i}_se_scale` })).apply([y, se]) as tf.SymbolicTensor;
    }
    y = conv(ctx, `bb_mb${i}_project`, out, 1, 1, "linear").apply(y) as tf.SymbolicTensor;
    if (stride === 1 && inWidth === out) {
      y = bookkeeping(ctx, tf.layers.add({ name: `bb_mb${i}_add` })).apply([x, y]) as tf.SymbolicTensor;
    }
    x = y;
  }
  return x;
}

function denseNet121(ctx: Ctx, x: tf.SymbolicTensor): tf.SymbolicTensor {
  x = conv(ctx, "bb_stem", 8, 3, 2, "relu").apply(x) as tf.SymbolicTensor;
  const growth = 6;
  for (let blockIdx = 0; blockIdx < 3; blockIdx++) {
    for (let l = 0; l < 4; l++) {
      let y = conv(ctx, `bb_d${blockIdx}l${l}_bottleneck`, growth * 2, 1, 1, "relu").apply(x) as tf.SymbolicTensor;
      y = conv(ctx, `bb_d${blockIdx}l${l}_grow`, growth, 3, 1, "relu").apply(y) as tf.SymbolicTensor;
      x = bookkeeping(
        ctx,
        tf.layers.concatenate({ name: `bb_d${blockIdx}l${l}_concat` })
      ).apply([x, y]) as tf.SymbolicTensor;
    }
    if (blockIdx < 2) {
      const width = x.shape[x.shape.length - 1] as number;
      x = conv(ctx, `bb_t${blockIdx}_compress`, Math.floor(width / 2), 1, 1, "relu").apply(x) as tf.SymbolicTensor;
      x = bookkeeping(
        ctx,
        tf.layers.averagePooling2d({ name: `bb_t${blockIdx}_pool`, poolSize: 2, strides: 2, padding: "same" })
      ).apply(x) as tf.SymbolicTensor;
    }
  }
  return x;
}

const BACKBONE_BUILDERS: Record<BackboneName, (ctx: Ctx, x: tf.SymbolicTensor) => tf.SymbolicTensor> = {
  MobileNetV2: mobileNetV2,
  ResNet50: resNet50,
  EfficientNetB0: efficientNetB0,
  DenseNet121: denseNet121,
};

export function isBackboneName(name: string): name is BackboneName {
  return (BACKBONE_NAMES as readonly string[]).includes(name);
}

/**
 * Build backbone + classification head (global average pooling, a 128-unit
 * rectified dense layer, 2-way softmax) as one flat graph. The same seed
 * always yields bit-identical initial weights.
 */
export function buildModel(name: BackboneName, imageSize: number, seed: number): BuiltModel {
  if (!Number.isInteger(imageSize) || imageSize < 16) {
    throw new Error(`image size must be an integer >= 16, got ${imageSize}`);
  }
  const ctx: Ctx = { seeds: new SeedStream(seed), layers: [] };
  const input = tf.input({ shape: [imageSize, imageSize, 3], name: "image" });
  const features = BACKBONE_BUILDERS[name](ctx, input);
  const backboneLayers = ctx.layers.slice();

  const headCtx: Ctx = { seeds: ctx.seeds, layers: [] };
  let x = bookkeeping(headCtx, tf.layers.globalAveragePooling2d({ name: "head_gap" })).apply(
    features
  ) as tf.SymbolicTensor;
  const hidden = tf.layers.dense({
    name: "head_dense",
    units: 128,
    activation: "relu",
    kernelInitializer: tf.initializers.glorotUniform({ seed: headCtx.seeds.next() }),
    biasInitializer: "zeros",
  });
  headCtx.layers.push(hidden);
  x = hidden.apply(x) as tf.SymbolicTensor;
  const out = tf.layers.dense({
    name: "head_softmax",
    units: 2,
    activation: "softmax",
    kernelInitializer: tf.initializers.glorotUniform({ seed: headCtx.seeds.next() }),
    biasInitializer: "zeros",
  });
  headCtx.layers.push(out);
  x = out.apply(x) as tf.SymbolicTensor;

  const model = tf.model({ inputs: input, outputs: x, name: `colpo_${name.toLowerCase()}` });
  return { model, backboneLayers, headLayers: headCtx.layers };
}

/** Layers that actually carry weights; pooling/add/concat bookkeeping doesn't. */
export function weightedLayers(layers: tf.layers.Layer[]): tf.layers.Layer[] {
  return layers.filter((l) => l.weights.length > 0);
}
