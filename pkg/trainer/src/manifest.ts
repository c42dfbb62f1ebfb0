import * as fs from "fs";
import * as path from "path";

export const MANIFEST_VERSION = 1;

export type Label = "Normal" | "Abnormal";
export type Split = "Train" | "Validation";

export interface Sample {
  id: string;
  /** Absolute path, resolved against the manifest's directory. */
  path: string;
  label: Label;
  split: Split;
}

export interface SplitDataset {
  train: Sample[];
  val: Sample[];
}

function fail(manifestPath: string, msg: string): never {
  throw new Error(`${manifestPath}: ${msg}`);
}

/**
 * Read a split manifest produced by `colpoprep split`. Record paths are
 * stored relative to the manifest file, so resolve them against its
 * directory. Every record must carry a split assignment.
 */
export function readSplitManifest(manifestPath: string): SplitDataset {
  if (!fs.existsSync(manifestPath)) {
    throw new Error(`manifest not found: ${manifestPath}`);
  }
  let doc: any;
  try {
    doc = JSON.parse(fs.readFileSync(manifestPath, "utf8"));
  } catch (e) {
    fail(manifestPath, `not valid JSON (${(e as Error).message})`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    fail(manifestPath, "manifest must be a JSON object");
  }
  if (doc.version !== MANIFEST_VERSION) {
    fail(manifestPath, `unsupported manifest version: ${doc.version}`);
  }
  if (!Array.isArray(doc.records)) {
    fail(manifestPath, "manifest has no records array");
  }

  const base = path.dirname(path.resolve(manifestPath));
  const train: Sample[] = [];
  const val: Sample[] = [];
  for (let i = 0; i < doc.records.length; i++) {
    const r = doc.records[i];
    for (const field of ["id", "path", "label", "split"]) {
      if (typeof r?.[field] !== "string") {
        fail(manifestPath, `records[${i}].${field}: missing or not a string`);
      }
    }
    if (r.label !== "Normal" && r.label !== "Abnormal") {
      fail(manifestPath, `records[${i}].label: expected Normal or Abnormal, got ${r.label}`);
    }
    if (r.split !== "Train" && r.split !== "Validation") {
      fail(manifestPath, `records[${i}].split: expected Train or Validation, got ${r.split}`);
    }
    const sample: Sample = {
      id: r.id,
      path: path.resolve(base, r.path),
      label: r.label,
      split: r.split,
    };
    (sample.split === "Train" ? train : val).push(sample);
  }
  if (train.length === 0) fail(manifestPath, "no Train records");
  if (val.length === 0) fail(manifestPath, "no Validation records");
  return { train, val };
}
