import { ApiClient, ApiError } from "./api";
import type { ConfigDoc, FieldError } from "./types";

// Static schema checks mirroring the server's document validation, so a
// broken draft is anchored to its field before any request goes out. All
// scoring stays server-side; this file only checks shape and ranges.

const TOP_KEYS = new Set([
  "version", "gate", "tau", "validity_threshold", "episode", "criteria", "comment",
]);
const GATE_KEYS = new Set(["M", "N", "theta"]);
const EPISODE_KEYS = new Set(["min_criteria", "core"]);
const CRITERION_KEYS = new Set([
  "key", "label", "core", "aggregation", "tau", "comment", "components",
]);
const COMPONENT_KEYS = new Set(["name", "weight", "comment", "features"]);
const FEATURE_KEYS = new Set(["name", "weight", "membership", "polarity", "comment"]);
const MEMBERSHIP_KEYS = new Set(["lo", "mid", "hi", "inverted"]);

type Errors = FieldError[];

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isFiniteNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

function isInt(value: unknown): value is number {
  return typeof value === "number" && Number.isInteger(value);
}

function checkKeys(
  doc: Record<string, unknown>, allowed: Set<string>, path: string, errors: Errors,
): void {
  for (const key of Object.keys(doc)) {
    if (!allowed.has(key)) {
      errors.push({ path: `${path}.${key}`, message: "unknown key" });
    }
  }
}

function checkMembership(value: unknown, path: string, errors: Errors): void {
  if (!isRecord(value)) {
    errors.push({ path, message: "membership must be an object" });
    return;
  }
  checkKeys(value, MEMBERSHIP_KEYS, path, errors);
  let shapeOk = true;
  for (const edge of ["lo", "mid", "hi"] as const) {
    if (!(edge in value)) {
      errors.push({ path: `${path}.${edge}`, message: "required" });
      shapeOk = false;
    } else if (!isFiniteNumber(value[edge])) {
      errors.push({ path: `${path}.${edge}`, message: "must be a finite number" });
      shapeOk = false;
    }
  }
  if ("inverted" in value && typeof value.inverted !== "boolean") {
    errors.push({ path: `${path}.inverted`, message: "must be a boolean" });
  }
  if (!shapeOk) return;
  const { lo, mid, hi } = value as unknown as { lo: number; mid: number; hi: number };
  if (!(lo <= mid && mid <= hi)) {
    errors.push({ path, message: "edges must satisfy lo <= mid <= hi" });
  } else if (!(lo < hi)) {
    errors.push({ path, message: "ramp needs positive width (lo < hi)" });
  }
}

function checkFeature(value: unknown, path: string, errors: Errors): string | null {
  if (!isRecord(value)) {
    errors.push({ path, message: "feature must be an object" });
    return null;
  }
  checkKeys(value, FEATURE_KEYS, path, errors);
  let name: string | null = null;
  if (typeof value.name !== "string" || !value.name) {
    errors.push({ path: `${path}.name`, message: "must be a non-empty string" });
  } else {
    name = value.name;
  }
  if (!isFiniteNumber(value.weight) || value.weight <= 0) {
    errors.push({ path: `${path}.weight`, message: "must be a positive number" });
  }
  if ("polarity" in value && value.polarity !== 1 && value.polarity !== -1) {
    errors.push({ path: `${path}.polarity`, message: "must be 1 or -1" });
  }
  checkMembership(value.membership, `${path}.membership`, errors);
  return name;
}

function checkComponent(value: unknown, path: string, errors: Errors): void {
  if (!isRecord(value)) {
    errors.push({ path, message: "component must be an object" });
    return;
  }
  checkKeys(value, COMPONENT_KEYS, path, errors);
  if (typeof value.name !== "string" || !value.name) {
    errors.push({ path: `${path}.name`, message: "must be a non-empty string" });
  }
  if (!isFiniteNumber(value.weight) || value.weight <= 0) {
    errors.push({ path: `${path}.weight`, message: "must be a positive number" });
  }
  if (!Array.isArray(value.features) || !value.features.length) {
    errors.push({ path: `${path}.features`, message: "needs at least one feature" });
    return;
  }
  const seen = new Set<string>();
  value.features.forEach((feature, i) => {
    const name = checkFeature(feature, `${path}.features[${i}]`, errors);
    if (name) {
      if (seen.has(name)) {
        errors.push({ path: `${path}.features[${i}].name`, message: "duplicate feature name" });
      }
      seen.add(name);
    }
  });
}

function checkCriterion(value: unknown, path: string, seen: Set<string>, errors: Errors): void {
  if (!isRecord(value)) {
    errors.push({ path, message: "criterion must be an object" });
    return;
  }
  checkKeys(value, CRITERION_KEYS, path, errors);
  if (typeof value.key !== "string" || !value.key) {
    errors.push({ path: `${path}.key`, message: "must be a non-empty string" });
  } else if (seen.has(value.key)) {
    errors.push({ path: `${path}.key`, message: "duplicate criterion key" });
  } else {
    seen.add(value.key);
  }
  if (typeof value.label !== "string" || !value.label) {
    errors.push({ path: `${path}.label`, message: "must be a non-empty string" });
  }
  if (typeof value.core !== "boolean") {
    errors.push({ path: `${path}.core`, message: "must be a boolean" });
  }
  if (value.aggregation !== "direct" && value.aggregation !== "signed") {
    errors.push({ path: `${path}.aggregation`, message: "must be direct or signed" });
  }
  if ("tau" in value && (!isInt(value.tau) || value.tau < 1)) {
    errors.push({ path: `${path}.tau`, message: "must be an integer >= 1" });
  }
  if (!Array.isArray(value.components) || !value.components.length) {
    errors.push({ path: `${path}.components`, message: "needs at least one component" });
    return;
  }
  value.components.forEach((component, i) => {
    checkComponent(component, `${path}.components[${i}]`, errors);
  });
}

export function validateConfigDraft(doc: unknown): FieldError[] {
  const errors: Errors = [];
  if (!isRecord(doc)) {
    return [{ path: "$", message: "configuration must be an object" }];
  }
  checkKeys(doc, TOP_KEYS, "$", errors);

  if (!isInt(doc.version) || doc.version < 1) {
    errors.push({ path: "$.version", message: "must be an integer >= 1" });
  }
  if (!isInt(doc.tau) || doc.tau < 1) {
    errors.push({ path: "$.tau", message: "must be an integer >= 1" });
  }
  if (
    !isFiniteNumber(doc.validity_threshold) ||
    doc.validity_threshold < 0 ||
    doc.validity_threshold > 1
  ) {
    errors.push({ path: "$.validity_threshold", message: "must lie in [0, 1]" });
  }

  if (!isRecord(doc.gate)) {
    errors.push({ path: "$.gate", message: "must be an object" });
  } else {
    checkKeys(doc.gate, GATE_KEYS, "$.gate", errors);
    const { M, N, theta } = doc.gate;
    if (!isInt(M) || M < 1) {
      errors.push({ path: "$.gate.M", message: "must be an integer >= 1" });
    }
    if (!isInt(N) || N < 1) {
      errors.push({ path: "$.gate.N", message: "must be an integer >= 1" });
    }
    if (isInt(M) && isInt(N) && N > M) {
      errors.push({ path: "$.gate", message: "N cannot exceed M" });
    }
    if (typeof theta === "boolean" || !isFiniteNumber(theta) || theta < 0 || theta > 1) {
      errors.push({ path: "$.gate.theta", message: "must lie in [0, 1]" });
    }
  }

  if (!isRecord(doc.episode)) {
    errors.push({ path: "$.episode", message: "must be an object" });
  } else {
    checkKeys(doc.episode, EPISODE_KEYS, "$.episode", errors);
    if (!isInt(doc.episode.min_criteria) || doc.episode.min_criteria < 1) {
      errors.push({ path: "$.episode.min_criteria", message: "must be an integer >= 1" });
    }
    const core = doc.episode.core;
    if (!Array.isArray(core) || core.some((k) => typeof k !== "string" || !k)) {
      errors.push({ path: "$.episode.core", message: "must be a list of criterion keys" });
    }
  }

  if (!Array.isArray(doc.criteria) || !doc.criteria.length) {
    errors.push({ path: "$.criteria", message: "needs at least one criterion" });
  } else {
    const seen = new Set<string>();
    doc.criteria.forEach((criterion, i) => {
      checkCriterion(criterion, `$.criteria[${i}]`, seen, errors);
    });
  }
  return errors;
}

export type EditOutcome =
  | { status: "invalid"; errors: FieldError[] } // stopped client-side, nothing sent
  | { status: "conflict"; detail: string } // config hash moved underneath the editor
  | { status: "rejected"; errors: FieldError[] } // server-side validation refused it
  | { status: "applied"; configHash: string; warnings: string[]; recomputedFiles: number };

// Transactional what-if edit: validate the draft, compare-and-swap it in,
// recompute scores, and hand back the new config hash. Either everything
// lands (new hash visible to every refetch) or the server state is
// untouched.
export async function applyConfigEdit(
  api: ApiClient,
  draft: unknown,
  etag: string,
  dataset?: string,
): Promise<EditOutcome> {
  const errors = validateConfigDraft(draft);
  if (errors.length) {
    return { status: "invalid", errors };
  }
  let configHash: string;
  let warnings: string[];
  try {
    const put = await api.putConfig(draft as ConfigDoc, etag);
    configHash = put.config_hash;
    warnings = put.warnings;
  } catch (err) {
    if (err instanceof ApiError && err.status === 412) {
      return { status: "conflict", detail: err.detail };
    }
    if (err instanceof ApiError && err.status === 422) {
      return { status: "rejected", errors: err.errors };
    }
    throw err;
  }
  const recomputed = await api.recompute(dataset);
  return {
    status: "applied",
    configHash,
    warnings,
    recomputedFiles: recomputed.files,
  };
}
