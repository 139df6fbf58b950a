import type { SeriesDay } from "./types";

export interface GaugeInput {
  key: string;
  label: string;
  days: SeriesDay[];
}

export interface GaugeModel {
  key: string;
  label: string;
  mean: number | null; // mean likelihood over scored days, null when none
  scoredDays: number;
}

export function meanLikelihood(days: SeriesDay[]): number | null {
  const values = days
    .map((d) => d.likelihood)
    .filter((v): v is number => v !== null);
  if (!values.length) return null;
  return values.reduce((a, b) => a + b, 0) / values.length;
}

// Criteria ranked by mean likelihood, highest first; unscored ones sink
// to the bottom. Ties break on the key for a stable display order.
export function rankGauges(inputs: GaugeInput[]): GaugeModel[] {
  return inputs
    .map((input) => {
      const values = input.days.filter((d) => d.likelihood !== null);
      return {
        key: input.key,
        label: input.label,
        mean: meanLikelihood(input.days),
        scoredDays: values.length,
      };
    })
    .sort((a, b) => {
      if (a.mean === null && b.mean === null) return a.key.localeCompare(b.key);
      if (a.mean === null) return 1;
      if (b.mean === null) return -1;
      if (a.mean !== b.mean) return b.mean - a.mean;
      return a.key.localeCompare(b.key);
    });
}
