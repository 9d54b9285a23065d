/** UI parameter state: clamped to the ranges the API validates, so a
 * widget can never send a request the server would reject. */

import type { ClassEntry, ClassifyResponse } from './api.js';

export type ViewLayer = 'rgb' | 'labelmap' | 'regions' | 'map';

export interface UiParams {
  algorithm: 'sam' | 'euclidean';
  variance: number; // degrees for SAM; slider range 0..45 in 0.5 steps
  min_area_m2: number;
  thickness_px: number;
}

export const VARIANCE_MIN = 0;
export const VARIANCE_MAX = 45;
export const VARIANCE_STEP = 0.5;

export const DEFAULT_PARAMS: UiParams = {
  algorithm: 'sam',
  variance: 10,
  min_area_m2: 0,
  thickness_px: 0,
};

export function clampParams(p: UiParams): UiParams {
  const variance = Math.min(
    VARIANCE_MAX,
    Math.max(VARIANCE_MIN, Math.round(p.variance / VARIANCE_STEP) * VARIANCE_STEP),
  );
  return {
    algorithm: p.algorithm === 'euclidean' ? 'euclidean' : 'sam',
    variance,
    min_area_m2: Math.max(0, p.min_area_m2),
    thickness_px: Math.max(0, p.thickness_px),
  };
}

/** Fraction of pixels left Unknown, for the status line. */
export function unknownPercent(res: ClassifyResponse, totalPixels: number): number {
  if (totalPixels <= 0) return 0;
  return (100 * res.unknown_count) / totalPixels;
}

const PALETTE: [number, number, number][] = [
  [31, 119, 180],
  [255, 127, 14],
  [44, 160, 44],
  [214, 39, 40],
  [148, 103, 189],
  [140, 86, 75],
  [227, 119, 194],
  [188, 189, 34],
  [23, 190, 207],
  [255, 187, 120],
];

function sameColor(a: [number, number, number], b: [number, number, number]): boolean {
  return a[0] === b[0] && a[1] === b[1] && a[2] === b[2];
}

/** Resolve a requested class color against the existing legend: duplicates
 * (including black, reserved for Unknown) fall back to the first free
 * palette entry so the legend stays readable. */
export function resolveColor(
  requested: [number, number, number],
  existing: ClassEntry[],
): [number, number, number] {
  const used: [number, number, number][] = [[0, 0, 0], ...existing.map((c) => c.color)];
  if (!used.some((u) => sameColor(u, requested))) return requested;
  for (const candidate of PALETTE) {
    if (!used.some((u) => sameColor(u, candidate))) return candidate;
  }
  // palette exhausted: derive a deterministic distinct color
  let n = existing.length + 1;
  let candidate: [number, number, number];
  do {
    candidate = [(37 * n) % 256, (97 * n) % 256, (173 * n) % 256];
    n += 1;
  } while (used.some((u) => sameColor(u, candidate)));
  return candidate;
}

export function cssColor(c: [number, number, number]): string {
  return `rgb(${c[0]}, ${c[1]}, ${c[2]})`;
}
