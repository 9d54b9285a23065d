/** Polygon overlay drawing and the counting helpers behind the status
 * panel. Counting is pure; only the draw call touches a canvas. */

import type { FeatureCollection, GeoJsonFeature } from './api.js';
import { cssColor } from './params.js';

/** GeoJSON rings repeat the first vertex at the end; count distinct ones. */
export function ringVertexCount(ring: number[][]): number {
  if (ring.length < 2) return ring.length;
  const [fx, fy] = ring[0];
  const [lx, ly] = ring[ring.length - 1];
  const closed = fx === lx && fy === ly;
  return closed ? ring.length - 1 : ring.length;
}

export function featureVertexCount(feature: GeoJsonFeature): number {
  return feature.geometry.coordinates.reduce((acc, ring) => acc + ringVertexCount(ring), 0);
}

export function totalVertexCount(doc: FeatureCollection): number {
  return doc.features.reduce((acc, f) => acc + featureVertexCount(f), 0);
}

export function polygonCount(doc: FeatureCollection): number {
  return doc.features.length;
}

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function collectionBounds(doc: FeatureCollection): Bounds | null {
  let b: Bounds | null = null;
  for (const f of doc.features) {
    for (const ring of f.geometry.coordinates) {
      for (const [x, y] of ring) {
        if (b === null) b = { minX: x, minY: y, maxX: x, maxY: y };
        else {
          b.minX = Math.min(b.minX, x);
          b.minY = Math.min(b.minY, y);
          b.maxX = Math.max(b.maxX, x);
          b.maxY = Math.max(b.maxY, y);
        }
      }
    }
  }
  return b;
}

export interface OverlayOptions {
  /** Map feature coordinates into canvas pixels. */
  project: (x: number, y: number) => [number, number];
  lineWidth?: number;
  fillAlpha?: number;
}

export function drawFeatureCollection(
  ctx: CanvasRenderingContext2D,
  doc: FeatureCollection,
  opts: OverlayOptions,
): void {
  for (const feature of doc.features) {
    const color = (feature.properties['color'] as [number, number, number]) ?? [255, 255, 255];
    ctx.strokeStyle = cssColor(color);
    ctx.fillStyle = cssColor(color);
    ctx.lineWidth = opts.lineWidth ?? 1.25;
    ctx.beginPath();
    for (const ring of feature.geometry.coordinates) {
      ring.forEach(([x, y], i) => {
        const [cx, cy] = opts.project(x, y);
        if (i === 0) ctx.moveTo(cx, cy);
        else ctx.lineTo(cx, cy);
      });
      ctx.closePath();
    }
    if (opts.fillAlpha && opts.fillAlpha > 0) {
      ctx.globalAlpha = opts.fillAlpha;
      ctx.fill('evenodd');
      ctx.globalAlpha = 1;
    }
    ctx.stroke();
  }
}

/** Fit feature bounds into a canvas, preserving aspect, y flipped so +y
 * (world north) points up. */
export function fitProjection(
  bounds: Bounds,
  width: number,
  height: number,
  pad = 12,
): (x: number, y: number) => [number, number] {
  const spanX = bounds.maxX - bounds.minX || 1;
  const spanY = bounds.maxY - bounds.minY || 1;
  const s = Math.min((width - 2 * pad) / spanX, (height - 2 * pad) / spanY);
  return (x, y) => [pad + (x - bounds.minX) * s, height - pad - (y - bounds.minY) * s];
}
