/** Reflectance-vs-wavelength chart drawn on a plain canvas. The scale
 * helpers are pure so the chart geometry is unit-testable without a DOM. */

import type { SpectrumPayload } from './api.js';

export interface ChartScale {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

/** X spans exactly the cube's wavelength range; Y spans [0, 1] reflectance. */
export function chartScale(wavelengths: number[]): ChartScale {
  return {
    xMin: Math.min(...wavelengths),
    xMax: Math.max(...wavelengths),
    yMin: 0,
    yMax: 1,
  };
}

export function toCanvasX(wl: number, scale: ChartScale, width: number, pad = 36): number {
  const span = scale.xMax - scale.xMin || 1;
  return pad + ((wl - scale.xMin) / span) * (width - pad - 8);
}

export function toCanvasY(value: number, scale: ChartScale, height: number, pad = 18): number {
  const span = scale.yMax - scale.yMin || 1;
  return height - pad - ((value - scale.yMin) / span) * (height - 2 * pad);
}

export function drawSpectrum(
  ctx: CanvasRenderingContext2D,
  spectrum: SpectrumPayload,
  width: number,
  height: number,
): void {
  const scale = chartScale(spectrum.wavelengths_nm);
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = '#14171c';
  ctx.fillRect(0, 0, width, height);

  ctx.strokeStyle = '#3a4150';
  ctx.fillStyle = '#8b94a5';
  ctx.font = '10px sans-serif';
  ctx.beginPath();
  for (const frac of [0, 0.25, 0.5, 0.75, 1]) {
    const y = toCanvasY(frac, scale, height);
    ctx.moveTo(36, y);
    ctx.lineTo(width - 8, y);
    ctx.fillText(frac.toFixed(2), 4, y + 3);
  }
  ctx.stroke();
  ctx.fillText(`${scale.xMin.toFixed(0)} nm`, 36, height - 4);
  const maxLabel = `${scale.xMax.toFixed(0)} nm`;
  ctx.fillText(maxLabel, width - 8 - ctx.measureText(maxLabel).width, height - 4);

  ctx.strokeStyle = '#4fc3f7';
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  spectrum.wavelengths_nm.forEach((wl, i) => {
    const x = toCanvasX(wl, scale, width);
    const y = toCanvasY(spectrum.values[i], scale, height);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.lineWidth = 1;
}
