/** Single-page labeling console. All pipeline state lives on the server;
 * a refresh rebuilds every view from GET endpoints alone. */

import { ApiError, HypermapClient } from './api.js';
import type { ClassEntry, CubeInfo, FeatureCollection, SpectrumPayload } from './api.js';
import { debounce, MutationGate } from './gate.js';
import {
  collectionBounds,
  drawFeatureCollection,
  fitProjection,
  polygonCount,
  totalVertexCount,
} from './overlay.js';
import {
  clampParams,
  cssColor,
  DEFAULT_PARAMS,
  resolveColor,
  UiParams,
  unknownPercent,
  VARIANCE_MAX,
  VARIANCE_MIN,
  VARIANCE_STEP,
  ViewLayer,
} from './params.js';
import { drawSpectrum } from './spectrum.js';

// Same-origin by default; ?api=http://host:port targets a remote service
// (the service enables CORS for exactly this).
const api = new HypermapClient(new URLSearchParams(location.search).get('api') ?? '');
const gate = new MutationGate();

interface UiState {
  cube: CubeInfo | null;
  classes: ClassEntry[];
  classesVersion: number;
  selected: { x: number; y: number; spectrum: SpectrumPayload } | null;
  params: UiParams;
  view: ViewLayer;
  lastTimings: Record<string, number>;
  lastRegions: FeatureCollection | null;
  classifyVersion: number;
}

const state: UiState = {
  cube: null,
  classes: [],
  classesVersion: 0,
  selected: null,
  params: { ...DEFAULT_PARAMS },
  view: 'rgb',
  lastTimings: {},
  lastRegions: null,
  classifyVersion: 0,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>('toast');
  box.textContent = message;
  box.classList.add('show');
  setTimeout(() => box.classList.remove('show'), 4000);
}

function setStatus(text: string): void {
  el<HTMLSpanElement>('status').textContent = text;
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

function showView(view: ViewLayer | 'ontology'): void {
  state.view = view as ViewLayer;
  for (const name of ['rgb', 'labelmap', 'regions', 'map', 'ontology']) {
    el(`view-${name}`).style.display = name === view ? 'block' : 'none';
    el(`tab-${name}`).classList.toggle('active', name === view);
  }
}

function refreshImages(): void {
  el<HTMLImageElement>('rgb-img').src = api.rgbUrl();
  if (state.classifyVersion > 0) {
    el<HTMLImageElement>('labelmap-img').src = api.labelMapUrl(state.classifyVersion);
  }
}

function renderLegend(): void {
  const box = el<HTMLDivElement>('legend');
  box.innerHTML = '';
  const entries: { name: string; color: [number, number, number]; id?: number }[] = [
    { name: 'Unknown', color: [0, 0, 0] },
    ...state.classes.map((c) => ({ name: c.name, color: c.color, id: c.id })),
  ];
  for (const entry of entries) {
    const row = document.createElement('div');
    row.className = 'legend-row';
    const chip = document.createElement('span');
    chip.className = 'chip';
    chip.style.background = cssColor(entry.color);
    row.appendChild(chip);
    const label = document.createElement('span');
    label.textContent = entry.name;
    row.appendChild(label);
    if (entry.id !== undefined) {
      const del = document.createElement('button');
      del.textContent = 'x';
      del.title = `remove ${entry.name}`;
      del.className = 'remove-btn mutating';
      del.onclick = () => removeClass(entry.id!);
      row.appendChild(del);
    }
    box.appendChild(row);
  }
  el<HTMLButtonElement>('classify-btn').disabled = state.classes.length === 0 || gate.isBusy;
}

function renderTimings(): void {
  const box = el<HTMLDivElement>('timings');
  const names = [
    'Classification Algorithm (SAM)',
    'Edge Detection',
    'Contour Extraction',
    'Size Filtering',
    'Polygon Approximation',
  ];
  box.innerHTML = names
    .map((n) => {
      const t = state.lastTimings[n];
      return `<div class="timing-row"><span>${n}</span><span>${
        t === undefined ? '-' : t.toFixed(4) + ' s'
      }</span></div>`;
    })
    .join('');
}

function renderRegionOverlay(): void {
  const canvas = el<HTMLCanvasElement>('regions-canvas');
  const ctx = canvas.getContext('2d');
  if (!ctx || !state.cube) return;
  ctx.fillStyle = '#0c0e12';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!state.lastRegions) return;
  const sx = canvas.width / state.cube.width;
  const sy = canvas.height / state.cube.height;
  drawFeatureCollection(ctx, state.lastRegions, {
    project: (x, y) => [x * sx, y * sy],
    fillAlpha: 0.25,
  });
  el<HTMLSpanElement>('region-stats').textContent =
    `${polygonCount(state.lastRegions)} polygons, ` +
    `${totalVertexCount(state.lastRegions)} vertices`;
}

async function renderMapViews(): Promise<void> {
  try {
    const features = await api.getMapFeatures();
    const canvas = el<HTMLCanvasElement>('map-canvas');
    const ctx = canvas.getContext('2d');
    if (ctx) {
      ctx.fillStyle = '#0c0e12';
      ctx.fillRect(0, 0, canvas.width, canvas.height);
      const bounds = collectionBounds(features);
      if (bounds) {
        drawFeatureCollection(ctx, features, {
          project: fitProjection(bounds, canvas.width, canvas.height),
          fillAlpha: 0.35,
        });
      }
    }
    el<HTMLSpanElement>('map-stats').textContent = `${features.features.length} features`;
    el<HTMLPreElement>('ontology-pre').textContent = await api.getOntologyDot();
  } catch (e) {
    toast(errorText(e));
  }
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

function errorText(e: unknown): string {
  if (e instanceof ApiError) return `API ${e.status}: ${e.message}`;
  return e instanceof Error ? e.message : String(e);
}

async function refreshClasses(): Promise<void> {
  const doc = await api.getClasses();
  state.classes = doc.classes;
  state.classesVersion = doc.version;
  renderLegend();
}

function canvasToPixel(ev: MouseEvent, canvas: HTMLCanvasElement): { x: number; y: number } | null {
  if (!state.cube) return null;
  const rect = canvas.getBoundingClientRect();
  const x = Math.floor(((ev.clientX - rect.left) / rect.width) * state.cube.width);
  const y = Math.floor(((ev.clientY - rect.top) / rect.height) * state.cube.height);
  if (x < 0 || y < 0 || x >= state.cube.width || y >= state.cube.height) return null;
  return { x, y };
}

async function inspectPixel(x: number, y: number): Promise<void> {
  try {
    const spectrum = await api.getSpectrum(x, y);
    state.selected = { x, y, spectrum };
    const canvas = el<HTMLCanvasElement>('spectrum-canvas');
    const ctx = canvas.getContext('2d');
    if (ctx) drawSpectrum(ctx, spectrum, canvas.width, canvas.height);
    el<HTMLSpanElement>('picked').textContent = `pixel (${x}, ${y})`;
    el<HTMLButtonElement>('add-class-btn').disabled = false;
  } catch (e) {
    toast(errorText(e));
  }
}

async function addClassFromSelection(): Promise<void> {
  if (!state.selected) return;
  const nameInput = el<HTMLInputElement>('class-name');
  const name = nameInput.value.trim();
  if (!name) {
    toast('enter a class name first');
    return;
  }
  const picked = el<HTMLInputElement>('class-color').value;
  const rgb: [number, number, number] = [
    parseInt(picked.slice(1, 3), 16),
    parseInt(picked.slice(3, 5), 16),
    parseInt(picked.slice(5, 7), 16),
  ];
  const color = resolveColor(rgb, state.classes);
  const { x, y } = state.selected;
  const result = await gate.run(async () => {
    await api.addClass({ name, color, x, y });
    await refreshClasses();
    return true;
  });
  if (result) {
    nameInput.value = '';
    setStatus(`class ${name} added from (${x}, ${y}); re-run classification`);
  }
}

async function removeClass(id: number): Promise<void> {
  const done = await gate.run(async () => {
    await api.deleteClass(id);
    await refreshClasses();
    return true;
  });
  if (done) setStatus(`class ${id} removed`);
}

async function runClassify(): Promise<void> {
  if (!state.cube || state.classes.length === 0) return;
  const params = clampParams(state.params);
  const result = await gate.run(() =>
    api.classify({ algorithm: params.algorithm, variance: params.variance }),
  );
  if (!result) return;
  state.classifyVersion += 1;
  state.lastTimings['Classification Algorithm (SAM)'] = result.time_s;
  const total = state.cube.width * state.cube.height;
  const pct = unknownPercent(result, total);
  el<HTMLSpanElement>('unknown-pct').textContent = `${pct.toFixed(2)}% unknown`;
  setStatus(
    `classified in ${result.time_s.toFixed(4)} s` + (result.cached ? ' (cached)' : ''),
  );
  refreshImages();
  renderTimings();
  showView('labelmap');
}

async function runSegment(): Promise<void> {
  const params = clampParams(state.params);
  const result = await gate.run(() =>
    api.segment({ min_area_m2: params.min_area_m2, thickness_px: params.thickness_px }),
  );
  if (!result) return;
  state.lastRegions = result.regions;
  Object.assign(state.lastTimings, result.times_s);
  renderTimings();
  renderRegionOverlay();
  showView('regions');
}

async function ingestFrame(): Promise<void> {
  const frameId = el<HTMLInputElement>('frame-id').value.trim() || `frame-${Date.now()}`;
  const result = await gate.run(() => api.ingestFrame(frameId));
  if (!result) return;
  setStatus(`ingested ${result.frame_id} (${result.frames.length} frames)`);
  await renderMapViews();
  showView('map');
}

// ---------------------------------------------------------------------------
// Wiring
// ---------------------------------------------------------------------------

const debouncedClassify = debounce(() => {
  void runClassify().catch((e) => toast(errorText(e)));
}, 350);

async function init(): Promise<void> {
  try {
    state.cube = await api.getCube();
  } catch (e) {
    setStatus('service unreachable');
    toast(errorText(e));
    return;
  }
  el<HTMLSpanElement>('cube-info').textContent =
    `${state.cube.width}x${state.cube.height}, ${state.cube.bands} bands, ` +
    `${state.cube.wavelengths_nm[0].toFixed(0)}-` +
    `${state.cube.wavelengths_nm[state.cube.wavelengths_nm.length - 1].toFixed(0)} nm, ` +
    `h=${state.cube.h_m} m, fov=${state.cube.fov_deg} deg`;
  refreshImages();
  await refreshClasses();
  renderTimings();

  const slider = el<HTMLInputElement>('variance');
  slider.min = String(VARIANCE_MIN);
  slider.max = String(VARIANCE_MAX);
  slider.step = String(VARIANCE_STEP);
  slider.value = String(state.params.variance);
  el<HTMLSpanElement>('variance-label').textContent = slider.value;
  slider.oninput = () => {
    state.params.variance = Number(slider.value);
    el<HTMLSpanElement>('variance-label').textContent = slider.value;
    if (state.classifyVersion > 0) debouncedClassify();
  };

  el<HTMLSelectElement>('algorithm').onchange = (ev) => {
    state.params.algorithm = (ev.target as HTMLSelectElement).value as 'sam' | 'euclidean';
  };
  el<HTMLInputElement>('min-area').onchange = (ev) => {
    state.params.min_area_m2 = Number((ev.target as HTMLInputElement).value) || 0;
  };
  el<HTMLInputElement>('thickness').onchange = (ev) => {
    state.params.thickness_px = Number((ev.target as HTMLInputElement).value) || 0;
  };

  for (const name of ['rgb', 'labelmap', 'regions', 'map', 'ontology'] as const) {
    el(`tab-${name}`).onclick = () => {
      showView(name);
      if (name === 'map' || name === 'ontology') void renderMapViews();
    };
  }

  const rgbImg = el<HTMLImageElement>('rgb-img');
  rgbImg.onclick = (ev) => {
    const p = canvasToPixel(ev, rgbImg as unknown as HTMLCanvasElement);
    if (p) void inspectPixel(p.x, p.y); // clicks outside bounds are ignored
  };
  const lmImg = el<HTMLImageElement>('labelmap-img');
  lmImg.onclick = (ev) => {
    const p = canvasToPixel(ev, lmImg as unknown as HTMLCanvasElement);
    if (p) void inspectPixel(p.x, p.y);
  };

  el<HTMLButtonElement>('add-class-btn').onclick = () =>
    void addClassFromSelection().catch((e) => toast(errorText(e)));
  el<HTMLButtonElement>('classify-btn').onclick = () =>
    void runClassify().catch((e) => toast(errorText(e)));
  el<HTMLButtonElement>('segment-btn').onclick = () =>
    void runSegment().catch((e) => toast(errorText(e)));
  el<HTMLButtonElement>('ingest-btn').onclick = () =>
    void ingestFrame().catch((e) => toast(errorText(e)));

  gate.onChange((busy) => {
    for (const node of Array.from(document.querySelectorAll<HTMLButtonElement>('.mutating'))) {
      node.disabled = busy;
    }
    el<HTMLButtonElement>('classify-btn').disabled = busy || state.classes.length === 0;
  });

  showView('rgb');
  setStatus('ready; click the image to inspect a pixel');
}

void init();
