/** Typed client for the hypermap service API. Every view in the UI is
 * reconstructable from the GET endpoints alone; the client holds no state
 * beyond the base URL. */

export interface CubeInfo {
  width: number;
  height: number;
  bands: number;
  wavelengths_nm: number[];
  h_m: number;
  fov_deg: number;
  pose: { x: number; y: number; yaw: number };
}

export interface SpectrumPayload {
  wavelengths_nm: number[];
  values: number[];
}

export interface ClassEntry {
  id: number;
  name: string;
  color: [number, number, number];
  taxonomy: string[];
}

export interface ClassifyResponse {
  counts: Record<string, { name: string; pixels: number }>;
  unknown_count: number;
  time_s: number;
  cached: boolean;
}

export interface GeoJsonFeature {
  type: 'Feature';
  geometry: { type: 'Polygon'; coordinates: number[][][] };
  properties: Record<string, unknown>;
}

export interface FeatureCollection {
  type: 'FeatureCollection';
  features: GeoJsonFeature[];
}

export interface SegmentResponse {
  regions: FeatureCollection;
  times_s: Record<string, number>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.error === 'string') detail = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export class HypermapClient {
  constructor(private base: string = '') {}

  url(path: string): string {
    return this.base + path;
  }

  getCube(): Promise<CubeInfo> {
    return fetch(this.url('/api/cube')).then((r) => asJson<CubeInfo>(r));
  }

  rgbUrl(): string {
    return this.url('/api/cube/rgb.png');
  }

  labelMapUrl(version: number): string {
    // cache-bust by classification version so the <img> refreshes
    return this.url(`/api/labelmap.png?v=${version}`);
  }

  getSpectrum(x: number, y: number): Promise<SpectrumPayload> {
    return fetch(this.url(`/api/cube/spectrum?x=${x}&y=${y}`)).then((r) =>
      asJson<SpectrumPayload>(r),
    );
  }

  getClasses(): Promise<{ version: number; classes: ClassEntry[] }> {
    return fetch(this.url('/api/classes')).then((r) => asJson(r));
  }

  addClass(body: {
    name: string;
    color: [number, number, number];
    x?: number;
    y?: number;
    taxonomy?: string[];
  }): Promise<{ id: number }> {
    return fetch(this.url('/api/classes'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    }).then((r) => asJson(r));
  }

  deleteClass(id: number): Promise<{ removed: number }> {
    return fetch(this.url(`/api/classes/${id}`), { method: 'DELETE' }).then((r) => asJson(r));
  }

  classify(body: { algorithm: string; variance: number }): Promise<ClassifyResponse> {
    return fetch(this.url('/api/classify'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    }).then((r) => asJson<ClassifyResponse>(r));
  }

  segment(body: { min_area_m2: number; thickness_px: number }): Promise<SegmentResponse> {
    return fetch(this.url('/api/segment'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    }).then((r) => asJson<SegmentResponse>(r));
  }

  ingestFrame(frameId: string): Promise<{ frame_id: string; frames: string[] }> {
    return fetch(this.url('/api/map/frames'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ frame_id: frameId }),
    }).then((r) => asJson(r));
  }

  getMapFeatures(): Promise<FeatureCollection> {
    return fetch(this.url('/api/map/features')).then((r) => asJson<FeatureCollection>(r));
  }

  getOntologyDot(): Promise<string> {
    return fetch(this.url('/api/map/ontology.dot')).then((r) => {
      if (!r.ok) throw new ApiError(r.status, r.statusText);
      return r.text();
    });
  }
}
