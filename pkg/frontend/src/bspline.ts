// Periodic uniform B-spline evaluation, mirroring the server's contour model:
// radius(theta) = sum_k c[k mod N] * basis(theta*N/(2*pi*scale) - k), clamped
// to the 1 px radius floor. The client only ever *samples* contours; it never
// mutates coefficients.

export interface ContourDoc {
  version: number;
  n_knots: number;
  degree: number;
  scale: number;
  origin: [number, number];
  coefficients: number[];
}

export const RHO_MIN = 1.0;

export function basis(x: number, degree: number): number {
  const ax = Math.abs(x);
  switch (degree) {
    case 0:
      return ax < 0.5 ? 1.0 : 0.0;
    case 1:
      return Math.max(1.0 - ax, 0.0);
    case 2:
      if (ax < 0.5) return 0.75 - ax * ax;
      if (ax < 1.5) return 0.5 * (1.5 - ax) * (1.5 - ax);
      return 0.0;
    case 3:
      if (ax < 1.0) return 2.0 / 3.0 - ax * ax + 0.5 * ax * ax * ax;
      if (ax < 2.0) return ((2.0 - ax) ** 3) / 6.0;
      return 0.0;
    default:
      throw new Error(`unsupported B-spline degree ${degree}`);
  }
}

export function radiusAt(doc: ContourDoc, theta: number): number {
  const n = doc.n_knots;
  const twoPi = 2 * Math.PI;
  const wrapped = ((theta % twoPi) + twoPi) % twoPi;
  const t = (wrapped * n) / (twoPi * doc.scale);
  const d = doc.degree;
  const base = Math.floor(t - (d + 1) / 2) + 1;
  let rho = 0.0;
  for (let j = 0; j <= d; j++) {
    const k = base + j;
    const w = basis(t - k, d);
    if (w !== 0.0) rho += doc.coefficients[((k % n) + n) % n] * w;
  }
  return Math.max(rho, RHO_MIN);
}

export function sampleRadii(doc: ContourDoc, nSamples: number): Float64Array {
  const radii = new Float64Array(nSamples);
  for (let i = 0; i < nSamples; i++) {
    radii[i] = radiusAt(doc, (2 * Math.PI * i) / nSamples);
  }
  return radii;
}

/** Closed polyline of [x, y] pairs in image coordinates. */
export function samplePolyline(doc: ContourDoc, nSamples: number): Float64Array {
  const [ox, oy] = doc.origin;
  const pts = new Float64Array(nSamples * 2);
  for (let i = 0; i < nSamples; i++) {
    const theta = (2 * Math.PI * i) / nSamples;
    const r = radiusAt(doc, theta);
    pts[2 * i] = ox + r * Math.cos(theta);
    pts[2 * i + 1] = oy + r * Math.sin(theta);
  }
  return pts;
}
