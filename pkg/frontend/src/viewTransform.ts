// Local zoom/pan over the frozen frame while selecting. The server only ever
// sees frame-space pixel coordinates; this mapping is the client's business.

export interface ViewTransform {
  zoom: number;
  panX: number; // canvas position of the frame's (0, 0) corner
  panY: number;
}

export interface Point {
  x: number;
  y: number;
}

export const MIN_ZOOM = 0.25;
export const MAX_ZOOM = 8;

export function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
}

export const identityTransform = (): ViewTransform => ({ zoom: 1, panX: 0, panY: 0 });

export function frameToCanvas(pt: Point, t: ViewTransform): Point {
  return { x: pt.x * t.zoom + t.panX, y: pt.y * t.zoom + t.panY };
}

export function canvasToFrame(pt: Point, t: ViewTransform): Point {
  return { x: (pt.x - t.panX) / t.zoom, y: (pt.y - t.panY) / t.zoom };
}

/** Zoom by `factor` keeping the canvas point `pivot` over the same frame pixel. */
export function zoomAt(t: ViewTransform, factor: number, pivot: Point): ViewTransform {
  const zoom = clampZoom(t.zoom * factor);
  const scale = zoom / t.zoom;
  return {
    zoom,
    panX: pivot.x - (pivot.x - t.panX) * scale,
    panY: pivot.y - (pivot.y - t.panY) * scale,
  };
}

export function panBy(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { zoom: t.zoom, panX: t.panX + dx, panY: t.panY + dy };
}

/** Center the frame on the canvas at the largest integer-friendly zoom that fits. */
export function fitTransform(frameWidth: number, frameHeight: number,
                             canvasWidth: number, canvasHeight: number): ViewTransform {
  const zoom = clampZoom(Math.min(canvasWidth / frameWidth, canvasHeight / frameHeight));
  return {
    zoom,
    panX: (canvasWidth - frameWidth * zoom) / 2,
    panY: (canvasHeight - frameHeight * zoom) / 2,
  };
}
