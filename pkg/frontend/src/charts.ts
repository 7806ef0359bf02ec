// Pure SVG bar charts. Every number shown comes verbatim from one API
// response field; the chart only scales rectangles, it never aggregates.

import type { BucketTree } from "./types.js";

const WIDTH = 640;
const HEIGHT = 180;
const BOTTOM = 30;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function barChart(buckets: BucketTree[], title: string): string {
  const max = Math.max(1, ...buckets.map((b) => b.count));
  const n = Math.max(1, buckets.length);
  const band = WIDTH / n;
  const barWidth = Math.max(4, Math.min(48, band * 0.7));
  const bars = buckets
    .map((bucket, i) => {
      const h = (bucket.count / max) * (HEIGHT - BOTTOM - 24);
      const x = i * band + (band - barWidth) / 2;
      const y = HEIGHT - BOTTOM - h;
      const label = esc(bucket.label);
      return (
        `<g class="bar" data-label="${label}" data-count="${bucket.count}"` +
        ` data-duration="${bucket.total_duration_s}">` +
        `<rect x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${barWidth.toFixed(1)}"` +
        ` height="${h.toFixed(1)}"><title>${label}: ${bucket.count}</title></rect>` +
        `<text class="count" x="${(i * band + band / 2).toFixed(1)}" y="${(y - 4).toFixed(1)}"` +
        ` text-anchor="middle">${bucket.count}</text>` +
        `<text class="label" x="${(i * band + band / 2).toFixed(1)}" y="${HEIGHT - 12}"` +
        ` text-anchor="middle">${label}</text>` +
        `</g>`
      );
    })
    .join("");
  const empty = buckets.every((b) => b.count === 0)
    ? `<text class="empty-note" x="${WIDTH / 2}" y="${HEIGHT / 2 - 20}" text-anchor="middle">no data in range</text>`
    : "";
  return (
    `<figure class="chart"><figcaption>${esc(title)}</figcaption>` +
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="${esc(title)}">` +
    bars +
    empty +
    `</svg></figure>`
  );
}
