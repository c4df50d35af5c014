import { Figure, Panel, Series } from "./figures.js";

/**
 * Deterministic SVG rendering: fixed geometry, fixed palette, fixed number
 * formatting, no timestamps or random ids — the same figure model always
 * produces the same bytes.
 */

const PANEL_WIDTH = 320;
const PANEL_HEIGHT = 260;
const MARGIN = { top: 32, right: 16, bottom: 44, left: 56 };
const PALETTE = ["#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
                 "#ff8ab7", "#a463f2", "#97bbf5"];

/** Shortest stable decimal form (6 significant digits). */
export function fmt(value: number): string {
  if (!Number.isFinite(value)) return String(value);
  if (value === 0) return "0";
  return String(Number(value.toPrecision(6)));
}

interface Scale {
  (value: number): number;
  ticks: number[];
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi > lo ? hi - lo : 1;
  const scale = ((value: number) =>
    outLo + ((value - lo) / span) * (outHi - outLo)) as Scale;
  const step = span / 4;
  scale.ticks = [0, 1, 2, 3, 4].map((i) => lo + i * step);
  return scale;
}

function log2Scale(values: number[], outLo: number, outHi: number): Scale {
  const distinct = [...new Set(values)].sort((a, b) => a - b);
  const lo = Math.log2(distinct[0]);
  const hi = Math.log2(distinct[distinct.length - 1]);
  const span = hi > lo ? hi - lo : 1;
  const scale = ((value: number) =>
    outLo + ((Math.log2(value) - lo) / span) * (outHi - outLo)) as Scale;
  scale.ticks = distinct;
  return scale;
}

function yDomain(panel: Panel): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const series of panel.series) {
    for (let i = 0; i < series.y.length; i++) {
      lo = Math.min(lo, series.y[i] - series.halfWidth[i]);
      hi = Math.max(hi, series.y[i] + series.halfWidth[i]);
    }
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}

function lineSeries(series: Series, color: string, sx: Scale, sy: Scale): string {
  const parts: string[] = [];
  if (series.x.length > 1) {
    const band = [
      ...series.x.map((x, i) => `${fmt(sx(x))},${fmt(sy(series.y[i] + series.halfWidth[i]))}`),
      ...[...series.x.keys()].reverse().map(
        (i) => `${fmt(sx(series.x[i]))},${fmt(sy(series.y[i] - series.halfWidth[i]))}`),
    ].join(" ");
    parts.push(`<polygon points="${band}" fill="${color}" fill-opacity="0.15"/>`);
  }
  const line = series.x
    .map((x, i) => `${fmt(sx(x))},${fmt(sy(series.y[i]))}`)
    .join(" ");
  parts.push(`<polyline points="${line}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
  for (let i = 0; i < series.x.length; i++) {
    const cx = fmt(sx(series.x[i]));
    parts.push(`<circle cx="${cx}" cy="${fmt(sy(series.y[i]))}" r="2.5" fill="${color}"/>`);
    if (series.x.length === 1 && series.halfWidth[i] > 0) {
      // lone point: the interval shows as a whisker instead of a band
      const top = fmt(sy(series.y[i] + series.halfWidth[i]));
      const bottom = fmt(sy(series.y[i] - series.halfWidth[i]));
      parts.push(`<line x1="${cx}" y1="${top}" x2="${cx}" y2="${bottom}" stroke="${color}" stroke-width="1"/>`);
    }
  }
  return parts.join("\n");
}

function barSeries(panel: Panel, sy: Scale, x0: number, width: number): string {
  const series = panel.series[0];
  const categories = panel.categories ?? series.x.map(String);
  const slot = width / categories.length;
  const barWidth = slot * 0.6;
  // bars grow from y = 0, clamped into the panel's y-domain
  const baseValue = Math.min(Math.max(0, sy.ticks[0]), sy.ticks[sy.ticks.length - 1]);
  const baseline = sy(baseValue);
  const parts: string[] = [];
  categories.forEach((label, i) => {
    const color = PALETTE[i % PALETTE.length];
    const cx = x0 + slot * (i + 0.5);
    const top = sy(series.y[i]);
    parts.push(
      `<rect x="${fmt(cx - barWidth / 2)}" y="${fmt(Math.min(top, baseline))}" ` +
      `width="${fmt(barWidth)}" height="${fmt(Math.abs(top - baseline))}" ` +
      `fill="${color}"/>`);
    const hi = fmt(sy(series.y[i] + series.halfWidth[i]));
    const lo = fmt(sy(series.y[i] - series.halfWidth[i]));
    parts.push(`<line x1="${fmt(cx)}" y1="${hi}" x2="${fmt(cx)}" y2="${lo}" stroke="#333" stroke-width="1"/>`);
    parts.push(
      `<text x="${fmt(cx)}" y="${PANEL_HEIGHT - MARGIN.bottom + 16}" ` +
      `text-anchor="middle" font-size="10">${escapeXml(label)}</text>`);
  });
  return parts.join("\n");
}

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function renderPanel(panel: Panel, offsetX: number): string {
  const x0 = MARGIN.left;
  const x1 = PANEL_WIDTH - MARGIN.right;
  const y0 = PANEL_HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const [lo, hi] = yDomain(panel);
  const sy = linearScale(lo, hi, y0, y1);

  const parts: string[] = [`<g transform="translate(${offsetX},0)">`];
  parts.push(
    `<text x="${fmt((x0 + x1) / 2)}" y="18" text-anchor="middle" ` +
    `font-size="12" font-weight="bold">${escapeXml(panel.title)}</text>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
  for (const tick of sy.ticks) {
    const y = fmt(sy(tick));
    parts.push(`<line x1="${x0 - 4}" y1="${y}" x2="${x0}" y2="${y}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
      `font-size="10">${fmt(tick)}</text>`);
  }
  parts.push(
    `<text x="${fmt((x0 + x1) / 2)}" y="${PANEL_HEIGHT - 8}" text-anchor="middle" ` +
    `font-size="11">${escapeXml(panel.xLabel)}</text>`);
  parts.push(
    `<text x="14" y="${fmt((y0 + y1) / 2)}" text-anchor="middle" font-size="11" ` +
    `transform="rotate(-90 14 ${fmt((y0 + y1) / 2)})">${escapeXml(panel.yLabel)}</text>`);

  if (panel.xScale === "categorical") {
    parts.push(barSeries(panel, sy, x0, x1 - x0));
  } else {
    const xs = panel.series.flatMap((s) => s.x);
    const sx = panel.xScale === "log2"
      ? log2Scale(xs, x0, x1)
      : linearScale(Math.min(...xs), Math.max(...xs), x0, x1);
    for (const tick of sx.ticks) {
      const x = fmt(sx(tick));
      parts.push(`<line x1="${x}" y1="${y0}" x2="${x}" y2="${y0 + 4}" stroke="#333"/>`);
      parts.push(
        `<text x="${x}" y="${y0 + 16}" text-anchor="middle" ` +
        `font-size="10">${fmt(tick)}</text>`);
    }
    panel.series.forEach((series, i) => {
      parts.push(lineSeries(series, PALETTE[i % PALETTE.length], sx, sy));
    });
    panel.series.forEach((series, i) => {
      parts.push(
        `<text x="${x1}" y="${fmt(y1 + 12 * (i + 1))}" text-anchor="end" ` +
        `font-size="10" fill="${PALETTE[i % PALETTE.length]}">${escapeXml(series.label)}</text>`);
    });
  }
  parts.push("</g>");
  return parts.join("\n");
}

export function renderSvg(figure: Figure): string {
  const width = PANEL_WIDTH * figure.panels.length;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${PANEL_HEIGHT}" viewBox="0 0 ${width} ${PANEL_HEIGHT}" ` +
    `font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${width}" height="${PANEL_HEIGHT}" fill="white"/>`,
  ];
  figure.panels.forEach((panel, i) => {
    parts.push(renderPanel(panel, i * PANEL_WIDTH));
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
