import { readFileSync, writeFileSync } from "node:fs";

import { parseCsv, Row } from "./csv.js";
import { buildFigure, PlotSpec } from "./figures.js";
import { renderSvg } from "./svg.js";

/** Read the spec's CSV inputs, build the figure, write the SVG. */
export function render(spec: PlotSpec): string {
  const rows: Row[] = [];
  for (const input of spec.inputs) {
    rows.push(...parseCsv(readFileSync(input, "utf8")));
  }
  const svg = renderSvg(buildFigure(rows, spec));
  writeFileSync(spec.output, svg);
  return spec.output;
}
