export { MissingColumnsError, parseCsv, requireColumns } from "./csv.js";
export type { Row } from "./csv.js";
export { halfWidth, mean, normalizeByEnv, sem } from "./stats.js";
export {
  buildAblation, buildFigure, buildRuntime, buildScaling, buildTemperature,
  requiredColumns,
} from "./figures.js";
export type { Figure, FigureKind, Panel, PlotSpec, Series } from "./figures.js";
export { fmt, renderSvg } from "./svg.js";
export { render } from "./render.js";
