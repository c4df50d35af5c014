import { MissingColumnsError, numeric, requireColumns, Row } from "./csv.js";
import { halfWidth, mean, normalizeByEnv } from "./stats.js";

export type FigureKind = "scaling" | "runtime" | "ablation" | "temperature";

export interface PlotSpec {
  inputs: string[];
  kind: FigureKind;
  output: string;
  /** env name -> minimum possible return, for cross-env normalization */
  floors?: Record<string, number>;
  /** normalize returns per environment before aggregating (forced on when
   *  the CSV mixes environments) */
  normalize?: boolean;
}

/** One line (or bar row): points sorted by x with a 2-SEM band per point. */
export interface Series {
  label: string;
  x: number[];
  y: number[];
  halfWidth: number[];
}

export interface Panel {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: "log2" | "linear" | "categorical";
  categories?: string[];
  series: Series[];
}

export interface Figure {
  kind: FigureKind;
  panels: Panel[];
}

const REQUIRED: Record<FigureKind, string[]> = {
  scaling: ["agent", "env", "N", "M", "return"],
  runtime: [
    "agent", "N", "M",
    "wallclock_select_ms", "wallclock_expand_ms", "wallclock_backprop_ms",
  ],
  ablation: ["agent", "return"],
  temperature: ["agent", "return"],
};

export function requiredColumns(kind: FigureKind): string[] {
  return [...REQUIRED[kind]];
}

function groupBy(rows: Row[], key: (row: Row) => string): Map<string, Row[]> {
  const groups = new Map<string, Row[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = groups.get(k);
    if (bucket) bucket.push(row);
    else groups.set(k, [row]);
  }
  return groups;
}

function sortedNumbers(values: Iterable<string>): number[] {
  return [...new Set([...values].map(Number))].sort((a, b) => a - b);
}

/** Points per distinct x, aggregated with the shared mean / 2-SEM formulas. */
function seriesOver(
  label: string,
  rows: Row[],
  xColumn: string,
  value: (row: Row) => number,
): Series {
  const byX = groupBy(rows, (r) => r[xColumn]);
  const xs = sortedNumbers(byX.keys());
  const series: Series = { label, x: xs, y: [], halfWidth: [] };
  for (const x of xs) {
    const values = byX.get(String(x))!.map(value);
    series.y.push(mean(values));
    series.halfWidth.push(halfWidth(values));
  }
  return series;
}

/** Returns, min-max normalized per environment when asked or required. */
function returnGetter(rows: Row[], spec: PlotSpec): (row: Row) => number {
  const envs = rows.map((r) => r.env ?? "");
  const multiEnv = new Set(envs).size > 1;
  if (!spec.normalize && !multiEnv) {
    return (row) => numeric(row, "return");
  }
  const normalized = normalizeByEnv(
    envs, rows.map((r) => numeric(r, "return")), spec.floors ?? {});
  const byRow = new Map(rows.map((row, i) => [row, normalized[i]]));
  return (row) => byRow.get(row)!;
}

function panelsPerBudget(
  rows: Row[],
  spec: PlotSpec,
  yLabel: string,
  value: (row: Row) => number,
): Panel[] {
  const byM = groupBy(rows, (r) => r.M);
  return [...byM.keys()].sort((a, b) => Number(a) - Number(b)).map((m) => ({
    title: `M=${m}`,
    xLabel: "particles N",
    yLabel,
    xScale: "log2" as const,
    series: [...groupBy(byM.get(m)!, (r) => r.agent).entries()]
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([agent, group]) => seriesOver(agent, group, "N", value)),
  }));
}

export function buildScaling(rows: Row[], spec: PlotSpec): Figure {
  requireColumns(rows, REQUIRED.scaling);
  const multiEnv = new Set(rows.map((r) => r.env)).size > 1;
  const yLabel = spec.normalize || multiEnv ? "normalized return" : "mean return";
  return {
    kind: "scaling",
    panels: panelsPerBudget(rows, spec, yLabel, returnGetter(rows, spec)),
  };
}

export function buildRuntime(rows: Row[], spec: PlotSpec): Figure {
  requireColumns(rows, REQUIRED.runtime);
  const wallclock = (row: Row) =>
    numeric(row, "wallclock_select_ms") +
    numeric(row, "wallclock_expand_ms") +
    numeric(row, "wallclock_backprop_ms");
  return {
    kind: "runtime",
    panels: panelsPerBudget(rows, spec, "episode wallclock (ms)", wallclock),
  };
}

export function buildAblation(rows: Row[], spec: PlotSpec): Figure {
  requireColumns(rows, REQUIRED.ablation);
  const value = returnGetter(rows, spec);
  const byAgent = groupBy(rows, (r) => r.agent);    // first-appearance order
  const categories = [...byAgent.keys()];
  const series: Series = { label: "mean return", x: [], y: [], halfWidth: [] };
  categories.forEach((agent, i) => {
    const values = byAgent.get(agent)!.map(value);
    series.x.push(i);
    series.y.push(mean(values));
    series.halfWidth.push(halfWidth(values));
  });
  return {
    kind: "ablation",
    panels: [{
      title: "feature ladder",
      xLabel: "variant",
      yLabel: "mean return",
      xScale: "categorical",
      categories,
      series: [series],
    }],
  };
}

const SWEEP_LABEL = /^N(\d+)_M(\d+)_eta([0-9.]+)$/;

/** Sweep rows label agents "N{n}_M{m}_eta{e}"; one line per eta, x = N. */
export function buildTemperature(rows: Row[], spec: PlotSpec): Figure {
  requireColumns(rows, REQUIRED.temperature);
  const value = returnGetter(rows, spec);
  const parsed = rows.map((row) => {
    const match = SWEEP_LABEL.exec(row.agent);
    if (!match) {
      throw new Error(
        `agent label ${JSON.stringify(row.agent)} is not a sweep label ` +
        "(expected N{n}_M{m}_eta{eta}, as written by the sweep command)");
    }
    return { row, n: match[1], m: match[2], eta: match[3] };
  });
  const info = new Map(parsed.map((p) => [p.row, p]));
  const byM = groupBy(rows, (r) => info.get(r)!.m);
  return {
    kind: "temperature",
    panels: [...byM.keys()].sort((a, b) => Number(a) - Number(b)).map((m) => {
      const group = byM.get(m)!;
      const byEta = groupBy(group, (r) => info.get(r)!.eta);
      return {
        title: `M=${m}`,
        xLabel: "particles N",
        yLabel: "mean return",
        xScale: "log2" as const,
        series: [...byEta.entries()]
          .sort(([a], [b]) => Number(a) - Number(b))
          .map(([eta, etaRows]) => {
            const byN = groupBy(etaRows, (r) => info.get(r)!.n);
            const xs = sortedNumbers(byN.keys());
            const series: Series = {
              label: `eta=${eta}`, x: xs, y: [], halfWidth: [],
            };
            for (const x of xs) {
              const values = byN.get(String(x))!.map(value);
              series.y.push(mean(values));
              series.halfWidth.push(halfWidth(values));
            }
            return series;
          }),
      };
    }),
  };
}

const BUILDERS: Record<FigureKind, (rows: Row[], spec: PlotSpec) => Figure> = {
  scaling: buildScaling,
  runtime: buildRuntime,
  ablation: buildAblation,
  temperature: buildTemperature,
};

export function buildFigure(rows: Row[], spec: PlotSpec): Figure {
  if (!(spec.kind in BUILDERS)) {
    throw new Error(`unknown figure kind ${JSON.stringify(spec.kind)}`);
  }
  if (rows.length === 0) {
    throw new MissingColumnsError(REQUIRED[spec.kind]);
  }
  return BUILDERS[spec.kind](rows, spec);
}
