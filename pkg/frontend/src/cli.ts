#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { MissingColumnsError } from "./csv.js";
import { FigureKind, PlotSpec } from "./figures.js";
import { render } from "./render.js";

export function parseSpec(argv: string[]): PlotSpec {
  const args = yargs(argv)
    .scriptName("pmcts-plot")
    .usage("$0 --kind <figure> --input results.csv --output figure.svg")
    .option("input", {
      alias: "i", type: "string", array: true, demandOption: true,
      describe: "harness CSV file(s)",
    })
    .option("kind", {
      alias: "k", type: "string", demandOption: true,
      choices: ["scaling", "runtime", "ablation", "temperature"] as const,
      describe: "figure kind",
    })
    .option("output", {
      alias: "o", type: "string", demandOption: true,
      describe: "output SVG path",
    })
    .option("normalize", {
      type: "boolean", default: false,
      describe: "min-max normalize returns per environment to [0, 1]",
    })
    .option("floor", {
      type: "string", array: true, default: [] as string[],
      describe: "minimum possible return per env, as env=value",
    })
    .strict()
    .parseSync();

  const floors: Record<string, number> = {};
  for (const entry of args.floor) {
    const eq = entry.indexOf("=");
    const value = Number(entry.slice(eq + 1));
    if (eq <= 0 || !Number.isFinite(value)) {
      throw new Error(`--floor expects env=value, got ${JSON.stringify(entry)}`);
    }
    floors[entry.slice(0, eq)] = value;
  }
  return {
    inputs: args.input,
    kind: args.kind as FigureKind,
    output: args.output,
    normalize: args.normalize,
    floors,
  };
}

export function main(argv: string[]): number {
  try {
    const path = render(parseSpec(argv));
    console.log(`wrote ${path}`);
    return 0;
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    return error instanceof MissingColumnsError ? 2 : 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(hideBin(process.argv)));
}
