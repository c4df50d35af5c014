import { Row } from "../src/csv.js";

export const CSV_HEADER =
  "agent,env,N,M,seed,episode,return,wallclock_select_ms,wallclock_expand_ms," +
  "wallclock_backprop_ms,unique_trajectory_mean,ess_root_mean";

export interface RowSpec {
  agent: string;
  env?: string;
  N: number;
  M: number;
  episode: number;
  ret: number;
  selectMs?: number;
}

export function csvFrom(specs: RowSpec[]): string {
  const lines = [CSV_HEADER];
  for (const s of specs) {
    lines.push([
      s.agent, s.env ?? "cliff_grid", s.N, s.M, 0, s.episode, s.ret,
      (s.selectMs ?? 1).toFixed(6), (2).toFixed(6), (0.5).toFixed(6),
      "1.0", "1.0",
    ].join(","));
  }
  return lines.join("\n") + "\n";
}

export function rowsFrom(specs: RowSpec[]): Row[] {
  const header = CSV_HEADER.split(",");
  return csvFrom(specs)
    .trim()
    .split("\n")
    .slice(1)
    .map((line) => {
      const cells = line.split(",");
      return Object.fromEntries(header.map((h, i) => [h, cells[i]]));
    });
}

/** One agent evaluated at 3 N values x 2 M values, two episodes each. */
export function scalingGrid(): RowSpec[] {
  const specs: RowSpec[] = [];
  for (const m of [4, 8]) {
    for (const n of [1, 4, 16]) {
      for (const episode of [0, 1]) {
        specs.push({
          agent: "a",
          N: n, M: m, episode,
          ret: Math.log2(n) + m / 10 + episode * 0.5,
        });
      }
    }
  }
  return specs;
}

/** 3 N values x 2 M values, two episodes each, returns spread by config. */
export function sweepGrid(): RowSpec[] {
  const specs: RowSpec[] = [];
  for (const m of [4, 8]) {
    for (const n of [1, 4, 16]) {
      for (const episode of [0, 1]) {
        specs.push({
          agent: `N${n}_M${m}_eta1.5`,
          N: n, M: m, episode,
          ret: Math.log2(n) + m / 10 + episode * 0.5,
        });
      }
    }
  }
  return specs;
}
