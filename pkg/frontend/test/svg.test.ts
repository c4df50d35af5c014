import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { buildFigure } from "../src/figures.js";
import { fmt, renderSvg } from "../src/svg.js";
import { main } from "../src/cli.js";
import { csvFrom, rowsFrom, scalingGrid } from "./fixtures.js";

describe("fmt", () => {
  it("emits stable short decimals", () => {
    expect(fmt(0)).toBe("0");
    expect(fmt(2)).toBe("2");
    expect(fmt(1 / 3)).toBe("0.333333");
    expect(fmt(-12.5)).toBe("-12.5");
  });
});

describe("renderSvg", () => {
  const scaling = () =>
    buildFigure(rowsFrom(scalingGrid()), {
      inputs: [], kind: "scaling", output: "x.svg",
    });

  it("is byte-identical across repeated renders", () => {
    expect(renderSvg(scaling())).toBe(renderSvg(scaling()));
  });

  it("contains no timestamps or random identifiers", () => {
    const svg = renderSvg(scaling());
    expect(svg).not.toMatch(/\d{4}-\d{2}-\d{2}/);
    expect(svg).not.toMatch(/id="/);
  });

  it("lays panels out side by side with a line and band per series", () => {
    const svg = renderSvg(scaling());
    expect(svg).toContain('width="640"');                 // 2 panels x 320
    expect(svg.match(/<polyline /g)).toHaveLength(2);     // 1 agent per panel
    expect(svg.match(/<polygon /g)).toHaveLength(2);      // its 2-SEM band
    expect(svg).toContain(">M=4<");
    expect(svg).toContain(">M=8<");
  });

  it("renders a lone point as a whisker, not a band", () => {
    const fig = buildFigure(rowsFrom([
      { agent: "a", N: 4, M: 8, episode: 0, ret: 1 },
      { agent: "a", N: 4, M: 8, episode: 1, ret: 3 },
    ]), { inputs: [], kind: "scaling", output: "x.svg" });
    const svg = renderSvg(fig);
    expect(svg).not.toContain("<polygon");
    expect(svg).toContain("<circle");
    expect(svg.match(/<line /g)!.length).toBeGreaterThan(2);
  });

  it("renders ablation bars in ladder order with whiskers", () => {
    const fig = buildFigure(rowsFrom([
      { agent: "S", N: 1, M: 4, episode: 0, ret: -1 },
      { agent: "S", N: 1, M: 4, episode: 1, ret: -2 },
      { agent: "PMCTS", N: 1, M: 4, episode: 0, ret: 1 },
      { agent: "PMCTS", N: 1, M: 4, episode: 1, ret: 2 },
    ]), { inputs: [], kind: "ablation", output: "x.svg" });
    const svg = renderSvg(fig);
    expect(svg.match(/<rect /g)).toHaveLength(3);         // background + 2 bars
    expect(svg.indexOf(">S<")).toBeLessThan(svg.indexOf(">PMCTS<"));
  });
});

describe("cli", () => {
  let dir: string;
  beforeEach(() => { dir = mkdtempSync(join(tmpdir(), "plots-")); });
  afterEach(() => { rmSync(dir, { recursive: true, force: true }); });

  it("writes the figure and returns 0", () => {
    const input = join(dir, "results.csv");
    const output = join(dir, "figure.svg");
    writeFileSync(input, csvFrom(scalingGrid()));
    const code = main(["--kind", "scaling", "--input", input, "--output", output]);
    expect(code).toBe(0);
    expect(readFileSync(output, "utf8")).toMatch(/^<svg /);
  });

  it("merges multiple input CSVs", () => {
    const a = join(dir, "a.csv");
    const b = join(dir, "b.csv");
    const output = join(dir, "figure.svg");
    writeFileSync(a, csvFrom([{ agent: "x", N: 1, M: 4, episode: 0, ret: 0 }]));
    writeFileSync(b, csvFrom([{ agent: "x", N: 4, M: 4, episode: 0, ret: 1 }]));
    const code = main(["--kind", "scaling",
                       "--input", a, "--input", b, "--output", output]);
    expect(code).toBe(0);
    expect(readFileSync(output, "utf8")).toContain("<polyline");
  });

  it("exits 2 on missing columns and 1 on other errors", () => {
    const input = join(dir, "bad.csv");
    writeFileSync(input, "agent,N\nx,1\n");
    expect(main(["--kind", "scaling", "--input", input,
                 "--output", join(dir, "o.svg")])).toBe(2);
    expect(main(["--kind", "scaling", "--input", join(dir, "absent.csv"),
                 "--output", join(dir, "o.svg")])).toBe(1);
  });

  it("applies --floor to the normalization", () => {
    const input = join(dir, "results.csv");
    const output = join(dir, "figure.svg");
    writeFileSync(input, csvFrom([
      { agent: "a", N: 1, M: 4, episode: 0, ret: 0 },
      { agent: "a", N: 4, M: 4, episode: 0, ret: 2 },
    ]));
    const code = main(["--kind", "scaling", "--input", input, "--output", output,
                       "--normalize", "--floor", "cliff_grid=-2"]);
    expect(code).toBe(0);
    expect(readFileSync(output, "utf8")).toContain("normalized return");
  });
});
