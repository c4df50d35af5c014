import { describe, expect, it } from "vitest";

import { MissingColumnsError, numeric, parseCsv, requireColumns } from "../src/csv.js";
import { csvFrom, rowsFrom } from "./fixtures.js";

describe("parseCsv", () => {
  it("round-trips the harness schema", () => {
    const rows = parseCsv(csvFrom([
      { agent: "a", N: 4, M: 8, episode: 0, ret: 1.25 },
    ]));
    expect(rows).toHaveLength(1);
    expect(rows[0].agent).toBe("a");
    expect(rows[0].N).toBe("4");
    expect(rows[0].return).toBe("1.25");
  });

  it("ignores a trailing newline and blank lines", () => {
    const rows = parseCsv("a,b\n1,2\n\n3,4\n");
    expect(rows).toEqual([{ a: "1", b: "2" }, { a: "3", b: "4" }]);
  });

  it("rejects ragged rows with a row number", () => {
    expect(() => parseCsv("a,b\n1,2,3")).toThrowError(/row 0/);
  });
});

describe("requireColumns", () => {
  it("names every missing column", () => {
    const rows = parseCsv("agent,N\nx,1");
    try {
      requireColumns(rows, ["agent", "return", "M", "N"]);
      expect.unreachable("should have thrown");
    } catch (error) {
      expect(error).toBeInstanceOf(MissingColumnsError);
      expect((error as MissingColumnsError).columns).toEqual(["return", "M"]);
      expect((error as Error).message).toContain("return, M");
    }
  });

  it("accepts a superset of columns", () => {
    const rows = rowsFrom([{ agent: "a", N: 1, M: 2, episode: 0, ret: 0 }]);
    expect(() => requireColumns(rows, ["agent", "return"])).not.toThrow();
  });
});

describe("numeric", () => {
  it("parses repr-formatted floats exactly", () => {
    const rows = parseCsv("return\n-1.2282599999999999\n");
    expect(numeric(rows[0], "return")).toBe(-1.2282599999999999);
  });

  it("rejects non-numeric cells naming the column", () => {
    const rows = parseCsv("return\noops\n");
    expect(() => numeric(rows[0], "return")).toThrowError(/column return/);
  });
});
