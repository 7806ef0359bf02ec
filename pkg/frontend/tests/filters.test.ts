import { describe, expect, it } from "vitest";

import { dayStart, filterQuery } from "../src/filters.js";

describe("filterQuery", () => {
  it("builds exactly the endpoint grammar", () => {
    const query = filterQuery({
      keyword: "stackoverflow",
      application: "browser",
      from: "2016-11-16T00:00:00.000Z",
      to: "2016-11-17T00:00:00.000Z",
      state: "pending",
    });
    const params = new URLSearchParams(query);
    expect([...params.keys()].sort()).toEqual(["application", "from", "keyword", "state", "to"]);
    expect(params.get("keyword")).toBe("stackoverflow");
    expect(params.get("from")).toBe("2016-11-16T00:00:00.000Z");
    expect(params.get("state")).toBe("pending");
  });

  it("emits nothing for an empty filter", () => {
    expect(filterQuery({})).toBe("");
  });

  it("skips unset fields", () => {
    const params = new URLSearchParams(filterQuery({ keyword: "x" }));
    expect([...params.keys()]).toEqual(["keyword"]);
  });

  it("never invents fields outside the grammar", () => {
    const query = filterQuery({ keyword: "a b", application: "x", state: "submitted" });
    for (const key of new URLSearchParams(query).keys()) {
      expect(["keyword", "application", "from", "to", "state"]).toContain(key);
    }
  });
});

describe("dayStart", () => {
  it("turns a date-picker value into a UTC instant", () => {
    expect(dayStart("2016-11-16")).toBe("2016-11-16T00:00:00.000Z");
  });
});
