import { describe, expect, it } from "vitest";

import { ApiError, ServiceClient } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function stub(status: number, body: unknown, calls: Call[] = []) {
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const text = typeof body === "string" ? body : JSON.stringify(body);
    return new Response(text, {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { client: new ServiceClient("", fetchFn), calls };
}

describe("ServiceClient.searchItems", () => {
  it("builds the query string with encoding and limit", async () => {
    const { client, calls } = stub(200, []);
    await client.searchItems("aníon gap", 7);
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("/v1/items?q=an%C3%ADon+gap&limit=7");
  });

  it("defaults the limit to 20 and returns the body verbatim", async () => {
    const items = [
      { item_id: "CBC", name: "CBC" },
      { item_id: "Cl", name: "Cl" },
    ];
    const { client, calls } = stub(200, items);
    const got = await client.searchItems("c");
    expect(calls[0].url).toBe("/v1/items?q=c&limit=20");
    expect(got).toEqual(items);
  });
});

describe("ServiceClient.recommend", () => {
  it("posts the bag with k and explicit exclusion", async () => {
    const { client, calls } = stub(200, {
      recommendations: [],
      unknown_items: [],
      model: { metric: "jaccard", s: 2 },
    });
    await client.recommend(["CBC", "Na"], 5);
    expect(calls[0].url).toBe("/v1/recommendations");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      items: ["CBC", "Na"],
      k: 5,
      exclude_selected: true,
    });
  });
});

describe("error handling", () => {
  it("surfaces the service error envelope as an ApiError", async () => {
    const { client } = stub(400, {
      detail: { code: "EMPTY_QUERY", message: "no known items in query" },
    });
    const err = await client.recommend(["x"], 5).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.code).toBe("EMPTY_QUERY");
    expect(err.message).toBe("no known items in query");
  });

  it("wraps non-envelope failures with a generic code", async () => {
    const { client } = stub(502, "<html>bad gateway</html>");
    const err = await client.modelInfo().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("HTTP_502");
  });

  it("lets network-level rejections bubble", async () => {
    const client = new ServiceClient("", async () => {
      throw new TypeError("fetch failed");
    });
    await expect(client.searchItems("c")).rejects.toThrow("fetch failed");
  });

  it("prefixes requests with the configured base url", async () => {
    const calls: Call[] = [];
    const { client } = (() => {
      const fetchFn = async (url: string, init?: RequestInit) => {
        calls.push({ url, init });
        return new Response(
          JSON.stringify({ metric: "jaccard", s: 2, m: 3, n: 5, format_version: 1 }),
          { status: 200 },
        );
      };
      return { client: new ServiceClient("http://127.0.0.1:8080", fetchFn) };
    })();
    const info = await client.modelInfo();
    expect(calls[0].url).toBe("http://127.0.0.1:8080/v1/model");
    expect(info.s).toBe(2);
  });
});
