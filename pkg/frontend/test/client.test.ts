/** Unit tests against a local stub server: retries, 404s, schema pinning. */

import { createServer, type Server } from "node:http";
import { afterEach, describe, expect, it } from "vitest";

import {
  ClientSession,
  NotFoundError,
  SchemaVersionError,
  TransportError,
} from "../src/index.js";

type Handler = (body: string) => { status: number; payload: unknown };

let server: Server | undefined;

async function stubServer(handler: Handler): Promise<string> {
  server = createServer((req, res) => {
    let body = "";
    req.on("data", (chunk) => (body += chunk));
    req.on("end", () => {
      const { status, payload } = handler(body);
      res.writeHead(status, { "content-type": "application/json" });
      res.end(JSON.stringify(payload));
    });
  });
  await new Promise<void>((resolve) => server!.listen(0, "127.0.0.1", resolve));
  const address = server!.address();
  if (typeof address === "object" && address) {
    return `http://127.0.0.1:${address.port}`;
  }
  throw new Error("no address");
}

afterEach(async () => {
  if (server) {
    await new Promise((resolve) => server!.close(resolve));
    server = undefined;
  }
});

const REWARD = {
  schema_version: 1,
  problem_id: "counting-1-0",
  family: "counting",
  verdict: "correct",
  reward: {
    correctness: 1.0,
    format_bonus: 0.1,
    step_penalty: 0.0,
    length_penalty: 0.0,
    total: 1.1,
    category: "correct_well_formatted",
  },
  normalizer_used: false,
};

describe("ClientSession", () => {
  it("requires a base URL", () => {
    const saved = process.env.RLVR_SERVICE_URL;
    delete process.env.RLVR_SERVICE_URL;
    try {
      expect(() => new ClientSession()).toThrow(TransportError);
    } finally {
      if (saved !== undefined) process.env.RLVR_SERVICE_URL = saved;
    }
  });

  it("reads the base URL from RLVR_SERVICE_URL", async () => {
    const base = await stubServer(() => ({ status: 200, payload: REWARD }));
    process.env.RLVR_SERVICE_URL = base;
    try {
      const session = new ClientSession();
      const { body } = await session.score("counting-1-0", "Answer: 16");
      expect(body.reward.total).toBe(1.1);
    } finally {
      delete process.env.RLVR_SERVICE_URL;
    }
  });

  it("raises NotFoundError on 404", async () => {
    const base = await stubServer(() => ({
      status: 404,
      payload: { error: "unknown problem_id 'nope'" },
    }));
    const session = new ClientSession({ baseUrl: base });
    await expect(session.getProblem("nope")).rejects.toBeInstanceOf(NotFoundError);
  });

  it("rejects unknown schema versions", async () => {
    const base = await stubServer(() => ({
      status: 200,
      payload: { ...REWARD, schema_version: 999 },
    }));
    const session = new ClientSession({ baseUrl: base });
    await expect(session.score("counting-1-0", "x")).rejects.toBeInstanceOf(
      SchemaVersionError,
    );
  });

  it("retries 5xx responses and then succeeds", async () => {
    let calls = 0;
    const base = await stubServer(() => {
      calls += 1;
      if (calls < 3) return { status: 503, payload: { error: "warming up" } };
      return { status: 200, payload: REWARD };
    });
    const session = new ClientSession({ baseUrl: base, retries: 3, backoffMs: 5 });
    const { body } = await session.score("counting-1-0", "Answer: 16");
    expect(calls).toBe(3);
    expect(body.verdict).toBe("correct");
  });

  it("gives up after the retry budget", async () => {
    let calls = 0;
    const base = await stubServer(() => {
      calls += 1;
      return { status: 500, payload: { error: "broken" } };
    });
    const session = new ClientSession({ baseUrl: base, retries: 2, backoffMs: 5 });
    await expect(session.score("p", "x")).rejects.toBeInstanceOf(TransportError);
    expect(calls).toBe(2);
  });

  it("does not retry 4xx responses", async () => {
    let calls = 0;
    const base = await stubServer(() => {
      calls += 1;
      return { status: 404, payload: { error: "unknown problem_id" } };
    });
    const session = new ClientSession({ baseUrl: base, retries: 3, backoffMs: 5 });
    await expect(session.getProblem("gone")).rejects.toBeInstanceOf(NotFoundError);
    expect(calls).toBe(1);
  });

  it("raises TransportError when the server is unreachable", async () => {
    const session = new ClientSession({
      baseUrl: "http://127.0.0.1:1",
      retries: 2,
      backoffMs: 5,
      timeoutMs: 300,
    });
    await expect(session.health()).rejects.toBeInstanceOf(TransportError);
  });

  it("keeps the raw body so re-serialization is byte-identical", async () => {
    const base = await stubServer(() => ({ status: 200, payload: REWARD }));
    const session = new ClientSession({ baseUrl: base });
    const { body, raw } = await session.score("counting-1-0", "Answer: 16");
    expect(JSON.parse(raw)).toEqual(body);
    expect(raw).toBe(JSON.stringify(REWARD));
  });
});
