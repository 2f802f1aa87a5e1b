/**
 * Synchronous-feeling client for the rlvr-tasks reward service.
 *
 * One session per worker; sessions pin schema_version 1 and reject
 * anything else. Transport failures and 5xx responses are retried with
 * exponential backoff; 4xx responses are never retried. All reward logic
 * stays on the server - the client only decodes and type-checks.
 *
 * Every decoded view keeps the raw response body (`raw`), so
 * re-serializing a reward is byte-identical to what the server sent.
 */

import {
  ApiError,
  NotFoundError,
  SchemaVersionError,
  TransportError,
} from "./errors.js";
import {
  BatchResponse,
  Health,
  Metrics,
  ProblemView,
  RewardResponse,
  SCHEMA_VERSION,
  VerifyResponse,
  batchResponseSchema,
  healthSchema,
  metricsSchema,
  problemViewSchema,
  rewardResponseSchema,
  verifyResponseSchema,
} from "./schemas.js";

export interface ClientOptions {
  /** Service base URL; falls back to RLVR_SERVICE_URL. */
  baseUrl?: string;
  timeoutMs?: number;
  /** Total attempts for transport-level failures (>= 1). */
  retries?: number;
  backoffMs?: number;
}

export interface Decoded<T> {
  body: T;
  /** Exact response text as received from the server. */
  raw: string;
}

interface RawResult {
  status: number;
  text: string;
}

export class ClientSession {
  readonly baseUrl: string;
  readonly timeoutMs: number;
  readonly retries: number;
  readonly backoffMs: number;

  constructor(options: ClientOptions = {}) {
    const base = options.baseUrl ?? process.env.RLVR_SERVICE_URL;
    if (!base) {
      throw new TransportError(
        "no base URL: pass baseUrl or set RLVR_SERVICE_URL",
      );
    }
    this.baseUrl = base.replace(/\/+$/, "");
    this.timeoutMs = options.timeoutMs ?? 30_000;
    this.retries = Math.max(1, options.retries ?? 3);
    this.backoffMs = options.backoffMs ?? 250;
  }

  private async requestRaw(path: string, init: RequestInit): Promise<RawResult> {
    let lastError: unknown;
    for (let attempt = 0; attempt < this.retries; attempt++) {
      const controller = new AbortController();
      const timer = setTimeout(() => controller.abort(), this.timeoutMs);
      try {
        const resp = await fetch(this.baseUrl + path, {
          ...init,
          signal: controller.signal,
        });
        const text = await resp.text();
        if (resp.status >= 500) {
          lastError = new ApiError(resp.status, text.slice(0, 200));
        } else {
          return { status: resp.status, text };
        }
      } catch (err) {
        lastError = err;
      } finally {
        clearTimeout(timer);
      }
      if (attempt + 1 < this.retries) {
        await new Promise((resolve) =>
          setTimeout(resolve, this.backoffMs * 2 ** attempt),
        );
      }
    }
    throw new TransportError(
      `request to ${path} failed after ${this.retries} attempts`,
      lastError,
    );
  }

  private decode<T>(
    result: RawResult,
    schema: { parse(input: unknown): T },
    problemId?: string,
  ): Decoded<T> {
    let parsed: unknown;
    try {
      parsed = JSON.parse(result.text);
    } catch {
      throw new ApiError(result.status, "response body is not JSON");
    }
    if (result.status === 404) {
      const detail =
        typeof parsed === "object" && parsed !== null && "error" in parsed
          ? String((parsed as { error: unknown }).error)
          : "not found";
      throw new NotFoundError(problemId ?? "", detail);
    }
    if (result.status >= 400) {
      throw new ApiError(result.status, result.text.slice(0, 200));
    }
    if (
      typeof parsed === "object" &&
      parsed !== null &&
      "schema_version" in parsed &&
      (parsed as { schema_version: unknown }).schema_version !== SCHEMA_VERSION
    ) {
      throw new SchemaVersionError(
        (parsed as { schema_version: unknown }).schema_version,
        SCHEMA_VERSION,
      );
    }
    return { body: schema.parse(parsed), raw: result.text };
  }

  /** Fetch a problem view. The service never includes the ground truth. */
  async getProblem(problemId: string): Promise<Decoded<ProblemView>> {
    const result = await this.requestRaw(
      `/v1/problems/${encodeURIComponent(problemId)}`,
      { method: "GET" },
    );
    return this.decode(result, problemViewSchema, problemId);
  }

  /** Score one completion; numerically identical to the server breakdown. */
  async score(
    problemId: string,
    completion: string,
    truncated = false,
  ): Promise<Decoded<RewardResponse>> {
    const result = await this.requestRaw("/v1/reward", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        problem_id: problemId,
        completion,
        truncated,
      }),
    });
    return this.decode(result, rewardResponseSchema, problemId);
  }

  /** Score many completions in one call; order-preserving, per-item errors. */
  async scoreBatch(
    problemIds: string[],
    completions: string[],
    truncated?: boolean[],
  ): Promise<Decoded<BatchResponse>> {
    const result = await this.requestRaw("/v1/reward/batch", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        problem_ids: problemIds,
        completions,
        truncated: truncated ?? null,
      }),
    });
    return this.decode(result, batchResponseSchema);
  }

  async verify(
    problemId: string,
    completion: string,
    truncated = false,
  ): Promise<Decoded<VerifyResponse>> {
    const result = await this.requestRaw("/v1/verify", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        problem_id: problemId,
        completion,
        truncated,
      }),
    });
    return this.decode(result, verifyResponseSchema, problemId);
  }

  async metrics(): Promise<Decoded<Metrics>> {
    const result = await this.requestRaw("/v1/metrics", { method: "GET" });
    return this.decode(result, metricsSchema);
  }

  async health(): Promise<Decoded<Health>> {
    const result = await this.requestRaw("/v1/health", { method: "GET" });
    return this.decode(result, healthSchema);
  }
}
