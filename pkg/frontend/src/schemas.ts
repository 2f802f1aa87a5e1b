/** Zod mirrors of the service's /v1 response payloads. */

import { z } from "zod";

export const SCHEMA_VERSION = 1;

export const rewardBreakdownSchema = z.object({
  correctness: z.number(),
  format_bonus: z.number(),
  step_penalty: z.number(),
  length_penalty: z.number(),
  total: z.number(),
  category: z.string(),
});
export type RewardBreakdown = z.infer<typeof rewardBreakdownSchema>;

export const rewardResponseSchema = z.object({
  schema_version: z.number(),
  problem_id: z.string(),
  family: z.string(),
  verdict: z.enum(["correct", "incorrect", "invalid"]),
  reward: rewardBreakdownSchema,
  normalizer_used: z.boolean(),
});
export type RewardResponse = z.infer<typeof rewardResponseSchema>;

export const problemViewSchema = z.object({
  schema_version: z.number(),
  id: z.string(),
  family: z.enum(["counting", "graph", "spatial"]),
  prompt: z.string(),
  spec: z.record(z.unknown()),
  complexity: z.record(z.unknown()),
  seed: z.number(),
});
export type ProblemView = z.infer<typeof problemViewSchema>;

export const verifyResponseSchema = z.object({
  schema_version: z.number(),
  problem_id: z.string(),
  verdict: z.enum(["correct", "incorrect", "invalid"]),
  parsed: z.object({
    status: z.string(),
    value: z.unknown(),
    format_class: z.string(),
    step_count: z.number(),
  }),
  normalizer_used: z.boolean(),
});
export type VerifyResponse = z.infer<typeof verifyResponseSchema>;

export const batchItemSchema = z.union([
  rewardResponseSchema,
  z.object({ error: z.string() }),
]);

export const batchResponseSchema = z.object({
  schema_version: z.number(),
  results: z.array(batchItemSchema),
});
export type BatchResponse = z.infer<typeof batchResponseSchema>;

export const metricsSchema = z.object({
  schema_version: z.number(),
  total: z.number(),
  families: z.record(z.record(z.number())),
});
export type Metrics = z.infer<typeof metricsSchema>;

export const healthSchema = z.object({
  status: z.string(),
  problems: z.number(),
  schema_version: z.number(),
});
export type Health = z.infer<typeof healthSchema>;
