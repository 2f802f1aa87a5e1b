export { ClientSession, type ClientOptions, type Decoded } from "./client.js";
export {
  ApiError,
  NotFoundError,
  SchemaVersionError,
  TransportError,
} from "./errors.js";
export {
  SCHEMA_VERSION,
  type BatchResponse,
  type Health,
  type Metrics,
  type ProblemView,
  type RewardBreakdown,
  type RewardResponse,
  type VerifyResponse,
} from "./schemas.js";
