/** Error taxonomy for the service client. */

export class TransportError extends Error {
  constructor(message: string, readonly cause?: unknown) {
    super(message);
    this.name = "TransportError";
  }
}

export class NotFoundError extends Error {
  constructor(readonly problemId: string, detail: string) {
    super(detail);
    this.name = "NotFoundError";
  }
}

export class SchemaVersionError extends Error {
  constructor(readonly got: unknown, readonly expected: number) {
    super(`server answered with schema_version ${String(got)}, client pins ${expected}`);
    this.name = "SchemaVersionError";
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}
