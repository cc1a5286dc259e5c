/**
 * Thin typed client for the listening-test JSON API.
 *
 * The only configuration is the API base URL; an empty base means the
 * page is served from the same origin as the service.
 */

export type JudgePhase = "new" | "trained" | "qualified" | "blocked";
export type AssignmentPhase =
  | "training"
  | "qualification"
  | "rate"
  | "done"
  | "blocked";

export type Score = 1 | 2 | 3 | 4 | 5;

export interface Assignment {
  phase: AssignmentPhase;
  clip_id?: string;
  clip_token?: string;
  clip_url?: string;
}

export interface RatingOutcome {
  status: "accepted" | "duplicate";
  rating_id: string;
  clip_id: string;
  judge_phase?: JudgePhase;
  spam_status?: string | null;
}

export interface QualificationOutcome {
  pass: boolean;
  score: number;
  attempt: number;
  judge_phase: JudgePhase;
}

export interface AnswerItem {
  clip_id: string;
  score: Score;
}

/** Server said no: carries the HTTP status and the reason it gave. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** Request never reached the server (or the reply never came back). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(cause instanceof Error ? cause.message : String(cause));
    this.name = "NetworkError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** What the session needs from the transport; faked in tests. */
export interface JudgeApi {
  registerJudge(judgeId?: string): Promise<string>;
  nextAssignment(studyId: string, judgeId: string): Promise<Assignment>;
  submitRating(
    studyId: string,
    body: { judge: string; clip_token: string; score: Score },
  ): Promise<RatingOutcome>;
  submitQualification(
    studyId: string,
    body: { judge: string; answers: AnswerItem[] },
  ): Promise<QualificationOutcome>;
  clipUrl(assignment: Assignment): string;
}

export class ApiClient implements JudgeApi {
  private base: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // bind so it still works when fetch is the global
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new NetworkError(err);
    }
    if (!response.ok) {
      let detail = response.statusText || "request failed";
      try {
        const data = await response.json();
        if (data && typeof data.detail === "string") detail = data.detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  private async postJson(path: string, body: unknown): Promise<Response> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async registerJudge(judgeId?: string): Promise<string> {
    const response = await this.postJson(
      "/api/v1/judges",
      judgeId ? { judge_id: judgeId } : {},
    );
    const data = await response.json();
    return data.judge_id as string;
  }

  async nextAssignment(studyId: string, judgeId: string): Promise<Assignment> {
    const response = await this.request(
      `/api/v1/studies/${encodeURIComponent(studyId)}/next?judge=${encodeURIComponent(judgeId)}`,
    );
    return (await response.json()) as Assignment;
  }

  async submitRating(
    studyId: string,
    body: { judge: string; clip_token: string; score: Score },
  ): Promise<RatingOutcome> {
    const response = await this.postJson(
      `/api/v1/studies/${encodeURIComponent(studyId)}/ratings`,
      body,
    );
    return (await response.json()) as RatingOutcome;
  }

  async submitQualification(
    studyId: string,
    body: { judge: string; answers: AnswerItem[] },
  ): Promise<QualificationOutcome> {
    const response = await this.postJson(
      `/api/v1/studies/${encodeURIComponent(studyId)}/qualification`,
      body,
    );
    return (await response.json()) as QualificationOutcome;
  }

  clipUrl(assignment: Assignment): string {
    if (!assignment.clip_url) {
      throw new Error("assignment carries no clip");
    }
    return this.base + assignment.clip_url;
  }
}
