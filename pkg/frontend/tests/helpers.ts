/**
 * Test doubles: an in-memory fake of the judge-facing API surface that
 * mirrors the service's observable behavior (assignment order, the
 * recycling qualification cursor, duplicate-rating handling, the two
 * attempt qualification gate), and a hand-cranked player.
 */

import {
  ApiError,
  type Assignment,
  type AnswerItem,
  type JudgeApi,
  type JudgePhase,
  type QualificationOutcome,
  type RatingOutcome,
  type Score,
} from "../src/api.js";
import type { ClipPlayer } from "../src/player.js";
import type { Session } from "../src/session.js";

export interface FakeStudyDef {
  training: string[];
  qualification: { clip_id: string; expected: Score }[];
  clips: string[];
  target: number;
}

interface FakeJudge {
  phase: JudgePhase;
  trainingDone: Set<string>;
  trainingScores: Map<string, Score>;
  ratings: Map<string, Score>;
  qualCursor: number;
  qualAttempts: number;
}

export class FakeApi implements JudgeApi {
  judges = new Map<string, FakeJudge>();
  calls: { method: string; args: unknown[] }[] = [];
  private failQueue = new Map<string, Error[]>();
  private nextId = 0;

  constructor(readonly def: FakeStudyDef) {}

  /** Make the next invocation of `method` throw `err` instead. */
  queueFailure(method: string, err: Error): void {
    const queue = this.failQueue.get(method) ?? [];
    queue.push(err);
    this.failQueue.set(method, queue);
  }

  /** Let the next `method` call take effect, then throw: a lost reply. */
  queueLostReply(method: string, err: Error): void {
    const queue = this.lostReplyQueue.get(method) ?? [];
    queue.push(err);
    this.lostReplyQueue.set(method, queue);
  }

  private lostReplyQueue = new Map<string, Error[]>();

  private trip(method: string, args: unknown[]): void {
    this.calls.push({ method, args });
    const queue = this.failQueue.get(method);
    if (queue && queue.length > 0) {
      throw queue.shift() as Error;
    }
  }

  private tripAfter(method: string): void {
    const queue = this.lostReplyQueue.get(method);
    if (queue && queue.length > 0) {
      throw queue.shift() as Error;
    }
  }

  private judge(judgeId: string): FakeJudge {
    const judge = this.judges.get(judgeId);
    if (!judge) throw new ApiError(403, `judge '${judgeId}' is not registered`);
    return judge;
  }

  private includedCount(clipId: string): number {
    let n = 0;
    for (const judge of this.judges.values()) {
      if (judge.phase !== "blocked" && judge.ratings.has(clipId)) n += 1;
    }
    return n;
  }

  async registerJudge(judgeId?: string): Promise<string> {
    this.trip("registerJudge", [judgeId]);
    const id = judgeId ?? `j${this.nextId++}`;
    if (!this.judges.has(id)) {
      this.judges.set(id, {
        phase: "new",
        trainingDone: new Set(),
        trainingScores: new Map(),
        ratings: new Map(),
        qualCursor: 0,
        qualAttempts: 0,
      });
    }
    return id;
  }

  async nextAssignment(studyId: string, judgeId: string): Promise<Assignment> {
    this.trip("nextAssignment", [studyId, judgeId]);
    const result = this.pickAssignment(judgeId);
    this.tripAfter("nextAssignment");
    return result;
  }

  private pickAssignment(judgeId: string): Assignment {
    const judge = this.judge(judgeId);
    if (judge.phase === "blocked") return { phase: "blocked" };
    if (judge.phase === "new") {
      const pending = this.def.training.find((c) => !judge.trainingDone.has(c));
      if (pending !== undefined) return this.withClip("training", pending, judgeId);
      judge.phase = "trained";
    }
    if (judge.phase === "trained") {
      const quals = this.def.qualification;
      const clip = quals[judge.qualCursor % quals.length];
      judge.qualCursor += 1;
      return this.withClip("qualification", clip.clip_id, judgeId);
    }
    const eligible = this.def.clips
      .filter(
        (c) => !judge.ratings.has(c) && this.includedCount(c) < this.def.target,
      )
      .sort((a, b) =>
        this.includedCount(a) - this.includedCount(b) || a.localeCompare(b),
      );
    if (eligible.length === 0) return { phase: "done" };
    return this.withClip("rate", eligible[0], judgeId);
  }

  private withClip(
    phase: Assignment["phase"],
    clipId: string,
    judgeId: string,
  ): Assignment {
    const token = `tok.${judgeId}.${clipId}`;
    return {
      phase,
      clip_id: clipId,
      clip_token: token,
      clip_url: `/clips/${token}`,
    };
  }

  async submitRating(
    studyId: string,
    body: { judge: string; clip_token: string; score: Score },
  ): Promise<RatingOutcome> {
    this.trip("submitRating", [studyId, body]);
    const judge = this.judge(body.judge);
    const parts = body.clip_token.split(".");
    const clipId = parts.slice(2).join(".");
    if (parts[0] !== "tok" || parts[1] !== body.judge) {
      throw new ApiError(404, "unknown clip token");
    }
    const book = this.def.training.includes(clipId)
      ? judge.trainingScores
      : judge.ratings;
    const prior = book.get(clipId);
    if (prior !== undefined) {
      if (prior === body.score) {
        return { status: "duplicate", rating_id: `r.${clipId}`, clip_id: clipId };
      }
      throw new ApiError(
        409,
        "clip already rated by this judge with a different score",
      );
    }
    book.set(clipId, body.score);
    if (book === judge.trainingScores) {
      judge.trainingDone.add(clipId);
      if (judge.trainingDone.size === this.def.training.length) {
        judge.phase = "trained";
      }
    }
    this.tripAfter("submitRating");
    return {
      status: "accepted",
      rating_id: `r.${clipId}`,
      clip_id: clipId,
      judge_phase: judge.phase,
      spam_status: judge.phase === "qualified" ? "ok" : null,
    };
  }

  async submitQualification(
    studyId: string,
    body: { judge: string; answers: AnswerItem[] },
  ): Promise<QualificationOutcome> {
    this.trip("submitQualification", [studyId, body]);
    const judge = this.judge(body.judge);
    const byId = new Map(body.answers.map((a) => [a.clip_id, a.score]));
    const quals = this.def.qualification;
    if (byId.size !== quals.length || quals.some((q) => !byId.has(q.clip_id))) {
      throw new ApiError(422, "answers must cover the qualification set");
    }
    const right = quals.filter((q) => byId.get(q.clip_id) === q.expected).length;
    const passed = right * 5 >= quals.length * 4;
    judge.qualAttempts += 1;
    if (passed) {
      judge.phase = "qualified";
    } else if (judge.qualAttempts >= 2) {
      judge.phase = "blocked";
    }
    return {
      pass: passed,
      score: right / quals.length,
      attempt: judge.qualAttempts,
      judge_phase: judge.phase,
    };
  }

  clipUrl(assignment: Assignment): string {
    return assignment.clip_url as string;
  }

  countCalls(method: string): number {
    return this.calls.filter((c) => c.method === method).length;
  }
}

export class FakePlayer implements ClipPlayer {
  url: string | null = null;
  playing = false;
  loads: string[] = [];
  plays = 0;
  private endedCbs: (() => void)[] = [];
  private startedCbs: (() => void)[] = [];
  private errorCbs: ((message: string) => void)[] = [];

  load(url: string): void {
    this.url = url;
    this.loads.push(url);
  }

  play(): void {
    this.plays += 1;
    this.playing = true;
    for (const cb of this.startedCbs) cb();
  }

  stop(): void {
    this.playing = false;
  }

  /** Test hook: pretend the clip reached its end. */
  finish(): void {
    this.playing = false;
    for (const cb of this.endedCbs) cb();
  }

  /** Test hook: pretend the clip failed to load. */
  failLoad(message: string): void {
    for (const cb of this.errorCbs) cb(message);
  }

  onEnded(cb: () => void): void {
    this.endedCbs.push(cb);
  }

  onStarted(cb: () => void): void {
    this.startedCbs.push(cb);
  }

  onError(cb: (message: string) => void): void {
    this.errorCbs.push(cb);
  }
}

export async function until(
  pred: () => boolean,
  label = "condition",
  timeoutMs = 5000,
): Promise<void> {
  const start = Date.now();
  while (!pred()) {
    if (Date.now() - start > timeoutMs) {
      throw new Error(`timed out waiting for ${label}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}

// -- session walkers shared by the suites -----------------------------------

/** Fake tokens embed the clip id, which lets tests answer traps correctly. */
export function currentClip(session: Session): string {
  const token = session.snapshot().clipToken;
  if (!token) throw new Error("no clip assigned");
  return token.split(".").slice(2).join(".");
}

export async function rateCurrent(session: Session, score: Score): Promise<void> {
  session.playbackCompleted();
  session.selectScore(score);
  await session.submit();
}

export async function completeTraining(session: Session): Promise<void> {
  while (session.snapshot().assignmentPhase === "training") {
    await rateCurrent(session, 3);
  }
}

/** One full qualification round; wrong inverts every expected answer. */
export async function qualificationRound(
  session: Session,
  key: Record<string, Score>,
  wrong = false,
): Promise<void> {
  const seen = new Set<string>();
  while (session.snapshot().assignmentPhase === "qualification") {
    const clip = currentClip(session);
    if (seen.has(clip)) throw new Error("qualification clip repeated in one round");
    seen.add(clip);
    const right = key[clip];
    await rateCurrent(session, wrong ? ((6 - right) as Score) : right);
    if (seen.size === Object.keys(key).length) break;
  }
}
