/**
 * Judge session state machine.
 *
 * Mirrors the server's view of the judge and only moves phase on a server
 * response: every transition is the result of a registration, a rating
 * acknowledgement, a qualification outcome, or a fresh assignment. Local
 * state covers only what the server cannot know: whether the current clip
 * has been played to completion and which score is selected.
 *
 * Qualification clips arrive one at a time and the server recycles the
 * set once it is exhausted, so the full answer set is detected by the
 * first repeated clip and submitted in one request.
 */

import {
  ApiError,
  NetworkError,
  type Assignment,
  type AssignmentPhase,
  type JudgeApi,
  type JudgePhase,
  type Score,
} from "./api.js";

export type ScreenKind = "start" | "clip" | "done" | "blocked";
export type RetryTarget = "none" | "clip" | "assignment";

export interface SessionSnapshot {
  screen: ScreenKind;
  judgeId: string | null;
  judgePhase: JudgePhase | null;
  assignmentPhase: AssignmentPhase | null;
  clipToken: string | null;
  clipUrl: string | null;
  clipsCompleted: number;
  instructionsAcked: boolean;
  playedThrough: boolean;
  selectedScore: Score | null;
  submitPending: boolean;
  busy: boolean;
  canSubmit: boolean;
  notice: string | null;
  retry: RetryTarget;
}

const OFFLINE_NOTICE =
  "Could not reach the server. Nothing was lost, try again.";
const QUAL_RETRY_NOTICE =
  "That listening check did not pass. You have one more try.";

export class Session {
  private screen: ScreenKind = "start";
  private judgeId: string | null = null;
  private judgePhase: JudgePhase | null = null;
  private assignmentPhase: AssignmentPhase | null = null;
  private clipId: string | null = null; // kept off the snapshot: judges never see ids
  private clipToken: string | null = null;
  private clipUrl: string | null = null;
  private clipsCompleted = 0;
  private instructionsAcked = false;
  private playedThrough = false;
  private selectedScore: Score | null = null;
  private submitPending = false;
  private busy = false;
  private notice: string | null = null;
  private retry: RetryTarget = "none";

  private qualAnswers = new Map<string, Score>();
  private preferredJudgeId: string | undefined;
  private listeners: (() => void)[] = [];

  constructor(
    private api: JudgeApi,
    private studyId: string,
  ) {}

  onChange(cb: () => void): void {
    this.listeners.push(cb);
  }

  private emit(): void {
    for (const cb of this.listeners) cb();
  }

  snapshot(): SessionSnapshot {
    return {
      screen: this.screen,
      judgeId: this.judgeId,
      judgePhase: this.judgePhase,
      assignmentPhase: this.assignmentPhase,
      clipToken: this.clipToken,
      clipUrl: this.clipUrl,
      clipsCompleted: this.clipsCompleted,
      instructionsAcked: this.instructionsAcked,
      playedThrough: this.playedThrough,
      selectedScore: this.selectedScore,
      submitPending: this.submitPending,
      busy: this.busy,
      canSubmit: this.canSubmit(),
      notice: this.notice,
      retry: this.retry,
    };
  }

  private canSubmit(): boolean {
    return (
      this.screen === "clip" &&
      this.playedThrough &&
      this.selectedScore !== null &&
      !this.submitPending &&
      !this.busy
    );
  }

  ackInstructions(): void {
    this.instructionsAcked = true;
    this.emit();
  }

  /** Register (or re-claim a remembered id) and fetch the first assignment. */
  async begin(preferredJudgeId?: string): Promise<void> {
    if (this.busy || this.judgeId !== null) return;
    this.preferredJudgeId = preferredJudgeId;
    this.instructionsAcked = true;
    this.busy = true;
    this.notice = null;
    this.emit();
    try {
      this.judgeId = await this.api.registerJudge(preferredJudgeId);
      await this.fetchAndAdopt();
    } catch (err) {
      this.failSoft(err, "assignment");
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  /** Player callback: the current clip finished playing at least once. */
  playbackCompleted(): void {
    if (this.screen !== "clip") return;
    this.playedThrough = true;
    if (this.retry === "clip") {
      this.retry = "none";
      this.notice = null;
    }
    this.emit();
  }

  clipLoadFailed(message: string): void {
    if (this.screen !== "clip") return;
    this.notice = message;
    this.retry = "clip";
    this.emit();
  }

  clipRetried(): void {
    if (this.retry === "clip") {
      this.retry = "none";
      this.notice = null;
      this.emit();
    }
  }

  selectScore(score: Score): void {
    if (this.screen !== "clip" || this.submitPending) return;
    this.selectedScore = score;
    this.emit();
  }

  /**
   * Submit the selected score for the current clip and advance.
   *
   * Re-entrant calls while a submission is pending are dropped, so a
   * double-click produces one request. A transport failure keeps the
   * same clip token armed; pressing Submit again repeats the identical
   * request and the server deduplicates it.
   */
  async submit(): Promise<void> {
    if (!this.canSubmit()) return;
    const score = this.selectedScore as Score;
    this.submitPending = true;
    this.notice = null;
    this.emit();
    try {
      if (this.assignmentPhase === "qualification") {
        // a resubmission after a lost reply only overwrites the buffer
        const firstAnswer = !this.qualAnswers.has(this.clipId as string);
        this.qualAnswers.set(this.clipId as string, score);
        if (firstAnswer) this.clipsCompleted += 1;
        await this.fetchAndAdopt();
      } else {
        const outcome = await this.api.submitRating(this.studyId, {
          judge: this.judgeId as string,
          clip_token: this.clipToken as string,
          score,
        });
        if (outcome.judge_phase) this.judgePhase = outcome.judge_phase;
        this.clipsCompleted += 1;
        await this.fetchAndAdopt();
      }
    } catch (err) {
      if (err instanceof NetworkError && this.clipToken !== null) {
        // same token and score stay armed; resubmission is idempotent
        this.notice = OFFLINE_NOTICE;
        this.retry = "none";
      } else {
        this.failSoft(err, "assignment");
      }
    } finally {
      this.submitPending = false;
      this.emit();
    }
  }

  /** Re-fetch the current assignment after a transport failure. */
  async resume(): Promise<void> {
    if (this.busy || this.submitPending) return;
    if (this.judgeId === null) {
      return this.begin(this.preferredJudgeId);
    }
    this.busy = true;
    this.notice = null;
    this.emit();
    try {
      await this.fetchAndAdopt();
    } catch (err) {
      this.failSoft(err, "assignment");
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  // -- internals -----------------------------------------------------------

  private failSoft(err: unknown, retry: RetryTarget): void {
    if (err instanceof ApiError) {
      this.notice = err.detail;
    } else if (err instanceof NetworkError) {
      this.notice = OFFLINE_NOTICE;
    } else {
      throw err;
    }
    this.retry = retry;
  }

  /**
   * Pull the next assignment and adopt it. When the server hands back a
   * qualification clip that was already answered, the set has wrapped:
   * post the buffered answers, then fetch what comes after the verdict.
   */
  private async fetchAndAdopt(noticeAfter: string | null = null): Promise<void> {
    const assignment = await this.api.nextAssignment(
      this.studyId,
      this.judgeId as string,
    );
    if (
      assignment.phase === "qualification" &&
      assignment.clip_id !== undefined &&
      this.qualAnswers.has(assignment.clip_id)
    ) {
      let outcome;
      try {
        outcome = await this.api.submitQualification(this.studyId, {
          judge: this.judgeId as string,
          answers: [...this.qualAnswers].map(([clip_id, score]) => ({
            clip_id,
            score,
          })),
        });
      } catch (err) {
        if (err instanceof ApiError && err.status === 422) {
          // a lost response left the answer set short; keep collecting,
          // the repeated clip is simply answered again below
          outcome = null;
        } else {
          throw err;
        }
      }
      if (outcome !== null) {
        this.judgePhase = outcome.judge_phase;
        this.qualAnswers.clear();
        const after =
          outcome.pass || outcome.judge_phase === "blocked"
            ? null
            : QUAL_RETRY_NOTICE;
        return this.fetchAndAdopt(after);
      }
    }
    this.adopt(assignment, noticeAfter);
  }

  private adopt(assignment: Assignment, noticeAfter: string | null): void {
    this.assignmentPhase = assignment.phase;
    this.notice = noticeAfter;
    this.retry = "none";
    this.playedThrough = false;
    this.selectedScore = null;
    switch (assignment.phase) {
      case "blocked":
        this.screen = "blocked";
        this.judgePhase = "blocked";
        this.clearClip();
        break;
      case "done":
        this.screen = "done";
        this.clearClip();
        break;
      case "training":
        this.judgePhase = "new";
        this.adoptClip(assignment);
        break;
      case "qualification":
        this.judgePhase = "trained";
        this.adoptClip(assignment);
        break;
      case "rate":
        this.judgePhase = "qualified";
        this.adoptClip(assignment);
        break;
    }
    this.emit();
  }

  private adoptClip(assignment: Assignment): void {
    this.screen = "clip";
    this.clipId = assignment.clip_id ?? null;
    this.clipToken = assignment.clip_token ?? null;
    this.clipUrl = assignment.clip_url ? this.api.clipUrl(assignment) : null;
  }

  private clearClip(): void {
    this.clipId = null;
    this.clipToken = null;
    this.clipUrl = null;
  }
}
