/**
 * DOM rendering for the judge session. One render function per screen,
 * rebuilt wholesale on every state change; the audio element lives inside
 * the player, detached from the document, so re-rendering never interrupts
 * playback.
 *
 * Training, qualification and rating all share the same clip screen. The
 * only thing that varies between phases is the progress line; nothing
 * about a clip (id, condition, noise type) is ever rendered.
 */

import type { Score } from "./api.js";
import type { ClipPlayer } from "./player.js";
import type { Session, SessionSnapshot } from "./session.js";

export const STAR_LABELS: Record<Score, string> = {
  1: "Bad",
  2: "Poor",
  3: "Fair",
  4: "Good",
  5: "Excellent",
};

const PHASE_LABELS: Record<string, string> = {
  training: "Practice round",
  qualification: "Listening check",
  rate: "Rating",
};

export const VOLUME_NOTE =
  "Set your volume to a comfortable level now and keep it fixed for the " +
  "entire session.";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface ViewOptions {
  /** Remembered judge id to re-claim on Begin, if any. */
  judgeId?: string;
}

export class View {
  private lastLoadedUrl: string | null = null;

  constructor(
    private root: HTMLElement,
    private session: Session,
    private player: ClipPlayer,
    private opts: ViewOptions = {},
  ) {
    session.onChange(() => this.render());
    player.onEnded(() => session.playbackCompleted());
    player.onError((message) => session.clipLoadFailed(message));
    player.onStarted(() => this.render());
  }

  render(): void {
    const s = this.session.snapshot();
    if (s.clipUrl && s.clipUrl !== this.lastLoadedUrl) {
      this.player.load(s.clipUrl);
      this.lastLoadedUrl = s.clipUrl;
    }
    switch (s.screen) {
      case "start":
        this.root.innerHTML = this.startScreen(s);
        break;
      case "clip":
        this.root.innerHTML = this.clipScreen(s);
        break;
      case "done":
        this.root.innerHTML = this.doneScreen(s);
        break;
      case "blocked":
        this.root.innerHTML = this.blockedScreen();
        break;
    }
    this.wire(s);
  }

  private startScreen(s: SessionSnapshot): string {
    return `
      <section class="card" data-testid="screen-start">
        <h1>Listening quality test</h1>
        <p>You will hear short audio clips, one at a time. After each clip,
        rate the overall quality of what you heard on a five point scale.</p>
        <ul class="instructions">
          <li>Use headphones in a quiet room if you can.</li>
          <li data-testid="volume-instruction">${esc(VOLUME_NOTE)}</li>
          <li>Listen to each clip all the way through before rating it.
          The next clip starts after you press Submit.</li>
          <li>There are no right or wrong answers once the test begins;
          rate the quality as you perceive it.</li>
        </ul>
        ${s.notice ? this.noticeBlock(s) : ""}
        <button class="primary" data-testid="begin-button"
          ${s.busy ? "disabled" : ""}>Begin</button>
      </section>`;
  }

  private clipScreen(s: SessionSnapshot): string {
    const phaseLabel = PHASE_LABELS[s.assignmentPhase ?? ""] ?? "Rating";
    const playLabel = this.player.playing
      ? "Playing"
      : s.playedThrough
        ? "Play again"
        : "Play clip";
    const stars = ([1, 2, 3, 4, 5] as Score[])
      .map(
        (n) => `
        <button class="star" data-testid="star-${n}" data-score="${n}"
          aria-pressed="${s.selectedScore === n}">
          <span class="glyph">${"★".repeat(n)}</span>
          <span class="label">${STAR_LABELS[n]}</span>
        </button>`,
      )
      .join("");
    return `
      <section class="card" data-testid="screen-clip">
        <p class="banner" data-testid="banner">${esc(VOLUME_NOTE)}</p>
        <p class="progress" data-testid="progress">
          ${esc(phaseLabel)} &middot; clip ${s.clipsCompleted + 1}</p>
        <div class="player">
          <button class="primary" data-testid="play-button"
            ${this.player.playing || !s.clipUrl ? "disabled" : ""}>
            ${playLabel}</button>
        </div>
        <p class="prompt">How would you rate the quality of this clip?</p>
        <div class="stars" data-testid="stars" role="group">${stars}</div>
        ${s.notice ? this.noticeBlock(s) : ""}
        <button class="primary submit" data-testid="submit-button"
          ${s.canSubmit ? "" : "disabled"}>
          ${s.submitPending ? "Sending" : "Submit"}</button>
      </section>`;
  }

  private doneScreen(s: SessionSnapshot): string {
    return `
      <section class="card" data-testid="screen-done">
        <h1>All done</h1>
        <p>You rated ${s.clipsCompleted} clips. Thank you for listening.</p>
      </section>`;
  }

  private blockedScreen(): string {
    return `
      <section class="card" data-testid="screen-blocked">
        <h1>Session ended</h1>
        <p>This listening session has ended and no further clips will be
        offered. Thank you for your time.</p>
      </section>`;
  }

  private noticeBlock(s: SessionSnapshot): string {
    const retry =
      s.retry === "none"
        ? ""
        : `<button data-testid="retry-button">Try again</button>`;
    return `<p class="notice" data-testid="notice">${esc(s.notice ?? "")}
      ${retry}</p>`;
  }

  private wire(s: SessionSnapshot): void {
    this.on("begin-button", () => {
      void this.session.begin(this.opts.judgeId);
    });
    this.on("play-button", () => {
      this.player.play();
      this.render();
    });
    for (const n of [1, 2, 3, 4, 5] as Score[]) {
      this.on(`star-${n}`, () => this.session.selectScore(n));
    }
    this.on("submit-button", () => {
      void this.session.submit();
    });
    this.on("retry-button", () => {
      if (s.retry === "clip" && s.clipUrl) {
        this.player.load(s.clipUrl);
        this.session.clipRetried();
      } else {
        void this.session.resume();
      }
    });
  }

  private on(testId: string, handler: () => void): void {
    const el = this.root.querySelector(`[data-testid="${testId}"]`);
    if (el) el.addEventListener("click", handler);
  }
}
