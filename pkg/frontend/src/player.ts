/** Audio playback behind a small interface so tests can stand in for it. */

export interface ClipPlayer {
  /** Point the player at a clip URL. Does not start playback. */
  load(url: string): void;
  /** Start playback from the beginning. */
  play(): void;
  stop(): void;
  readonly playing: boolean;
  /** Fires every time the current clip plays through to its end. */
  onEnded(cb: () => void): void;
  onStarted(cb: () => void): void;
  /** Fires when the clip cannot be fetched or decoded. */
  onError(cb: (message: string) => void): void;
}

export class HtmlClipPlayer implements ClipPlayer {
  private audio: HTMLAudioElement;
  private endedCbs: (() => void)[] = [];
  private startedCbs: (() => void)[] = [];
  private errorCbs: ((message: string) => void)[] = [];

  constructor() {
    // never attached to the document: playback needs no visible element
    this.audio = document.createElement("audio");
    this.audio.preload = "auto";
    this.audio.addEventListener("ended", () => {
      for (const cb of this.endedCbs) cb();
    });
    this.audio.addEventListener("play", () => {
      for (const cb of this.startedCbs) cb();
    });
    this.audio.addEventListener("error", () => {
      this.fail("the audio clip could not be loaded");
    });
  }

  private fail(message: string): void {
    for (const cb of this.errorCbs) cb(message);
  }

  load(url: string): void {
    this.audio.src = url;
    this.audio.load();
  }

  play(): void {
    this.audio.currentTime = 0;
    const p = this.audio.play();
    if (p && typeof p.catch === "function") {
      p.catch((err) => this.fail(err instanceof Error ? err.message : String(err)));
    }
  }

  stop(): void {
    this.audio.pause();
    this.audio.currentTime = 0;
  }

  get playing(): boolean {
    return !this.audio.paused && !this.audio.ended;
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
