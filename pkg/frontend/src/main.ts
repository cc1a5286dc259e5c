/** Browser bootstrap: resolve config from the page URL and mount the app. */

import { ApiClient, type JudgeApi } from "./api.js";
import { HtmlClipPlayer, type ClipPlayer } from "./player.js";
import { Session } from "./session.js";
import { View } from "./view.js";

export interface AppConfig {
  studyId: string | null;
  apiBase: string; // empty when the page is served by the service itself
}

export function configFromLocation(loc: { search: string }): AppConfig {
  const params = new URLSearchParams(loc.search);
  return { studyId: params.get("study"), apiBase: params.get("api") ?? "" };
}

/** Injection points for tests; production always uses the defaults. */
export interface MountDeps {
  api?: JudgeApi;
  player?: ClipPlayer;
}

export function mountApp(
  root: HTMLElement,
  config: AppConfig,
  storage?: Storage,
  deps: MountDeps = {},
): { session: Session; view: View } | null {
  if (!config.studyId) {
    root.innerHTML = `
      <section class="card" data-testid="screen-pick-study">
        <h1>Listening quality test</h1>
        <p>Enter the study code you were given to start.</p>
        <form method="get">
          <input name="study" data-testid="study-input"
            placeholder="study code" required>
          <button class="primary" type="submit">Open</button>
        </form>
      </section>`;
    return null;
  }
  const memoryKey = `rating-ui.judge.${config.studyId}`;
  const api = deps.api ?? new ApiClient(config.apiBase);
  const session = new Session(api, config.studyId);
  if (storage) {
    session.onChange(() => {
      const id = session.snapshot().judgeId;
      if (id) storage.setItem(memoryKey, id);
    });
  }
  const view = new View(root, session, deps.player ?? new HtmlClipPlayer(), {
    judgeId: storage?.getItem(memoryKey) ?? undefined,
  });
  view.render();
  return { session, view };
}

const rootEl =
  typeof document === "undefined" ? null : document.getElementById("app");
if (rootEl) {
  mountApp(rootEl, configFromLocation(window.location), window.localStorage);
}
