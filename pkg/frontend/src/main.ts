/** DOM wiring: reads ?participant=&session= from the URL, drives the
 * session runner, and swaps the three screens in and out. */

import { ApiClient, PlaylistItem } from "./api.js";
import { SessionRunner } from "./session.js";
import { completionScreen, playbackScreen, votingScreen } from "./render.js";

const SLIDER_STEPS = 1000;

async function loadTraining(client: ApiClient): Promise<PlaylistItem[]> {
  try {
    const res = await fetch("/training.json");
    if (!res.ok) return [];
    return (await res.json()) as PlaylistItem[];
  } catch {
    return [];
  }
}

function mount(html: string): HTMLElement {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  root.innerHTML = html;
  return root;
}

function showPlayback(runner: SessionRunner, onEnded: () => void): void {
  const item = runner.current();
  if (!item) return;
  const root = mount(playbackScreen(item.media_path ?? ""));
  const video = root.querySelector<HTMLVideoElement>("#player");
  if (!video) return;
  video.addEventListener("ended", onEnded, { once: true });
  video.addEventListener("error", () => {
    // playback failure: alert the operator; the item stays pending
    const note = document.createElement("p");
    note.className = "operator-alert";
    note.textContent = "Playback failed. Please call the operator.";
    root.appendChild(note);
  });
}

function showVoting(runner: SessionRunner): void {
  const { done, total } = runner.progress();
  const root = mount(votingScreen(done, total, runner.inTraining));
  const slider = root.querySelector<HTMLInputElement>("#quality-slider");
  const button = root.querySelector<HTMLButtonElement>("#submit-vote");
  if (!slider || !button) return;
  button.addEventListener("click", async () => {
    button.disabled = true; // a second click must never produce a second vote
    const position = Number(slider.value) / SLIDER_STEPS;
    try {
      await runner.submit(position);
    } catch (err) {
      button.disabled = false;
      throw err;
    }
    step(runner);
  });
}

function step(runner: SessionRunner): void {
  if (runner.phase === "done") {
    mount(completionScreen(runner.session));
    return;
  }
  showPlayback(runner, () => {
    runner.playbackEnded();
    showVoting(runner);
  });
}

export async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const participant = Number(params.get("participant") ?? "0");
  const session = Number(params.get("session") ?? "1");
  if (!participant) {
    mount('<div class="screen"><p>Missing ?participant=N in the URL.</p></div>');
    return;
  }
  const client = new ApiClient();
  const training = await loadTraining(client);
  const runner = new SessionRunner(client, participant, session, training);
  await runner.start();
  step(runner);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
