/** Pure HTML builders for the three screens.
 *
 * Stimulus identifiers never appear in the rendered markup: subjects see
 * only positional progress, so nothing in the DOM can distinguish hidden
 * references from test videos.
 */

import { ANCHORS } from "./slider.js";

export function playbackScreen(mediaUrl: string): string {
  return `
    <div class="screen playback">
      <video id="player" src="${mediaUrl}" autoplay playsinline
             disablepictureinpicture controlslist="nodownload noplaybackrate"></video>
    </div>`;
}

export function votingScreen(done: number, total: number, training: boolean): string {
  const anchors = ANCHORS.map((a) => `<span class="anchor">${a}</span>`).join("");
  const label = training ? "Training" : `Video ${done + 1} of ${total}`;
  return `
    <div class="screen voting">
      <p class="progress">${label}</p>
      <p class="prompt">Rate the overall quality of the video you just watched.</p>
      <div class="anchors">${anchors}</div>
      <input id="quality-slider" type="range" min="0" max="1000" value="500" />
      <button id="submit-vote">Submit rating</button>
    </div>`;
}

export function completionScreen(session: number): string {
  return `
    <div class="screen done">
      <h1>Session ${session} complete</h1>
      <p>Thank you. Please let the operator know you have finished.</p>
    </div>`;
}
