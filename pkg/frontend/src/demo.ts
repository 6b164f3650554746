// Browser entry point: ?job=<alignment-job-id>&base=<service-url>

import { ServiceClient } from "./api.js";
import { Editor } from "./editor.js";
import { mount } from "./dom.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("base") ?? "";
const jobId = params.get("job");

const container = document.getElementById("editor");
if (container === null) {
  throw new Error("missing #editor container");
}
if (jobId === null) {
  container.textContent = "pass ?job=<alignment job id> in the URL";
} else {
  const client = new ServiceClient({ baseUrl: base });
  Editor.load(client, jobId).then((editor) => {
    mount(editor, container);
    editor.onChange((state) => {
      if (state.playing !== null) {
        // playback is fire-and-forget; the audio element is optional chrome
        const audio = document.getElementById("audio") as HTMLAudioElement | null;
        if (audio !== null) {
          audio.currentTime = state.playing.t0;
          void audio.play();
          const stopAt = state.playing.t1;
          const onTime = () => {
            if (audio.currentTime >= stopAt) {
              audio.pause();
              audio.removeEventListener("timeupdate", onTime);
            }
          };
          audio.addEventListener("timeupdate", onTime);
        }
        editor.playbackDone();
      }
    });
  });
}
