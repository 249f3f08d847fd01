/**
 * Minimal DOM wiring for the scenario studio. All logic lives in the
 * imported modules; this file only binds them to elements in index.html.
 */

import { ApiClient, ApiError, type JobStatus } from "./api.js";
import { renderRequestFromState } from "./render_request.js";
import { diffPixels } from "./pixel_diff.js";
import {
  addWaypoint,
  emptyState,
  exportState,
  importState,
  setBox,
  submitBlocker,
  type EditorState,
} from "./state.js";

const PLAYBACK_FPS = 8;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startApp(baseUrl: string): void {
  const api = new ApiClient(baseUrl);
  let state: EditorState = emptyState();
  let lastFrames: ImageData[] = [];
  let prevFrames: ImageData[] = [];
  let playTimer: number | null = null;

  const status = el<HTMLDivElement>("status");
  const canvas = el<HTMLCanvasElement>("viewport");
  const ctx = canvas.getContext("2d")!;
  const scrubber = el<HTMLInputElement>("scrubber");
  const submitBtn = el<HTMLButtonElement>("submit");
  const diffOut = el<HTMLDivElement>("diff");

  function setStatus(text: string, isError = false): void {
    status.textContent = text;
    status.className = isError ? "error" : "";
  }

  function refreshSubmit(): void {
    const blocker = submitBlocker(state);
    submitBtn.disabled = blocker !== null;
    submitBtn.title = blocker ?? "submit render job";
  }

  function drawFrame(t: number): void {
    const frame = lastFrames[t];
    if (frame) ctx.putImageData(frame, 0, 0);
    scrubber.value = String(t);
    state = { ...state, playback_cursor: t };
  }

  async function loadScene(): Promise<void> {
    state = { ...state, scene: await api.getScene() };
    canvas.width = state.scene!.width;
    canvas.height = state.scene!.height;
    const img = new Image();
    img.src = `${baseUrl}${state.scene!.preview_uri}`;
    img.onload = () => ctx.drawImage(img, 0, 0);
    setStatus(`scene loaded: ${state.scene!.width}x${state.scene!.height}`);
    refreshSubmit();
  }

  async function refreshPreview(): Promise<void> {
    if (state.waypoints.length === 0 || !state.scene) return;
    const preview = await api.preview(state.waypoints, state.scene.n_frames);
    state = { ...state, preview_trajectory: preview.trajectory };
    ctx.strokeStyle = "#0f0";
    ctx.beginPath();
    for (const px of preview.path_pixels) {
      if (px) ctx.lineTo(px[0], px[1]);
    }
    ctx.stroke();
    refreshSubmit();
  }

  async function pngToImageData(bytes: Uint8Array): Promise<ImageData> {
    const bitmap = await createImageBitmap(
      new Blob([bytes.slice().buffer], { type: "image/png" }),
    );
    const off = document.createElement("canvas");
    off.width = bitmap.width;
    off.height = bitmap.height;
    const octx = off.getContext("2d")!;
    octx.drawImage(bitmap, 0, 0);
    return octx.getImageData(0, 0, bitmap.width, bitmap.height);
  }

  async function submit(): Promise<void> {
    try {
      const body = renderRequestFromState(state);
      const jobId = await api.submitRender(body);
      state = { ...state, last_job_id: jobId };
      setStatus(`job ${jobId} submitted...`);
      const done: JobStatus = await api.waitForJob(jobId);
      prevFrames = lastFrames;
      lastFrames = [];
      for (let t = 0; t < (done.frames?.length ?? 0); t++) {
        lastFrames.push(await pngToImageData(await api.fetchFramePng(jobId, t)));
        drawFrame(t);
      }
      scrubber.max = String(lastFrames.length - 1);
      setStatus(`job ${jobId} done: ${lastFrames.length} frames`);
      showDiff();
    } catch (err) {
      if (err instanceof ApiError) {
        // surface 400/404/409 bodies verbatim; keep editor state
        setStatus(err.body, true);
      } else {
        setStatus(`server unreachable, state preserved — retry: ${err}`, true);
      }
    }
  }

  function showDiff(): void {
    if (prevFrames.length !== lastFrames.length || lastFrames.length === 0) {
      diffOut.textContent = "";
      return;
    }
    let changed = 0;
    for (let t = 0; t < lastFrames.length; t++) {
      const a = prevFrames[t]!;
      const b = lastFrames[t]!;
      changed += diffPixels(a.data, b.data, a.width, a.height).changed;
    }
    diffOut.textContent = `diff vs previous job: ${changed} changed pixels`;
  }

  function togglePlayback(): void {
    if (playTimer !== null) {
      window.clearInterval(playTimer);
      playTimer = null;
      return;
    }
    playTimer = window.setInterval(() => {
      if (lastFrames.length > 0) {
        drawFrame((state.playback_cursor + 1) % lastFrames.length);
      }
    }, 1000 / PLAYBACK_FPS);
  }

  el<HTMLButtonElement>("load-scene").onclick = () => void loadScene();
  el<HTMLButtonElement>("add-waypoint").onclick = () => {
    try {
      const frame = Number(el<HTMLInputElement>("wp-frame").value);
      const T = el<HTMLInputElement>("wp-t").value.split(",").map(Number);
      state = addWaypoint(state, { frame, R: [1, 0, 0, 0, 1, 0, 0, 0, 1], T });
      void refreshPreview();
    } catch (err) {
      setStatus(String(err), true);
    }
  };
  submitBtn.onclick = () => void submit();
  el<HTMLButtonElement>("play").onclick = togglePlayback;
  scrubber.oninput = () => drawFrame(Number(scrubber.value));
  el<HTMLButtonElement>("export").onclick = () => {
    el<HTMLTextAreaElement>("state-json").value = exportState(state);
  };
  el<HTMLButtonElement>("import").onclick = () => {
    try {
      state = importState(el<HTMLTextAreaElement>("state-json").value);
      refreshSubmit();
      setStatus("state imported");
    } catch (err) {
      setStatus(String(err), true);
    }
  };

  canvas.addEventListener("pointerdown", (down) => {
    if (state.tracks.length === 0) return;
    const track = state.tracks[0]!;
    const start = [down.offsetX, down.offsetY];
    const onUp = (up: PointerEvent) => {
      canvas.removeEventListener("pointerup", onUp);
      try {
        state = setBox(state, track.object_id, state.playback_cursor, [
          Math.min(start[0]!, up.offsetX),
          Math.min(start[1]!, up.offsetY),
          Math.max(start[0]!, up.offsetX),
          Math.max(start[1]!, up.offsetY),
        ]);
        setStatus(`box updated for ${track.object_id} frame ${state.playback_cursor}`);
      } catch (err) {
        setStatus(String(err), true);
      }
    };
    canvas.addEventListener("pointerup", onUp);
  });

  refreshSubmit();
}
