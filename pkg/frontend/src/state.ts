/**
 * Editor state for the scenario studio: the loaded scene manifest, the
 * waypoint list, the active edit tracks, and playback bookkeeping.
 *
 * The UI performs no geometry: per-frame poses come from POST /preview and
 * are stored verbatim. Submitted jobs are never mutated; a new submission
 * creates a new job record.
 */

import type { JsonValue } from "./json_canonical.js";

export const STATE_SCHEMA_VERSION = 1;

export interface Waypoint {
  frame: number;
  R: number[]; // row-major 3x3
  T: number[]; // length 3
}

export interface BoxTrack {
  object_id: string;
  /** one [x0, y0, x1, y1] pixel box per frame, integer-snapped */
  boxes: number[][];
  depth_track: number[] | null;
}

export interface TrajectoryDict {
  f: number;
  width: number;
  height: number;
  frames: { R: number[]; T: number[] }[];
}

export interface SceneManifest {
  width: number;
  height: number;
  n_frames: number;
  preview_uri: string;
  [key: string]: JsonValue;
}

export interface RenderOptionsState {
  tau: number;
  splat_radius: number;
  depth_min: number;
  depth_max: number;
}

export interface EditorState {
  schema_version: number;
  scene: SceneManifest | null;
  waypoints: Waypoint[];
  tracks: BoxTrack[];
  options: RenderOptionsState;
  /** interpolated poses from the last successful /preview, or null */
  preview_trajectory: TrajectoryDict | null;
  last_job_id: string | null;
  playback_cursor: number;
}

export const DEFAULT_OPTIONS: RenderOptionsState = {
  tau: 0.65,
  splat_radius: 0,
  depth_min: 0.1,
  depth_max: 100.0,
};

export function emptyState(): EditorState {
  return {
    schema_version: STATE_SCHEMA_VERSION,
    scene: null,
    waypoints: [],
    tracks: [],
    options: { ...DEFAULT_OPTIONS },
    preview_trajectory: null,
    last_job_id: null,
    playback_cursor: 0,
  };
}

export class ValidationError extends Error {}

/** Insert a waypoint keeping frame indices strictly increasing. */
export function addWaypoint(state: EditorState, wp: Waypoint): EditorState {
  if (!Number.isInteger(wp.frame) || wp.frame < 0) {
    throw new ValidationError(`waypoint frame must be a non-negative integer, got ${wp.frame}`);
  }
  if (wp.R.length !== 9 || wp.T.length !== 3) {
    throw new ValidationError("waypoint pose must have 9 rotation and 3 translation entries");
  }
  if (state.waypoints.some((w) => w.frame === wp.frame)) {
    throw new ValidationError(`a waypoint at frame ${wp.frame} already exists`);
  }
  const waypoints = [...state.waypoints, wp].sort((a, b) => a.frame - b.frame);
  // edits invalidate the previewed trajectory until the next /preview call
  return { ...state, waypoints, preview_trajectory: null };
}

export function removeWaypoint(state: EditorState, frame: number): EditorState {
  const waypoints = state.waypoints.filter((w) => w.frame !== frame);
  if (waypoints.length === state.waypoints.length) {
    throw new ValidationError(`no waypoint at frame ${frame}`);
  }
  return { ...state, waypoints, preview_trajectory: null };
}

/** Drag handler: boxes snap to integer pixels and must not be inverted. */
export function setBox(
  state: EditorState,
  objectId: string,
  frame: number,
  box: [number, number, number, number],
): EditorState {
  const snapped = box.map(Math.round) as [number, number, number, number];
  const [x0, y0, x1, y1] = snapped;
  if (x1 <= x0 || y1 <= y0) {
    throw new ValidationError(`inverted box [${snapped.join(", ")}] at frame ${frame}`);
  }
  const tracks = state.tracks.map((t) => {
    if (t.object_id !== objectId) return t;
    if (frame < 0 || frame >= t.boxes.length) {
      throw new ValidationError(`frame ${frame} outside track of length ${t.boxes.length}`);
    }
    const boxes = t.boxes.map((b, i) => (i === frame ? snapped.slice() : b));
    return { ...t, boxes };
  });
  if (!tracks.some((t) => t.object_id === objectId)) {
    throw new ValidationError(`unknown object_id ${objectId}`);
  }
  return { ...state, tracks };
}

/** Submission precondition; returns a user-facing message or null if ok. */
export function submitBlocker(state: EditorState): string | null {
  if (state.scene === null) return "load a scene first";
  if (state.waypoints.length === 0) return "add at least one waypoint";
  if (state.preview_trajectory === null) {
    return "preview the trajectory before submitting";
  }
  return null;
}

/** Export for persistence; importState(exportState(s)) round-trips. */
export function exportState(state: EditorState): string {
  return JSON.stringify(state, null, 2);
}

export function importState(text: string): EditorState {
  const raw = JSON.parse(text) as EditorState;
  if (raw.schema_version !== STATE_SCHEMA_VERSION) {
    throw new ValidationError(`unsupported state schema_version ${raw.schema_version}`);
  }
  for (let i = 1; i < raw.waypoints.length; i++) {
    if (raw.waypoints[i]!.frame <= raw.waypoints[i - 1]!.frame) {
      throw new ValidationError("waypoint frame indices must be strictly increasing");
    }
  }
  for (const t of raw.tracks) {
    for (const b of t.boxes) {
      const [x0, y0, x1, y1] = b as [number, number, number, number];
      if (x1 <= x0 || y1 <= y0) {
        throw new ValidationError(`inverted box in track ${t.object_id}`);
      }
    }
  }
  return raw;
}
