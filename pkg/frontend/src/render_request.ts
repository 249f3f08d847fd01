/**
 * Build the POST /render body from editor state. The bytes must equal the
 * server CLI's `request-body` output for the same trajectory, edits, and
 * options, so submission is reproducible from either side.
 */

import { canonicalJson, type JsonValue } from "./json_canonical.js";
import type { EditorState, TrajectoryDict } from "./state.js";

export const SCHEMA_VERSION = 1;

export function buildRenderRequest(
  trajectory: TrajectoryDict,
  edits: { object_id: string; boxes: number[][]; depth_track: number[] | null }[],
  options: { tau: number; splat_radius: number; depth_min: number; depth_max: number },
): string {
  const body: JsonValue = {
    schema_version: SCHEMA_VERSION,
    trajectory: {
      f: trajectory.f,
      width: trajectory.width,
      height: trajectory.height,
      frames: trajectory.frames.map((fr) => ({ R: fr.R, T: fr.T })),
    },
    // depth_track is omitted entirely when absent, matching the server
    edits: edits.map((e): JsonValue =>
      e.depth_track === null
        ? { object_id: e.object_id, boxes: e.boxes }
        : { object_id: e.object_id, boxes: e.boxes, depth_track: e.depth_track },
    ),
    options: { ...options },
  };
  return canonicalJson(body);
}

export function renderRequestFromState(state: EditorState): string {
  if (state.preview_trajectory === null) {
    throw new Error("no previewed trajectory; call /preview first");
  }
  return buildRenderRequest(state.preview_trajectory, state.tracks, state.options);
}
