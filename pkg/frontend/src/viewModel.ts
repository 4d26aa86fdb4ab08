// Pure view state: everything rendered comes from received messages, nothing
// is invented client-side. Malformed or version-mismatched input never
// partially updates the model; the previous frame is retained and a banner
// explains why.

import {
  DecisionRequestPayload,
  DirectionInfo,
  EpisodeDonePayload,
  PROTOCOL_VERSION,
  SessionMessage,
  StatePayload,
  VerifyRequestPayload,
} from "./protocol.js";

export interface ViewModel {
  state: StatePayload | null;
  pendingDecision: DecisionRequestPayload | null;
  pendingVerify: VerifyRequestPayload | null;
  done: EpisodeDonePayload | null;
  banner: string | null;
  toast: string | null;
  lastSeq: number;
  receivedRequestIds: number[];
}

export function emptyViewModel(): ViewModel {
  return {
    state: null,
    pendingDecision: null,
    pendingVerify: null,
    done: null,
    banner: null,
    toast: null,
    lastSeq: 0,
    receivedRequestIds: [],
  };
}

function isStatePayload(p: unknown): p is StatePayload {
  if (typeof p !== "object" || p === null) return false;
  const s = p as Partial<StatePayload>;
  return (
    Array.isArray(s.map_rows) &&
    s.map_rows.every((r) => typeof r === "string") &&
    Array.isArray(s.position) &&
    s.position.length === 2 &&
    typeof s.heading === "number" &&
    typeof s.steps === "number" &&
    Array.isArray(s.directions)
  );
}

function isDecisionRequest(p: unknown): p is DecisionRequestPayload {
  if (typeof p !== "object" || p === null) return false;
  const d = p as Partial<DecisionRequestPayload>;
  return (
    typeof d.request_id === "number" &&
    Array.isArray(d.options) &&
    d.options.length > 0 &&
    d.options.every((o) => typeof o?.id === "number" && typeof o?.bearing === "number")
  );
}

/** Fold one session message into the view model (returns a new model). */
export function applyMessage(vm: ViewModel, msg: SessionMessage): ViewModel {
  const next: ViewModel = { ...vm, toast: null };
  if (!msg || typeof msg.kind !== "string" || typeof msg.seq !== "number") {
    return { ...vm, banner: "malformed message dropped; showing last good frame" };
  }
  next.lastSeq = msg.seq;
  switch (msg.kind) {
    case "STATE_SNAPSHOT": {
      const p = msg.payload;
      if (!isStatePayload(p)) {
        return { ...vm, banner: "malformed snapshot dropped; showing last good frame" };
      }
      if (p.protocol_version !== PROTOCOL_VERSION) {
        return {
          ...vm,
          banner: `protocol version ${p.protocol_version} does not match console version ${PROTOCOL_VERSION}`,
        };
      }
      next.state = p;
      next.banner = null;
      // The bridge only acts after a pending request resolves, so a fresh
      // snapshot means any still-displayed card timed out server-side.
      next.pendingDecision = null;
      next.pendingVerify = null;
      return next;
    }
    case "DECISION_REQUEST": {
      if (!isDecisionRequest(msg.payload)) {
        return { ...vm, banner: "malformed decision request dropped" };
      }
      const req = msg.payload as DecisionRequestPayload;
      next.pendingDecision = req;
      next.receivedRequestIds = [...vm.receivedRequestIds, req.request_id];
      return next;
    }
    case "VERIFY_REQUEST":
      next.pendingVerify = msg.payload as unknown as VerifyRequestPayload;
      return next;
    case "EPISODE_DONE":
      next.done = msg.payload as unknown as EpisodeDonePayload;
      next.pendingDecision = null;
      next.pendingVerify = null;
      return next;
    case "ERROR":
      next.toast = String((msg.payload as { message?: string }).message ?? "error");
      return next;
    default:
      return { ...vm, banner: `unknown message kind ${msg.kind}` };
  }
}

export interface Wedge {
  id: number;
  bearing: number;
  status: string;
  inspected: boolean;
  supportSize: number;
  selectable: boolean;
}

/** Direction fan for rendering: one wedge per tracked direction. */
export function wedges(vm: ViewModel): Wedge[] {
  if (!vm.state) return [];
  const selectable = new Set(
    vm.pendingDecision ? vm.pendingDecision.options.map((o) => o.id) : [],
  );
  return vm.state.directions
    .filter((d: DirectionInfo) => d.status === "active")
    .map((d: DirectionInfo) => ({
      id: d.id,
      bearing: d.bearing,
      status: d.status,
      inspected: d.inspected,
      supportSize: d.support_size,
      selectable: selectable.has(d.id),
    }));
}

export function metricsLine(vm: ViewModel): string {
  if (!vm.state) return "waiting for session…";
  const s = vm.state;
  const done = vm.done
    ? ` | done: ${vm.done.success ? "success" : "failure"} (${vm.done.stop_reason})`
    : "";
  return `steps ${s.steps} | rotations ${s.rotations} | traveled ${s.traveled_m.toFixed(1)} m${done}`;
}
