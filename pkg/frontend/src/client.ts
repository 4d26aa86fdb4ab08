// Session client: owns the socket, enforces one reply per request, and keeps
// the choice lock so a double click can never send two replies.

import { SessionMessage } from "./protocol.js";
import { ViewModel, applyMessage, emptyViewModel } from "./viewModel.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export class SessionClient {
  vm: ViewModel = emptyViewModel();
  private answered = new Set<number>();
  private onChange: (vm: ViewModel) => void;
  private socket: SocketLike;

  constructor(socket: SocketLike, onChange: (vm: ViewModel) => void) {
    this.socket = socket;
    this.onChange = onChange;
    socket.onmessage = (ev) => {
      let msg: SessionMessage;
      try {
        msg = JSON.parse(ev.data);
      } catch {
        this.vm = { ...this.vm, banner: "undecodable message dropped" };
        this.onChange(this.vm);
        return;
      }
      this.vm = applyMessage(this.vm, msg);
      this.onChange(this.vm);
    };
    socket.onclose = () => {
      this.vm = { ...this.vm, banner: "disconnected; reconnect to resume from the next snapshot" };
      this.onChange(this.vm);
    };
  }

  /** Answer the pending decision; no-ops (with a toast) when nothing is
   * pending or the request was already answered. */
  submitDecision(directionId: number): boolean {
    const pending = this.vm.pendingDecision;
    if (!pending) {
      this.vm = { ...this.vm, toast: "no decision is pending" };
      this.onChange(this.vm);
      return false;
    }
    if (this.answered.has(pending.request_id)) {
      this.vm = { ...this.vm, toast: "already answered; waiting for the next request" };
      this.onChange(this.vm);
      return false;
    }
    if (!pending.options.some((o) => o.id === directionId)) {
      this.vm = { ...this.vm, toast: `direction ${directionId} is not an option` };
      this.onChange(this.vm);
      return false;
    }
    this.answered.add(pending.request_id);
    this.socket.send(
      JSON.stringify({
        kind: "DECISION_REPLY",
        payload: { request_id: pending.request_id, chosen: directionId },
      }),
    );
    this.vm = { ...this.vm, pendingDecision: null };
    this.onChange(this.vm);
    return true;
  }

  submitJudgment(judgment: "accepted" | "rejected" | "no_decision"): boolean {
    const pending = this.vm.pendingVerify;
    if (!pending || this.answered.has(pending.request_id)) {
      this.vm = { ...this.vm, toast: "no verification frame is pending" };
      this.onChange(this.vm);
      return false;
    }
    this.answered.add(pending.request_id);
    this.socket.send(
      JSON.stringify({
        kind: "VERIFY_REPLY",
        payload: { request_id: pending.request_id, judgment },
      }),
    );
    this.vm = { ...this.vm, pendingVerify: null };
    this.onChange(this.vm);
    return true;
  }
}

export function connect(url: string, onChange: (vm: ViewModel) => void): SessionClient {
  const ws = new WebSocket(url) as unknown as SocketLike;
  return new SessionClient(ws, onChange);
}
