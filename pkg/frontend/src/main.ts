// Console bootstrap: canvas + decision card + metrics strip, one WebSocket.

import { connect, SessionClient } from "./client.js";
import { renderState } from "./render.js";
import { ViewModel, metricsLine } from "./viewModel.js";

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const toast = document.getElementById("toast")!;
const metrics = document.getElementById("metrics")!;
const card = document.getElementById("decision")!;

const params = new URLSearchParams(window.location.search);
const url = params.get("session") ?? `ws://${window.location.host}/session`;

let client: SessionClient;
let frameQueued = false;

function update(vm: ViewModel): void {
  banner.textContent = vm.banner ?? "";
  banner.style.display = vm.banner ? "block" : "none";
  if (vm.toast) {
    toast.textContent = vm.toast;
    toast.style.display = "block";
    setTimeout(() => (toast.style.display = "none"), 2500);
  }
  metrics.textContent = metricsLine(vm);

  card.innerHTML = "";
  if (vm.pendingDecision) {
    const title = document.createElement("div");
    title.textContent = `which way to the ${vm.pendingDecision.category}?`;
    card.appendChild(title);
    for (const option of vm.pendingDecision.options) {
      const btn = document.createElement("button");
      const seen = option.snapshot
        ? `${option.snapshot.visible_cell_count} cells seen${option.snapshot.contains_target ? ", target!" : ""}`
        : "never inspected";
      btn.textContent = `d${option.id} @ ${option.bearing.toFixed(0)}° — support ${option.support_size}, ${seen}`;
      btn.onclick = () => client.submitDecision(option.id);
      card.appendChild(btn);
    }
  }
  if (vm.pendingVerify) {
    const title = document.createElement("div");
    title.textContent = `verify frame ${vm.pendingVerify.frame_index + 1}/3 at ${vm.pendingVerify.position}`;
    card.appendChild(title);
    for (const j of ["accepted", "rejected", "no_decision"] as const) {
      const btn = document.createElement("button");
      btn.textContent = j;
      btn.onclick = () => client.submitJudgment(j);
      card.appendChild(btn);
    }
  }

  if (!frameQueued) {
    frameQueued = true;
    requestAnimationFrame(() => {
      frameQueued = false;
      renderState(vm, ctx, canvas.width, canvas.height);
    });
  }
}

client = connect(url, update);
