// Canvas composition of the view model: map layers, agent glyph, direction
// fan, and the frontier overlay. Drawing goes through a minimal 2D context
// interface so tests can substitute a recording stub.

import { ViewModel, wedges } from "./viewModel.js";

export interface Context2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

const CELL_COLORS: Record<string, string> = {
  "#": "#31343b", // wall
  ".": "#e8e4da", // free
  "?": "#9aa0ab", // unknown
  "!": "#59b0ff", // frontier
};

const WEDGE_SPAN = (22 * Math.PI) / 180;
const WEDGE_RADIUS = 9; // cells

export function renderState(vm: ViewModel, ctx: Context2DLike, width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  if (!vm.state) {
    ctx.fillStyle = "#555";
    ctx.fillText("waiting for session…", 12, 20);
    return;
  }
  const rows = vm.state.map_rows;
  const h = rows.length;
  const w = rows[0]?.length ?? 0;
  const cell = Math.max(1, Math.floor(Math.min(width / Math.max(w, 1), height / Math.max(h, 1))));

  for (let r = 0; r < h; r++) {
    for (let c = 0; c < rows[r].length; c++) {
      ctx.fillStyle = CELL_COLORS[rows[r][c]] ?? "#ff00ff";
      ctx.fillRect(c * cell, r * cell, cell, cell);
    }
  }

  const [ar, ac] = vm.state.position;
  const ax = (ac + 0.5) * cell;
  const ay = (ar + 0.5) * cell;

  // direction fan: wedges at their bearings, inspected ones muted
  for (const wedge of wedges(vm)) {
    const mid = (wedge.bearing * Math.PI) / 180; // bearing: atan2(drow, dcol)
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.arc(ax, ay, WEDGE_RADIUS * cell, mid - WEDGE_SPAN / 2, mid + WEDGE_SPAN / 2);
    ctx.closePath();
    ctx.globalAlpha = wedge.inspected ? 0.25 : 0.55;
    ctx.fillStyle = wedge.selectable ? "#ff9f1c" : "#2ec4b6";
    ctx.fill();
    ctx.globalAlpha = 1.0;
    ctx.strokeStyle = wedge.inspected ? "#2ec4b6" : "#0a6259";
    ctx.lineWidth = 1;
    ctx.stroke();
    const lx = ax + Math.cos(mid) * (WEDGE_RADIUS + 1) * cell;
    const ly = ay + Math.sin(mid) * (WEDGE_RADIUS + 1) * cell;
    ctx.fillStyle = "#111";
    ctx.fillText(`d${wedge.id} (${wedge.supportSize})`, lx, ly);
  }

  // agent pose glyph: disk plus heading tick
  const hrad = (vm.state.heading * Math.PI) / 180;
  ctx.beginPath();
  ctx.arc(ax, ay, Math.max(2, cell * 0.6), 0, 2 * Math.PI);
  ctx.fillStyle = "#d7263d";
  ctx.fill();
  ctx.beginPath();
  ctx.moveTo(ax, ay);
  ctx.lineTo(ax + Math.cos(hrad) * cell * 1.6, ay + Math.sin(hrad) * cell * 1.6);
  ctx.strokeStyle = "#d7263d";
  ctx.lineWidth = 2;
  ctx.stroke();
}
