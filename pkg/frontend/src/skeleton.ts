/** 2D orthographic schematic of the robot: effector markers and foot
 * rectangles with live CoP dots, side (x-z) and top (x-y) projections. */

import { Snapshot } from "./protocol.js";
import { copGauge } from "./gauges.js";

const COLORS: Record<string, string> = {
  foot: "#53b1fd",
  hand: "#f9a34c",
  trunk: "#b79ef7",
  default: "#8ad3a5",
};

function colorFor(name: string): string {
  for (const key of Object.keys(COLORS)) {
    if (name.startsWith(key)) return COLORS[key];
  }
  return COLORS.default;
}

export class SkeletonView {
  constructor(private canvas: HTMLCanvasElement, private plane: "xz" | "xy") {}

  private project(p: [number, number, number]): [number, number] {
    return this.plane === "xz" ? [p[0], p[2]] : [p[0], p[1]];
  }

  draw(snap: Snapshot): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#0c101a";
    ctx.fillRect(0, 0, width, height);

    const span = 1.6; // metres shown across the canvas
    const scale = Math.min(width, height) / span;
    const cx = width * 0.45;
    const cy = this.plane === "xz" ? height * 0.9 : height * 0.5;
    const toPx = (p: [number, number]): [number, number] => [
      cx + p[0] * scale,
      cy - p[1] * scale,
    ];

    if (this.plane === "xz") {
      ctx.strokeStyle = "#24324a";
      ctx.beginPath();
      const [gx, gy] = toPx([-span, 0]);
      const [gx2] = toPx([span, 0]);
      ctx.moveTo(gx, gy);
      ctx.lineTo(gx2, gy);
      ctx.stroke();
    }

    for (const [name, pose] of Object.entries(snap.desired)) {
      const [px, py] = toPx(this.project(pose.position));
      const commanded = snap.commanded[name];
      if (commanded) {
        const [tx, ty] = toPx(this.project(commanded.position));
        ctx.strokeStyle = "#3d4d68";
        ctx.setLineDash([3, 3]);
        ctx.beginPath();
        ctx.moveTo(px, py);
        ctx.lineTo(tx, ty);
        ctx.stroke();
        ctx.setLineDash([]);
        ctx.strokeStyle = colorFor(name);
        ctx.strokeRect(tx - 3, ty - 3, 6, 6);
      }
      const measured = snap.measured[name];
      if (measured) {
        const [mx, my] = toPx(this.project(measured.position));
        ctx.fillStyle = "#5d6f85";
        ctx.beginPath();
        ctx.arc(mx, my, 2.5, 0, Math.PI * 2);
        ctx.fill();
      }
      ctx.fillStyle = colorFor(name);
      ctx.beginPath();
      ctx.arc(px, py, 4, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = "#9fb2c8";
      ctx.font = "9px monospace";
      ctx.fillText(name, px + 6, py - 4);
    }

    if (this.plane === "xy") {
      // foot rectangles with CoP dots
      for (const [name, geometry] of Object.entries(snap.foot_geometry)) {
        const pose = snap.desired[name];
        if (!pose || snap.contact_modes[name] === "disabled") continue;
        const [fx, fy] = toPx(this.project(pose.position));
        const wpx = geometry[0] * scale;
        const hpx = geometry[1] * scale;
        ctx.strokeStyle = "#3d4d68";
        ctx.strokeRect(fx - wpx, fy - hpx, 2 * wpx, 2 * hpx);
        const gauge = copGauge(snap.cop[name], geometry);
        if (gauge) {
          ctx.fillStyle = gauge.atEdge ? "#ff5d5d" : "#d9e6f5";
          ctx.beginPath();
          // CoP magnitudes only: show in the first quadrant of the pad
          ctx.arc(fx + gauge.x * wpx, fy - gauge.y * hpx, 3, 0, Math.PI * 2);
          ctx.fill();
        }
      }
    }
  }
}
