/** The operator console: wires the session client to the controls,
 * gauges, strip charts and the schematic.  Rendering always reads the
 * latest snapshot only (drop-to-latest), and no command is sent
 * without a user gesture. */

import { RateLimiter, SessionClient } from "./client.js";
import { StripChart } from "./charts.js";
import { ContactGauges, contactGauges, switchDurationSeconds } from "./gauges.js";
import { Snapshot, commands } from "./protocol.js";
import { SkeletonView } from "./skeleton.js";

const JOG_STEPS = [0.001, 0.005, 0.02];
const FORCE_COMMAND_MIN_INTERVAL_MS = 50; // <= 20 Hz

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

export class Console {
  private client: SessionClient;
  private charts: StripChart[] = [];
  private chartSeries = new Map<string, [number, number]>();
  private side: SkeletonView;
  private top: SkeletonView;
  private stopped = false;
  private disconnected = false;
  private forceLimiter = new RateLimiter(FORCE_COMMAND_MIN_INTERVAL_MS);
  private lastRenderedTick = -1;
  private effectorSelect: HTMLSelectElement;
  private stepSelect: HTMLSelectElement;
  private copChart: StripChart | null = null;

  constructor(client: SessionClient) {
    this.client = client;
    this.side = new SkeletonView(el<HTMLCanvasElement>("view-side"), "xz");
    this.top = new SkeletonView(el<HTMLCanvasElement>("view-top"), "xy");
    this.effectorSelect = el<HTMLSelectElement>("effector");
    this.stepSelect = el<HTMLSelectElement>("jog-step");
    this.bindControls();
    client.events = {
      ...client.events,
      onReject: (msg) => this.flashError(`${msg.code}: ${msg.text}`),
      onDisconnect: () => {
        this.disconnected = true;
        el("status").textContent = "disconnected — reload to reconnect";
        el("status").className = "bad";
      },
    };
    requestAnimationFrame(() => this.renderLoop());
  }

  private bindControls(): void {
    const dirs: Record<string, [number, number, number]> = {
      "jog-xp": [1, 0, 0],
      "jog-xm": [-1, 0, 0],
      "jog-yp": [0, 1, 0],
      "jog-ym": [0, -1, 0],
      "jog-zp": [0, 0, 1],
      "jog-zm": [0, 0, -1],
    };
    for (const [id, dir] of Object.entries(dirs)) {
      el(id).addEventListener("click", () => this.jog(dir));
    }
    document.addEventListener("keydown", (ev) => {
      const arrowDirs: Record<string, [number, number, number]> = {
        ArrowUp: [1, 0, 0],
        ArrowDown: [-1, 0, 0],
        ArrowLeft: [0, 1, 0],
        ArrowRight: [0, -1, 0],
        PageUp: [0, 0, 1],
        PageDown: [0, 0, -1],
      };
      const dir = arrowDirs[ev.key];
      if (dir) {
        ev.preventDefault();
        this.jog(dir);
      }
    });
    el("switch-add").addEventListener("click", () => this.triggerSwitch("add"));
    el("switch-remove").addEventListener("click", () => this.triggerSwitch("remove"));
    const slider = el<HTMLInputElement>("force-slider");
    slider.addEventListener("input", () => {
      const value = Number(slider.value);
      el("force-value").textContent = `${value.toFixed(1)} N`;
      const effector = this.effectorSelect.value;
      this.forceLimiter.submit(() =>
        this.client.command(commands.setForce(effector, value, 1e4)),
      );
    });
    el("stop").addEventListener("click", () => {
      this.client.command(commands.emergencyStop());
      this.stopped = true;
      this.updateControlLock();
    });
    el("resume").addEventListener("click", () => {
      this.client.command(commands.resume());
      this.stopped = false;
      this.updateControlLock();
    });
  }

  private jog(direction: [number, number, number]): void {
    if (this.stopped) return;
    const step = Number(this.stepSelect.value);
    const effector = this.effectorSelect.value;
    const twist = [0, 0, 0, direction[0] * step, direction[1] * step, direction[2] * step];
    this.client.command(commands.jog(effector, twist));
  }

  private triggerSwitch(action: "add" | "remove"): void {
    if (this.stopped) return;
    const effector = this.effectorSelect.value;
    this.client.command(commands.triggerSwitch(effector, action));
  }

  private flashError(text: string): void {
    const box = el("errors");
    box.textContent = text;
    box.className = "bad";
    setTimeout(() => {
      box.textContent = "";
      box.className = "";
    }, 4000);
  }

  private updateControlLock(): void {
    for (const id of ["jog-xp", "jog-xm", "jog-yp", "jog-ym", "jog-zp", "jog-zm", "switch-add", "switch-remove"]) {
      (el(id) as HTMLButtonElement).disabled = this.stopped;
    }
    (el("resume") as HTMLButtonElement).disabled = !this.stopped;
  }

  private ensureOptions(snap: Snapshot): void {
    if (this.effectorSelect.options.length > 0) return;
    for (const name of Object.keys(snap.desired)) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      this.effectorSelect.appendChild(option);
    }
    for (const step of JOG_STEPS) {
      const option = document.createElement("option");
      option.value = String(step);
      option.textContent = `${step * 1000} mm`;
      this.stepSelect.appendChild(option);
    }
    const chartsBox = el("charts");
    const mk = (title: string, yMin: number | null = null, yMax: number | null = null) => {
      const canvas = document.createElement("canvas");
      canvas.width = 460;
      canvas.height = 110;
      chartsBox.appendChild(canvas);
      const chart = new StripChart(canvas, title, 600, yMin, yMax);
      this.charts.push(chart);
      return chart;
    };
    const forces = mk("normal force [N]");
    const friction = mk("friction ratio / mu", 0, 1.2);
    const copChart = mk("CoP fraction of edge", 0, 1.2);
    const palette = ["#53b1fd", "#f9a34c", "#8ad3a5", "#b79ef7", "#ff5d5d", "#ffd166"];
    let c = 0;
    for (const name of Object.keys(snap.contact_modes)) {
      const color = palette[c++ % palette.length];
      this.chartSeries.set(name, [forces.addSeries(name, color), 0]);
      const pair = this.chartSeries.get(name)!;
      pair[1] = friction.addSeries(name, color);
      copChart.addSeries(name, color);
    }
    this.copChart = copChart;
  }

  private renderGauges(gauges: ContactGauges[], snap: Snapshot): void {
    const box = el("gauges");
    box.innerHTML = "";
    const tickRate = this.client.session?.tick_rate ?? 1000;
    for (const g of gauges) {
      const row = document.createElement("div");
      row.className = "gauge-row" + (g.saturated ? " saturated" : "");
      const switchText =
        g.switchProgress !== null
          ? ` switch ${(g.switchProgress * 100).toFixed(0)}% of ${switchDurationSeconds(tickRate).toFixed(3)} s`
          : "";
      const copText = g.cop ? ` CoP ${(Math.max(g.cop.x, g.cop.y) * 100).toFixed(0)}%` : "";
      const etaText = g.frictionFraction !== null ? ` eta ${(g.frictionFraction * 100).toFixed(0)}%` : "";
      const maxText = g.maxForce !== null ? ` max ${g.maxForce.toFixed(1)} N` : "";
      row.textContent =
        `${g.name} [${g.mode}] ${g.normalForce.toFixed(1)} N` +
        ` (${(g.share * 100).toFixed(0)}%)${etaText}${copText}${maxText}${switchText}`;
      const bar = document.createElement("div");
      bar.className = "bar";
      const fill = document.createElement("div");
      fill.className = "fill" + (g.saturated ? " at-edge" : "");
      const frac = g.switchProgress ?? g.maxForceFraction ?? g.share;
      fill.style.width = `${Math.min(100, Math.max(0, frac * 100)).toFixed(1)}%`;
      bar.appendChild(fill);
      row.appendChild(bar);
      box.appendChild(row);
    }
  }

  private lockSwitchButtons(snap: Snapshot): void {
    const selected = this.effectorSelect.value;
    const inTransition =
      snap.contact_modes[selected] === "removing" || snap.contact_modes[selected] === "adding";
    const lock = this.stopped || inTransition || this.client.hasPending("trigger_switch");
    (el("switch-add") as HTMLButtonElement).disabled = lock;
    (el("switch-remove") as HTMLButtonElement).disabled = lock;
  }

  private renderLoop(): void {
    if (this.disconnected) return; // frozen display keeps the last frame
    const snap = this.client.latest;
    if (snap && snap.tick !== this.lastRenderedTick) {
      this.lastRenderedTick = snap.tick;
      this.ensureOptions(snap);
      this.lockSwitchButtons(snap);
      this.side.draw(snap);
      this.top.draw(snap);
      const gauges = contactGauges(snap);
      this.renderGauges(gauges, snap);
      for (const [name, [forceIdx, frictionIdx]] of this.chartSeries) {
        const wrench = snap.wrenches[name];
        this.charts[0].push(forceIdx, wrench ? wrench[wrench.length - 1] : 0);
        const mu = snap.friction_limits[name];
        const eta = snap.friction[name];
        this.charts[1].push(frictionIdx, eta !== undefined && mu ? eta / mu : 0);
        const gauge = gauges.find((g) => g.name === name);
        this.copChart?.push(forceIdx, gauge?.cop ? Math.max(gauge.cop.x, gauge.cop.y) : 0);
      }
      for (const chart of this.charts) chart.draw();
      el("status").textContent =
        `tick ${snap.tick}` +
        (snap.stopped ? " — STOPPED" : "") +
        ` | residual ${snap.equilibrium_residual.toExponential(1)} N` +
        ` | qp ${snap.qp_iterations}` +
        (snap.saturations.length ? ` | saturated: ${snap.saturations.join(", ")}` : "");
      el("status").className = snap.saturations.length ? "warn" : "";
    }
    requestAnimationFrame(() => this.renderLoop());
  }
}
