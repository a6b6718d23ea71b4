/** Tiny strip charts on canvas: ring buffer in, polyline out. */

export interface Series {
  label: string;
  color: string;
  values: Float64Array;
  count: number;
  head: number;
}

export class StripChart {
  private series: Series[] = [];
  private capacity: number;

  constructor(
    private canvas: HTMLCanvasElement,
    private title: string,
    capacity = 600,
    private yMin: number | null = null,
    private yMax: number | null = null,
  ) {
    this.capacity = capacity;
  }

  addSeries(label: string, color: string): number {
    this.series.push({
      label,
      color,
      values: new Float64Array(this.capacity),
      count: 0,
      head: 0,
    });
    return this.series.length - 1;
  }

  push(index: number, value: number): void {
    const s = this.series[index];
    s.values[s.head] = value;
    s.head = (s.head + 1) % this.capacity;
    s.count = Math.min(s.count + 1, this.capacity);
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#111722";
    ctx.fillRect(0, 0, width, height);
    let lo = this.yMin ?? Infinity;
    let hi = this.yMax ?? -Infinity;
    if (this.yMin === null || this.yMax === null) {
      for (const s of this.series) {
        for (let i = 0; i < s.count; i++) {
          const v = s.values[i];
          if (v < lo) lo = v;
          if (v > hi) hi = v;
        }
      }
      if (!isFinite(lo) || !isFinite(hi)) {
        lo = 0;
        hi = 1;
      }
      if (hi - lo < 1e-9) hi = lo + 1e-9;
      const pad = 0.08 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
    for (const s of this.series) {
      if (s.count < 2) continue;
      ctx.strokeStyle = s.color;
      ctx.lineWidth = 1.2;
      ctx.beginPath();
      const start = (s.head - s.count + this.capacity) % this.capacity;
      for (let i = 0; i < s.count; i++) {
        const v = s.values[(start + i) % this.capacity];
        const x = (i / (this.capacity - 1)) * width;
        const y = height - ((v - lo) / (hi - lo)) * height;
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      }
      ctx.stroke();
    }
    ctx.fillStyle = "#9fb2c8";
    ctx.font = "10px monospace";
    ctx.fillText(this.title, 6, 12);
    let lx = width - 6;
    for (const s of [...this.series].reverse()) {
      const w = ctx.measureText(s.label).width;
      lx -= w + 12;
      ctx.fillStyle = s.color;
      ctx.fillText(s.label, lx, 12);
    }
    ctx.fillStyle = "#5d6f85";
    ctx.fillText(hi.toPrecision(3), 6, 24);
    ctx.fillText(lo.toPrecision(3), 6, height - 6);
  }
}
