/** Pure view-model math for the per-contact gauges.  Values come
 * straight from the latest snapshot; nothing is interpolated. */

import { Snapshot } from "./protocol.js";

export interface CopGauge {
  /** CoP position as a fraction of the half-lengths, in [0, 1]; 1 = edge */
  x: number;
  y: number;
  atEdge: boolean;
}

export interface ContactGauges {
  name: string;
  mode: string;
  normalForce: number;
  /** share of the total normal force carried by this contact */
  share: number;
  /** friction ratio as a fraction of mu; >= 1 means sliding boundary */
  frictionFraction: number | null;
  cop: CopGauge | null;
  switchProgress: number | null;
  /** current force as a fraction of the feasible maximum */
  maxForceFraction: number | null;
  maxForce: number | null;
  saturated: boolean;
}

export const EDGE_FRACTION = 0.995;

export function copGauge(
  cop: [number, number] | undefined,
  geometry: [number, number] | undefined,
): CopGauge | null {
  if (!cop || !geometry) return null;
  const x = geometry[0] > 0 ? cop[0] / geometry[0] : 0;
  const y = geometry[1] > 0 ? cop[1] / geometry[1] : 0;
  return { x, y, atEdge: x >= EDGE_FRACTION || y >= EDGE_FRACTION };
}

export function contactGauges(snap: Snapshot): ContactGauges[] {
  const names = Object.keys(snap.contact_modes);
  let total = 0;
  for (const name of names) {
    const wrench = snap.wrenches[name];
    if (wrench) total += wrench[wrench.length - 1];
  }
  const saturatedContacts = new Set(
    snap.saturations.map((s) => {
      // labels look like "cop:foot_l+x" or "normal-min:foot_r"
      const detail = s.split(":")[1] ?? "";
      return detail.replace(/[+#-].*$/, "");
    }),
  );
  return names.map((name) => {
    const wrench = snap.wrenches[name];
    const fz = wrench ? wrench[wrench.length - 1] : 0;
    const mu = snap.friction_limits[name];
    const eta = snap.friction[name];
    const maxForce = snap.max_force_gauge[name];
    return {
      name,
      mode: snap.contact_modes[name],
      normalForce: fz,
      share: total > 0 && wrench ? fz / total : 0,
      frictionFraction: eta !== undefined && mu ? eta / mu : null,
      cop: copGauge(snap.cop[name], snap.foot_geometry[name]),
      switchProgress: snap.switch_progress[name] ?? null,
      maxForceFraction: maxForce !== undefined && maxForce > 0 ? fz / maxForce : null,
      maxForce: maxForce ?? null,
      saturated: saturatedContacts.has(name),
    };
  });
}

/** Transition length of the bundled weight schedule, in ticks. */
export function expectedTransitionTicks(alpha: number, wEnabled: number, wDisabled: number): number {
  let w = wEnabled;
  let ticks = 0;
  while (w < wDisabled) {
    w *= alpha;
    ticks += 1;
    if (ticks > 10_000_000) throw new Error("transition does not terminate");
  }
  return ticks;
}

/** Progress-bar model: duration in seconds for the given tick rate. */
export function switchDurationSeconds(tickRate: number, alpha = 1.005, wEnabled = 1e-5, wDisabled = 1.0): number {
  return expectedTransitionTicks(alpha, wEnabled, wDisabled) / tickRate;
}
