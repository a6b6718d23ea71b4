/** Wire types for the teleoperation bridge (protocol version 1). */

export const PROTOCOL_VERSION = 1;

export interface PoseDict {
  position: [number, number, number];
  orientation: [number, number, number, number];
}

export interface Snapshot {
  type: "snapshot";
  tick: number;
  commanded: Record<string, PoseDict>;
  desired: Record<string, PoseDict>;
  measured: Record<string, PoseDict>;
  wrenches: Record<string, number[]>;
  contact_modes: Record<string, string>;
  switch_progress: Record<string, number>;
  cop: Record<string, [number, number]>;
  friction: Record<string, number>;
  friction_limits: Record<string, number>;
  foot_geometry: Record<string, [number, number]>;
  saturations: string[];
  max_force_gauge: Record<string, number>;
  equilibrium_residual: number;
  dx_norm: number;
  qp_iterations: number;
  stopped: boolean;
  events: string[];
}

export interface HelloMsg {
  type: "hello";
  version: number;
  session: SessionDescriptor | null;
}

export interface SessionDescriptor {
  id: string;
  model: string;
  tick_rate: number;
  broadcast_rate: number;
  clients: number;
  lifecycle: string;
}

export interface AckMsg {
  type: "ack";
  seq: number;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  text: string;
}

export interface CreatedMsg {
  type: "created";
  session: SessionDescriptor;
}

export type ServerMessage = Snapshot | HelloMsg | AckMsg | ErrorMsg | CreatedMsg;

export interface CommandBody {
  kind: string;
  seq: number;
  effector?: string;
  twist?: number[];
  position?: number[];
  orientation?: number[];
  normal_force?: number;
  weight_override?: number;
  action?: "add" | "remove";
  weights?: Record<string, number>;
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null || !("type" in data)) return null;
  return data as ServerMessage;
}

/** Builders keep the schema in one place; seq is assigned by the client. */
export const commands = {
  jog(effector: string, twist: number[]): Omit<CommandBody, "seq"> {
    return { kind: "jog_effector", effector, twist };
  },
  setTarget(effector: string, position: number[], orientation: number[]): Omit<CommandBody, "seq"> {
    return { kind: "set_effector_target", effector, position, orientation };
  },
  setForce(effector: string, newton: number, weightOverride?: number): Omit<CommandBody, "seq"> {
    const body: Omit<CommandBody, "seq"> = { kind: "set_force_target", effector, normal_force: newton };
    if (weightOverride !== undefined) body.weight_override = weightOverride;
    return body;
  },
  triggerSwitch(effector: string, action: "add" | "remove"): Omit<CommandBody, "seq"> {
    return { kind: "trigger_switch", effector, action };
  },
  emergencyStop(): Omit<CommandBody, "seq"> {
    return { kind: "emergency_stop" };
  },
  resume(): Omit<CommandBody, "seq"> {
    return { kind: "resume" };
  },
};
