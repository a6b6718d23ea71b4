import { describe, expect, it } from "vitest";

import { commands, parseServerMessage } from "../src/protocol.js";

describe("command builders", () => {
  it("builds the wire shape the bridge expects", () => {
    expect(commands.jog("hand_l", [0, 0, 0, 1e-3, 0, 0])).toEqual({
      kind: "jog_effector",
      effector: "hand_l",
      twist: [0, 0, 0, 1e-3, 0, 0],
    });
    expect(commands.setForce("hand_r", 12.5, 1e4)).toEqual({
      kind: "set_force_target",
      effector: "hand_r",
      normal_force: 12.5,
      weight_override: 1e4,
    });
    expect(commands.setForce("hand_r", 3)).not.toHaveProperty("weight_override");
    expect(commands.triggerSwitch("foot_l", "remove").action).toBe("remove");
    expect(commands.emergencyStop().kind).toBe("emergency_stop");
  });
});

describe("parseServerMessage", () => {
  it("parses typed messages and rejects junk", () => {
    expect(parseServerMessage('{"type":"ack","seq":4}')).toEqual({ type: "ack", seq: 4 });
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage('"just a string"')).toBeNull();
    expect(parseServerMessage("{}")).toBeNull();
  });
});
