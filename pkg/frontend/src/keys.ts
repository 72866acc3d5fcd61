// Keyboard bindings for teleop. Pure lookup; the one-action-per-observation
// gate lives in TeleopSession.submit.

import { ActionName } from "./protocol.js";

export const KEY_BINDINGS: Readonly<Record<string, ActionName>> = {
  ArrowUp: "Forward",
  w: "Forward",
  ArrowLeft: "TurnLeft",
  ArrowRight: "TurnRight",
  a: "Ask",
  s: "Stop",
};

export function actionForKey(key: string): ActionName | null {
  return KEY_BINDINGS[key.length === 1 ? key.toLowerCase() : key] ?? null;
}
