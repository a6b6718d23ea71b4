/** Entry point: connect to the bridge named in the query parameters
 * (?server=host:port&session=name&model=biped&rate=1000) and start the
 * console.  Creates the session when it does not exist yet. */

import { SessionClient } from "./client.js";
import { Console } from "./console.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

const server = param("server", window.location.host || "127.0.0.1:8723");
const sessionId = param("session", "desk");
const model = param("model", "biped");
const rate = Number(param("rate", "1000"));

const ws = new WebSocket(`ws://${server}/session/${sessionId}`);
const client = new SessionClient(ws as never, {
  onSession: (descriptor) => {
    const status = document.getElementById("status");
    if (status) status.textContent = `session '${descriptor.id}' (${descriptor.model}) ${descriptor.lifecycle}`;
  },
});

ws.addEventListener("open", () => {
  // hello is sent by the client wrapper; create if the session is new
  setTimeout(() => {
    if (client.session === null) client.create({ model, rate });
    else client.subscribe();
  }, 150);
});

new Console(client);
