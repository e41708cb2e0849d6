/** Protocol client: one TCP connection per environment session (rcenv/1). */

import * as net from "node:net";

import {
  GraphObs,
  ObservationMsg,
  WelcomeMsg,
  errorSchema,
  observationSchema,
  toGraphObs,
  welcomeSchema,
} from "./graph.js";

export interface StepOutcome {
  obs: GraphObs;
  reward: number;
  done: boolean;
  info: { thr: number; mean_latency_s: number; bp_time_s: number };
}

export class ProtocolError extends Error {
  constructor(public code: string, message: string) {
    super(`${code}: ${message}`);
  }
}

export class EnvSession {
  private socket!: net.Socket;
  private buffer = "";
  private pending: Array<{ resolve: (line: string) => void; reject: (e: Error) => void }> = [];
  welcome!: WelcomeMsg;

  constructor(readonly host: string, readonly port: number,
              readonly topology: string) {}

  async connect(): Promise<WelcomeMsg> {
    this.socket = await new Promise<net.Socket>((resolve, reject) => {
      const sock = net.createConnection({ host: this.host, port: this.port });
      sock.once("connect", () => resolve(sock));
      sock.once("error", reject);
    });
    this.socket.setNoDelay(true);
    this.socket.on("data", (chunk: Buffer) => this.onData(chunk));
    this.socket.on("error", (e) => this.failAll(e));
    this.socket.on("close", () => this.failAll(new Error("session closed")));
    const raw = await this.request({ kind: "hello", topology: this.topology });
    this.welcome = welcomeSchema.parse(raw);
    return this.welcome;
  }

  private onData(chunk: Buffer): void {
    this.buffer += chunk.toString("utf-8");
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 1);
      const waiter = this.pending.shift();
      if (waiter) waiter.resolve(line);
    }
  }

  private failAll(e: Error): void {
    const waiting = this.pending;
    this.pending = [];
    for (const w of waiting) w.reject(e);
  }

  private request(msg: object): Promise<unknown> {
    return new Promise<string>((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.socket.write(JSON.stringify(msg) + "\n");
    }).then((line) => {
      const parsed = JSON.parse(line);
      const err = errorSchema.safeParse(parsed);
      if (err.success) {
        throw new ProtocolError(err.data.code, err.data.message);
      }
      return parsed;
    });
  }

  private async requestObservation(msg: object): Promise<ObservationMsg> {
    return observationSchema.parse(await this.request(msg));
  }

  async reset(seed?: number): Promise<GraphObs> {
    const msg = seed === undefined ? { kind: "reset" } : { kind: "reset", seed };
    return toGraphObs(await this.requestObservation(msg));
  }

  async step(action: number): Promise<StepOutcome> {
    const m = await this.requestObservation({ kind: "step", action });
    return { obs: toGraphObs(m), reward: m.reward, done: m.done, info: m.info };
  }

  async close(): Promise<void> {
    try {
      await this.request({ kind: "close" });
    } catch {
      // server closes the socket right after the goodbye
    }
    this.socket.destroy();
  }
}
