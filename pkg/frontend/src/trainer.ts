/** Rollout collection over live sessions, the training loop, and greedy
 * evaluation.  Multi-topology training splits the 2048-step budget evenly
 * across sessions (remainder to the first ones). */

import * as fs from "node:fs";
import * as path from "node:path";

import { EnvSession } from "./client.js";
import { GraphObs } from "./graph.js";
import { Model } from "./model.js";
import { Adam, DEFAULT_CONFIG, TrainerConfig, ppoUpdate } from "./ppo.js";
import { Rng } from "./rng.js";
import { ROLLOUT_CAPACITY, RolloutBuffer, Transition, sessionShares } from "./rollout.js";

export interface SessionState {
  session: EnvSession;
  obs: GraphObs | null;  // pending observation, null before first reset
  done: boolean;
}

export interface IterationLog {
  iteration: number;
  perTopology: Map<string, number>; // mean step reward
  combined: number;
  policyLoss: number;
  valueLoss: number;
  clipFraction: number;
}

export async function collectRollouts(states: SessionState[], model: Model,
                                      rng: Rng,
                                      budget = ROLLOUT_CAPACITY): Promise<RolloutBuffer> {
  const buffer = new RolloutBuffer();
  const shares = sessionShares(budget, states.length);
  for (let s = 0; s < states.length; s++) {
    const st = states[s];
    const steps: Transition[] = [];
    if (st.obs === null || st.done) {
      st.obs = await st.session.reset();
      st.done = false;
    }
    let lastValue = 0;
    for (let i = 0; i < shares[s]; i++) {
      const res = model.forward(st.obs!);
      const action = rng.categorical(res.probs);
      const out = await st.session.step(action);
      steps.push({
        obs: st.obs!,
        action,
        logProb: res.logProbs[action],
        reward: out.reward,
        value: res.value,
        done: out.done,
        topology: st.session.topology,
      });
      st.done = out.done;
      st.obs = out.obs;
      if (out.done && i < shares[s] - 1) {
        st.obs = await st.session.reset();
        st.done = false;
      }
    }
    if (!st.done) {
      lastValue = model.forward(st.obs!).value;
    }
    buffer.addSegment(steps, lastValue);
  }
  return buffer;
}

export interface TrainResult {
  model: Model;
  curve: IterationLog[];
}

export interface TrainOptions {
  topologies: string[];
  host: string;
  port: number;
  config?: Partial<TrainerConfig>;
  outDir?: string;
  checkpointEvery?: number;
  log?: (line: string) => void;
  /** Stop early once the combined mean step reward reaches this level. */
  stopAtReward?: number;
}

export async function train(opts: TrainOptions): Promise<TrainResult> {
  const config: TrainerConfig = { ...DEFAULT_CONFIG, ...opts.config };
  const log = opts.log ?? ((line: string) => console.log(line));
  const rng = new Rng(config.seed * 2654435761 + 0x5eed);
  const model = new Model();
  model.init(new Rng(config.seed * 40503 + 0x1234));
  const optimizer = new Adam(model.size, config.learningRate);

  const states: SessionState[] = [];
  for (const name of opts.topologies) {
    const session = new EnvSession(opts.host, opts.port, name);
    const welcome = await session.connect();
    if (welcome.feature_dim !== model.dims.dIn ||
        welcome.n_actions !== model.dims.nActions) {
      throw new Error(`server dims ${welcome.feature_dim}/${welcome.n_actions} ` +
                      `do not match model ${model.dims.dIn}/${model.dims.nActions}`);
    }
    states.push({ session, obs: null, done: false });
  }

  const curve: IterationLog[] = [];
  const csvRows: string[] = ["iteration,topology,mean_step_reward"];
  try {
    for (let iter = 0; iter < config.iterations; iter++) {
      const buffer = await collectRollouts(states, model, rng);
      const perTopo = new Map<string, { sum: number; n: number }>();
      for (const tr of buffer.transitions) {
        const e = perTopo.get(tr.topology) ?? { sum: 0, n: 0 };
        e.sum += tr.reward;
        e.n += 1;
        perTopo.set(tr.topology, e);
      }
      const stats = ppoUpdate(model, buffer, config, optimizer, rng);
      const perTopology = new Map<string, number>();
      let total = 0;
      let count = 0;
      for (const [name, { sum, n }] of perTopo) {
        perTopology.set(name, sum / n);
        total += sum;
        count += n;
        csvRows.push(`${iter},${name},${sum / n}`);
      }
      const combined = total / count;
      csvRows.push(`${iter},all,${combined}`);
      curve.push({
        iteration: iter,
        perTopology,
        combined,
        policyLoss: stats.policyLoss,
        valueLoss: stats.valueLoss,
        clipFraction: stats.clipFraction,
      });
      const topoStr = [...perTopology.entries()]
        .map(([k, v]) => `${k}=${v.toFixed(3)}`).join(" ");
      log(`iter ${iter}: reward ${combined.toFixed(3)} (${topoStr}) ` +
          `vloss ${stats.valueLoss.toFixed(4)} clip ${stats.clipFraction.toFixed(2)}`);

      if (opts.outDir) {
        fs.mkdirSync(opts.outDir, { recursive: true });
        fs.writeFileSync(path.join(opts.outDir, "reward_curve.csv"),
                         csvRows.join("\n") + "\n");
        const every = opts.checkpointEvery ?? 10;
        if ((iter + 1) % every === 0 || iter === config.iterations - 1) {
          fs.writeFileSync(path.join(opts.outDir, "checkpoint.json"), model.saveJson());
        }
      }
      if (opts.stopAtReward !== undefined && combined >= opts.stopAtReward) {
        log(`stop: combined reward ${combined.toFixed(3)} reached target`);
        break;
      }
    }
  } finally {
    if (opts.outDir) {
      fs.mkdirSync(opts.outDir, { recursive: true });
      fs.writeFileSync(path.join(opts.outDir, "checkpoint.json"), model.saveJson());
      fs.writeFileSync(path.join(opts.outDir, "reward_curve.csv"),
                       csvRows.join("\n") + "\n");
    }
    await Promise.all(states.map((s) => s.session.close()));
  }
  return { model, curve };
}

export function greedyAction(model: Model, obs: GraphObs): number {
  const res = model.forward(obs);
  let best = 0;
  for (let i = 1; i < res.probs.length; i++) {
    if (res.probs[i] > res.probs[best]) best = i;
  }
  return best;
}

export interface EvalReport {
  topology: string;
  controller: string;
  steps: number;
  thrMean: number;
  latencyMean: number;
  bpTimeTotal: number;
  actions: number[];
  windows: Array<{ thr: number; latency: number; bp: number; action: number }>;
}

/** Greedy rollout; `fixedAction` instead replays one action throughout
 * (action 9 reproduces the default scheme through the same interface). */
export async function evaluatePolicy(host: string, port: number, topology: string,
                                     model: Model | null, steps: number,
                                     seed: number,
                                     fixedAction?: number): Promise<EvalReport> {
  const session = new EnvSession(host, port, topology);
  await session.connect();
  try {
    let obs = await session.reset(seed);
    const windows: EvalReport["windows"] = [];
    const actions: number[] = [];
    let thrSum = 0;
    let latSum = 0;
    let bpSum = 0;
    for (let i = 0; i < steps; i++) {
      const action = fixedAction ?? greedyAction(model!, obs);
      const out = await session.step(action);
      windows.push({ thr: out.info.thr, latency: out.info.mean_latency_s,
                     bp: out.info.bp_time_s, action });
      actions.push(action);
      thrSum += out.info.thr;
      latSum += out.info.mean_latency_s * out.info.thr; // per-tuple weighting
      bpSum += out.info.bp_time_s;
      obs = out.done ? await session.reset(seed + 1 + i) : out.obs;
    }
    return {
      topology,
      controller: fixedAction !== undefined ? `fixed-${fixedAction}` : "policy",
      steps,
      thrMean: thrSum / steps,
      latencyMean: thrSum > 0 ? latSum / thrSum : 0,
      bpTimeTotal: bpSum,
      actions,
      windows,
    };
  } finally {
    await session.close();
  }
}

export function writeEvalCsv(report: EvalReport, file: string): void {
  const rows = ["window_index,thr,mean_latency,bp_time_total,action"];
  report.windows.forEach((w, i) => {
    rows.push(`${i},${w.thr},${w.latency},${w.bp},${w.action}`);
  });
  rows.push(`mean,${report.thrMean},${report.latencyMean},${report.bpTimeTotal},${report.controller}`);
  fs.writeFileSync(file, rows.join("\n") + "\n");
}
