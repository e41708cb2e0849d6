/** Rollout storage and generalized advantage estimation. */

import { GraphObs } from "./graph.js";

export interface Transition {
  obs: GraphObs;
  action: number;
  logProb: number;
  reward: number;
  value: number;
  done: boolean;
  topology: string;
}

export const ROLLOUT_CAPACITY = 2048;
export const N_MINIBATCHES = 32;
export const MINIBATCH_SIZE = 64;

export class RolloutBuffer {
  readonly transitions: Transition[] = [];
  /** Value estimate of the state following the last transition of each
   * session segment (0 when that transition ended the episode). */
  private bootstraps: Array<{ start: number; end: number; lastValue: number }> = [];
  advantages: Float64Array = new Float64Array(0);
  returns: Float64Array = new Float64Array(0);

  get length(): number {
    return this.transitions.length;
  }

  addSegment(steps: Transition[], lastValue: number): void {
    const start = this.transitions.length;
    this.transitions.push(...steps);
    this.bootstraps.push({ start, end: this.transitions.length, lastValue });
  }

  /** advantage_t = sum_l (gamma*lambda)^l delta_{t+l} within episode bounds,
   * delta_t = r_t + gamma V_{t+1} - V_t; terminal states bootstrap at 0. */
  computeGae(gamma: number, lambda: number): void {
    const n = this.transitions.length;
    this.advantages = new Float64Array(n);
    this.returns = new Float64Array(n);
    for (const { start, end, lastValue } of this.bootstraps) {
      let adv = 0;
      let nextValue = lastValue;
      for (let t = end - 1; t >= start; t--) {
        const tr = this.transitions[t];
        if (tr.done) {
          nextValue = 0;
          adv = 0;
        }
        const delta = tr.reward + gamma * nextValue - tr.value;
        adv = delta + gamma * lambda * adv;
        this.advantages[t] = adv;
        this.returns[t] = adv + tr.value;
        nextValue = tr.value;
      }
    }
  }

  clear(): void {
    this.transitions.length = 0;
    this.bootstraps = [];
  }
}

/** Even split of the step budget across m sessions, remainder to the first. */
export function sessionShares(total: number, m: number): number[] {
  const base = Math.floor(total / m);
  const rem = total - base * m;
  return Array.from({ length: m }, (_, i) => base + (i < rem ? 1 : 0));
}
