/** Clipped-surrogate PPO update over a filled rollout buffer. */

import { Model } from "./model.js";
import { Rng } from "./rng.js";
import { MINIBATCH_SIZE, N_MINIBATCHES, RolloutBuffer } from "./rollout.js";

export interface TrainerConfig {
  gamma: number;
  gaeLambda: number;
  clip: number;
  entropyCoef: number;
  valueCoef: number;
  learningRate: number;
  epochs: number;
  iterations: number;
  evalEvery: number;
  seed: number;
}

export const DEFAULT_CONFIG: TrainerConfig = {
  gamma: 0.99,
  gaeLambda: 0.95,
  clip: 0.2,
  entropyCoef: 0.0,
  valueCoef: 0.5,
  learningRate: 3e-4,
  epochs: 10,
  iterations: 150,
  evalEvery: 0,
  seed: 0,
};

export class Adam {
  private m: Float64Array;
  private v: Float64Array;
  private t = 0;

  constructor(size: number, private lr: number,
              private beta1 = 0.9, private beta2 = 0.999, private eps = 1e-8) {
    this.m = new Float64Array(size);
    this.v = new Float64Array(size);
  }

  step(params: Float64Array, grad: Float64Array): void {
    this.t += 1;
    const c1 = 1 - Math.pow(this.beta1, this.t);
    const c2 = 1 - Math.pow(this.beta2, this.t);
    for (let i = 0; i < params.length; i++) {
      const g = grad[i];
      this.m[i] = this.beta1 * this.m[i] + (1 - this.beta1) * g;
      this.v[i] = this.beta2 * this.v[i] + (1 - this.beta2) * g * g;
      params[i] -= this.lr * (this.m[i] / c1) / (Math.sqrt(this.v[i] / c2) + this.eps);
    }
  }
}

export interface UpdateStats {
  policyLoss: number;
  valueLoss: number;
  clipFraction: number;
  meanRatio: number;
}

/** One sample's PPO loss; gradients accumulate into `grad` when given. */
export function sampleLoss(model: Model, buffer: RolloutBuffer, idx: number,
                           advantage: number, clip: number, valueCoef: number,
                           grad?: Float64Array):
    { loss: number; ratio: number; clipped: boolean; value: number } {
  const tr = buffer.transitions[idx];
  const res = model.forward(tr.obs);
  const logProb = res.logProbs[tr.action];
  const ratio = Math.exp(logProb - tr.logProb);
  const unclipped = ratio * advantage;
  const clippedRatio = Math.min(Math.max(ratio, 1 - clip), 1 + clip);
  const clippedTerm = clippedRatio * advantage;
  const useUnclipped = unclipped <= clippedTerm;
  const policyLoss = -Math.min(unclipped, clippedTerm);

  const vErr = res.value - buffer.returns[idx];
  const loss = policyLoss + valueCoef * vErr * vErr;

  if (grad) {
    // d(policyLoss)/dlogProb = -A*ratio on the unclipped branch, else 0.
    const coef = useUnclipped ? -advantage * ratio : 0;
    const dLogits = new Float64Array(res.probs.length);
    if (coef !== 0) {
      for (let i = 0; i < dLogits.length; i++) {
        dLogits[i] = coef * ((i === tr.action ? 1 : 0) - res.probs[i]);
      }
    }
    model.backward(res, dLogits, valueCoef * 2 * vErr, grad);
  }
  return { loss, ratio, clipped: !useUnclipped, value: res.value };
}

/** Normalize advantages to zero mean and unit variance (per iteration). */
export function normalizeAdvantages(adv: Float64Array): Float64Array {
  let mean = 0;
  for (const a of adv) mean += a;
  mean /= adv.length;
  let varr = 0;
  for (const a of adv) varr += (a - mean) * (a - mean);
  varr /= adv.length;
  const std = Math.sqrt(varr) + 1e-8;
  return Float64Array.from(adv, (a) => (a - mean) / std);
}

export function ppoUpdate(model: Model, buffer: RolloutBuffer,
                          config: TrainerConfig, optimizer: Adam,
                          rng: Rng): UpdateStats {
  const n = buffer.length;
  if (n !== N_MINIBATCHES * MINIBATCH_SIZE) {
    throw new Error(`buffer holds ${n} transitions; need ${N_MINIBATCHES * MINIBATCH_SIZE}`);
  }
  buffer.computeGae(config.gamma, config.gaeLambda);
  const adv = normalizeAdvantages(buffer.advantages);

  const grad = new Float64Array(model.size);
  let policyLossSum = 0;
  let valueLossSum = 0;
  let clippedCount = 0;
  let ratioSum = 0;
  let samples = 0;

  const order = Array.from({ length: n }, (_, i) => i);
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    rng.shuffle(order);
    for (let b = 0; b < N_MINIBATCHES; b++) {
      grad.fill(0);
      let batchPolicy = 0;
      let batchValue = 0;
      for (let k = 0; k < MINIBATCH_SIZE; k++) {
        const idx = order[b * MINIBATCH_SIZE + k];
        const out = sampleLoss(model, buffer, idx, adv[idx],
                               config.clip, config.valueCoef, grad);
        if (!Number.isFinite(out.loss)) {
          throw new Error(`non-finite loss at epoch ${epoch} batch ${b}`);
        }
        batchPolicy += -Math.min(out.ratio * adv[idx],
                                 Math.min(Math.max(out.ratio, 1 - config.clip),
                                          1 + config.clip) * adv[idx]);
        batchValue += (out.value - buffer.returns[idx]) ** 2;
        if (out.clipped) clippedCount += 1;
        ratioSum += out.ratio;
        samples += 1;
      }
      // mean over the minibatch
      for (let i = 0; i < grad.length; i++) grad[i] /= MINIBATCH_SIZE;
      optimizer.step(model.data, grad);
      policyLossSum += batchPolicy / MINIBATCH_SIZE;
      valueLossSum += batchValue / MINIBATCH_SIZE;
    }
  }
  const batches = config.epochs * N_MINIBATCHES;
  return {
    policyLoss: policyLossSum / batches,
    valueLoss: valueLossSum / batches,
    clipFraction: clippedCount / samples,
    meanRatio: ratioSum / samples,
  };
}
