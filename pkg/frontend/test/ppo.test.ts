import { describe, expect, it } from "vitest";

import { Rng } from "../src/rng.js";
import { Adam, DEFAULT_CONFIG, normalizeAdvantages, ppoUpdate, sampleLoss } from "../src/ppo.js";
import { RolloutBuffer, Transition } from "../src/rollout.js";
import { makeModel, randomObs } from "./helpers.js";

const TOY = { dIn: 8, dEdge: 2, hidden: 4, nActions: 10 };

function rolloutFromModel(model: ReturnType<typeof makeModel>, n: number,
                          seed: number, logProbShift = 0): RolloutBuffer {
  const rng = new Rng(seed);
  const buf = new RolloutBuffer();
  const steps: Transition[] = [];
  for (let i = 0; i < n; i++) {
    const obs = randomObs(rng, 2 + rng.int(4), 8, 2);
    const res = model.forward(obs);
    const action = rng.categorical(res.probs);
    steps.push({
      obs,
      action,
      logProb: res.logProbs[action] + logProbShift,
      reward: rng.uniform(0, 1),
      value: res.value,
      done: (i + 1) % 128 === 0,
      topology: "toy",
    });
  }
  buf.addSegment(steps, 0);
  return buf;
}

describe("trainer config", () => {
  it("defaults match the published settings", () => {
    expect(DEFAULT_CONFIG.gamma).toBe(0.99);
    expect(DEFAULT_CONFIG.gaeLambda).toBe(0.95);
    expect(DEFAULT_CONFIG.clip).toBe(0.2);
    expect(DEFAULT_CONFIG.entropyCoef).toBe(0);
    expect(DEFAULT_CONFIG.valueCoef).toBe(0.5);
    expect(DEFAULT_CONFIG.learningRate).toBe(3e-4);
    expect(DEFAULT_CONFIG.epochs).toBe(10);
  });
});

describe("sampleLoss", () => {
  it("ratio is exactly 1 under unchanged parameters", () => {
    const model = makeModel(TOY, 3);
    const buf = rolloutFromModel(model, 64, 17);
    buf.computeGae(0.99, 0.95);
    for (let i = 0; i < buf.length; i++) {
      const out = sampleLoss(model, buf, i, buf.advantages[i], 0.2, 0.5);
      expect(Math.abs(out.ratio - 1)).toBeLessThan(1e-12);
      expect(out.clipped).toBe(false);
    }
  });

  it("clipping bounds the policy term at (1 +- eps) * advantage", () => {
    const model = makeModel(TOY, 4);
    // old log-probs shifted down -> new/old ratio exp(+0.5) ~ 1.65 > 1.2
    const buf = rolloutFromModel(model, 8, 23, -0.5);
    buf.computeGae(0.99, 0.95);
    for (let i = 0; i < buf.length; i++) {
      const advantage = 1.0;
      const out = sampleLoss(model, buf, i, advantage, 0.2, 0.0);
      expect(out.ratio).toBeGreaterThan(1.2);
      expect(out.clipped).toBe(true);
      expect(out.loss).toBeCloseTo(-1.2 * advantage, 12);
    }
  });

  it("negative advantages with inflated ratios stay unclipped (pessimism)", () => {
    const model = makeModel(TOY, 5);
    const buf = rolloutFromModel(model, 4, 29, -0.5);
    buf.computeGae(0.99, 0.95);
    const out = sampleLoss(model, buf, 0, -1.0, 0.2, 0.0);
    expect(out.ratio).toBeGreaterThan(1.2);
    expect(out.clipped).toBe(false); // min picks the unclipped (worse) term
  });
});

describe("ppoUpdate", () => {
  it("value loss strictly decreases over the first 5 epochs on a frozen batch", () => {
    const model = makeModel(TOY, 6);
    const buf = rolloutFromModel(model, 64, 31);
    buf.computeGae(0.99, 0.95);
    const adv = normalizeAdvantages(buf.advantages);
    const optimizer = new Adam(model.size, 3e-3);
    const grad = new Float64Array(model.size);
    const losses: number[] = [];
    for (let epoch = 0; epoch < 5; epoch++) {
      let vloss = 0;
      grad.fill(0);
      for (let i = 0; i < buf.length; i++) {
        const out = sampleLoss(model, buf, i, adv[i], 0.2, 0.5, grad);
        vloss += (out.value - buf.returns[i]) ** 2;
      }
      losses.push(vloss / buf.length);
      for (let i = 0; i < grad.length; i++) grad[i] /= buf.length;
      optimizer.step(model.data, grad);
    }
    for (let e = 1; e < losses.length; e++) {
      expect(losses[e]).toBeLessThan(losses[e - 1]);
    }
  });

  it("requires exactly 2048 transitions", () => {
    const model = makeModel(TOY, 7);
    const buf = rolloutFromModel(model, 100, 37);
    expect(() => ppoUpdate(model, buf, DEFAULT_CONFIG, new Adam(model.size, 3e-4), new Rng(1)))
      .toThrow(/2048/);
  });

  it("runs a full 32x64 update and reports finite stats", () => {
    const model = makeModel(TOY, 8);
    const buf = rolloutFromModel(model, 2048, 41);
    const stats = ppoUpdate(model, buf, { ...DEFAULT_CONFIG, epochs: 2 },
                            new Adam(model.size, 3e-4), new Rng(2));
    expect(Number.isFinite(stats.policyLoss)).toBe(true);
    expect(Number.isFinite(stats.valueLoss)).toBe(true);
    expect(stats.clipFraction).toBeGreaterThanOrEqual(0);
    expect(stats.clipFraction).toBeLessThanOrEqual(1);
    expect(stats.meanRatio).toBeGreaterThan(0.5);
    expect(stats.meanRatio).toBeLessThan(2.0);
  });

  it("aborts on non-finite loss", () => {
    const model = makeModel(TOY, 9);
    const buf = rolloutFromModel(model, 2048, 43);
    buf.computeGae(0.99, 0.95);
    buf.returns[5] = Number.NaN;
    const cfg = { ...DEFAULT_CONFIG, epochs: 1 };
    // computeGae inside ppoUpdate would rebuild returns; poison rewards instead
    buf.transitions[5].reward = Number.NaN;
    expect(() => ppoUpdate(model, buf, cfg, new Adam(model.size, 3e-4), new Rng(3)))
      .toThrow(/non-finite/);
  });

  it("advantage normalization yields zero mean and unit variance", () => {
    const rng = new Rng(10);
    const adv = Float64Array.from({ length: 512 }, () => rng.uniform(-5, 20));
    const out = normalizeAdvantages(adv);
    let mean = 0;
    for (const a of out) mean += a;
    mean /= out.length;
    let varr = 0;
    for (const a of out) varr += (a - mean) ** 2;
    varr /= out.length;
    expect(Math.abs(mean)).toBeLessThan(1e-9);
    expect(Math.abs(varr - 1)).toBeLessThan(1e-6);
  });
});
