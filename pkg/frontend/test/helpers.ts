import { GraphObs } from "../src/graph.js";
import { Model, ModelDims } from "../src/model.js";
import { Rng } from "../src/rng.js";

export function randomObs(rng: Rng, n: number, dIn: number, dEdge: number,
                          edges?: Array<[number, number]>): GraphObs {
  const es = edges ?? Array.from({ length: Math.max(0, n - 1) },
                                 (_, i) => [i, i + 1] as [number, number]);
  return {
    nodeIds: Array.from({ length: n }, (_, i) => `n${i}`),
    nodeFeatures: Array.from({ length: n },
      () => Float64Array.from({ length: dIn }, () => rng.uniform(-1, 1))),
    edges: es,
    edgeFeatures: es.map(() => Float64Array.from({ length: dEdge },
                                                 () => rng.uniform(0, 2))),
  };
}

export function makeModel(dims: ModelDims, seed = 7): Model {
  const m = new Model(dims);
  m.init(new Rng(seed));
  return m;
}

/** L = sum(cA * logProbs) + cV * value, with analytic parameter gradient. */
export function scalarLoss(model: Model, obs: GraphObs, cA: Float64Array,
                           cV: number): { loss: number; grad: Float64Array } {
  const res = model.forward(obs);
  let loss = cV * res.value;
  let cSum = 0;
  for (let i = 0; i < cA.length; i++) {
    loss += cA[i] * res.logProbs[i];
    cSum += cA[i];
  }
  const dLogits = new Float64Array(cA.length);
  for (let i = 0; i < cA.length; i++) dLogits[i] = cA[i] - res.probs[i] * cSum;
  const grad = new Float64Array(model.size);
  model.backward(res, dLogits, cV, grad);
  return { loss, grad };
}
