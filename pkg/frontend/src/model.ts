/** Graph-attention actor-critic with hand-written forward/backward passes.
 *
 * Extractor: single-head graph attention (node features 8 -> hidden wide,
 * ReLU aggregation) -> linear -> layer normalization -> linear.  Attention
 * logits are computed from scale-normalized embeddings and all layers below
 * the normalization are bias-free and positively homogeneous, so a uniform
 * positive rescaling of the input features cannot change the greedy action.
 * Heads: max-pooled embedding -> actor MLP (tanh, softmax over 10 actions);
 * mean-pooled embedding -> critic MLP (tanh, scalar value).
 */

import { GraphObs } from "./graph.js";
import { Rng } from "./rng.js";

export interface ModelDims {
  dIn: number;      // node feature width (8)
  dEdge: number;    // edge feature width (2)
  hidden: number;   // embedding and head width (64)
  nActions: number; // 10
}

export const DEFAULT_DIMS: ModelDims = { dIn: 8, dEdge: 2, hidden: 64, nActions: 10 };

const LRELU_SLOPE = 0.2;
const LN_EPS = 1e-12;

interface TensorSpec {
  name: string;
  rows: number;
  cols: number; // 1 for vectors
}

function tensorTable(d: ModelDims): TensorSpec[] {
  const H = d.hidden;
  return [
    { name: "W", rows: H, cols: d.dIn },
    { name: "aSrc", rows: H, cols: 1 },
    { name: "aDst", rows: H, cols: 1 },
    { name: "aEdge", rows: d.dEdge, cols: 1 },
    { name: "W1", rows: H, cols: H },
    { name: "gamma", rows: H, cols: 1 },
    { name: "beta", rows: H, cols: 1 },
    { name: "W2", rows: H, cols: H },
    { name: "b2", rows: H, cols: 1 },
    { name: "A1", rows: H, cols: H },
    { name: "bA1", rows: H, cols: 1 },
    { name: "A2", rows: H, cols: H },
    { name: "bA2", rows: H, cols: 1 },
    { name: "A3", rows: d.nActions, cols: H },
    { name: "bA3", rows: d.nActions, cols: 1 },
    { name: "C1", rows: H, cols: H },
    { name: "bC1", rows: H, cols: 1 },
    { name: "C2", rows: H, cols: H },
    { name: "bC2", rows: H, cols: 1 },
    { name: "C3", rows: 1, cols: H },
    { name: "bC3", rows: 1, cols: 1 },
  ];
}

export interface ForwardResult {
  probs: Float64Array;
  logProbs: Float64Array;
  value: number;
  cache: Cache;
}

interface Cache {
  obs: GraphObs;
  n: number;
  inbound: Array<Array<{ u: number; edge: number }>>; // edge -1 = self loop
  h: Float64Array[];        // W x
  hn: Float64Array[];       // scale-normalized h
  hnInv: number[];          // 1/sigma for LN0
  logitPre: number[][];     // attention logits before leaky relu
  alpha: number[][];
  agg: Float64Array[];      // attention-weighted sum of h
  g: Float64Array[];        // relu(agg)
  z1: Float64Array[];
  zn: Float64Array[];       // layer-normalized z1
  znInv: number[];
  z2: Float64Array[];
  e: Float64Array[];        // final per-node embeddings
  pMax: Float64Array;
  pMaxArg: Int32Array;
  pMean: Float64Array;
  t1: Float64Array;
  t2: Float64Array;
  logitsA: Float64Array;
  u1: Float64Array;
  u2: Float64Array;
}

function softmaxInPlace(x: Float64Array): void {
  let m = -Infinity;
  for (const v of x) m = Math.max(m, v);
  let s = 0;
  for (let i = 0; i < x.length; i++) {
    x[i] = Math.exp(x[i] - m);
    s += x[i];
  }
  for (let i = 0; i < x.length; i++) x[i] /= s;
}

/** Parameter-free scale normalization: (x - mean) / sqrt(var + eps). */
function scaleNorm(x: Float64Array): { out: Float64Array; inv: number } {
  const n = x.length;
  let mu = 0;
  for (const v of x) mu += v;
  mu /= n;
  let varr = 0;
  for (const v of x) varr += (v - mu) * (v - mu);
  varr /= n;
  const inv = 1 / Math.sqrt(varr + LN_EPS);
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = (x[i] - mu) * inv;
  return { out, inv };
}

/** Backward through scaleNorm: given dOut and cached (out, inv). */
function scaleNormBackward(dOut: Float64Array, out: Float64Array, inv: number,
                           dX: Float64Array): void {
  const n = out.length;
  let mDo = 0;
  let mDoOut = 0;
  for (let i = 0; i < n; i++) {
    mDo += dOut[i];
    mDoOut += dOut[i] * out[i];
  }
  mDo /= n;
  mDoOut /= n;
  for (let i = 0; i < n; i++) {
    dX[i] += inv * (dOut[i] - mDo - out[i] * mDoOut);
  }
}

export class Model {
  readonly dims: ModelDims;
  readonly data: Float64Array;
  private offsets = new Map<string, { off: number; rows: number; cols: number }>();

  constructor(dims: ModelDims = DEFAULT_DIMS, data?: Float64Array) {
    this.dims = dims;
    let total = 0;
    for (const t of tensorTable(dims)) {
      this.offsets.set(t.name, { off: total, rows: t.rows, cols: t.cols });
      total += t.rows * t.cols;
    }
    if (data) {
      if (data.length !== total) throw new Error(`param size ${data.length} != ${total}`);
      this.data = data;
    } else {
      this.data = new Float64Array(total);
    }
  }

  get size(): number {
    return this.data.length;
  }

  view(name: string, data: Float64Array = this.data): Float64Array {
    const t = this.offsets.get(name);
    if (!t) throw new Error(`unknown tensor ${name}`);
    return data.subarray(t.off, t.off + t.rows * t.cols);
  }

  /** Xavier-style seeded init; final layers get a small scale so early
   * policies stay near uniform. */
  init(rng: Rng): void {
    for (const t of tensorTable(this.dims)) {
      const v = this.view(t.name);
      if (t.cols === 1) {
        v.fill(0);
        if (t.name === "gamma") v.fill(1);
        continue;
      }
      let scale = Math.sqrt(2 / (t.rows + t.cols));
      if (t.name === "A3") scale *= 0.01;
      if (t.name === "C3") scale *= 1.0;
      for (let i = 0; i < v.length; i++) v[i] = rng.gauss() * scale;
    }
    // attention parameter vectors need non-zero init too
    for (const name of ["aSrc", "aDst", "aEdge"]) {
      const v = this.view(name);
      const scale = Math.sqrt(1 / this.dims.hidden);
      for (let i = 0; i < v.length; i++) v[i] = rng.gauss() * scale;
    }
  }

  clone(): Model {
    return new Model(this.dims, Float64Array.from(this.data));
  }

  forward(obs: GraphObs): ForwardResult {
    const { dIn, dEdge, hidden: H, nActions } = this.dims;
    const n = obs.nodeIds.length;
    if (n < 1) throw new Error("empty graph");
    for (const f of obs.nodeFeatures) {
      if (f.length !== dIn) throw new Error(`node feature dim ${f.length} != ${dIn}`);
    }
    for (const f of obs.edgeFeatures) {
      if (f.length !== dEdge) throw new Error(`edge feature dim ${f.length} != ${dEdge}`);
    }
    const W = this.view("W");
    const aSrc = this.view("aSrc");
    const aDst = this.view("aDst");
    const aEdge = this.view("aEdge");
    const W1 = this.view("W1");
    const gamma = this.view("gamma");
    const beta = this.view("beta");
    const W2 = this.view("W2");
    const b2 = this.view("b2");

    const inbound: Cache["inbound"] = [];
    for (let v = 0; v < n; v++) inbound.push([{ u: v, edge: -1 }]);
    obs.edges.forEach(([u, v], idx) => inbound[v].push({ u, edge: idx }));

    const h: Float64Array[] = [];
    const hn: Float64Array[] = [];
    const hnInv: number[] = [];
    for (let i = 0; i < n; i++) {
      const x = obs.nodeFeatures[i];
      const hi = new Float64Array(H);
      for (let o = 0; o < H; o++) {
        let s = 0;
        for (let k = 0; k < dIn; k++) s += W[o * dIn + k] * x[k];
        hi[o] = s;
      }
      h.push(hi);
      const { out, inv } = scaleNorm(hi);
      hn.push(out);
      hnInv.push(inv);
    }

    const logitPre: number[][] = [];
    const alpha: number[][] = [];
    const agg: Float64Array[] = [];
    const g: Float64Array[] = [];
    for (let v = 0; v < n; v++) {
      const nb = inbound[v];
      let dstTerm = 0;
      for (let k = 0; k < H; k++) dstTerm += aDst[k] * hn[v][k];
      const pre: number[] = [];
      for (const { u, edge } of nb) {
        let s = dstTerm;
        for (let k = 0; k < H; k++) s += aSrc[k] * hn[u][k];
        if (edge >= 0) {
          const f = obs.edgeFeatures[edge];
          for (let k = 0; k < dEdge; k++) s += aEdge[k] * f[k];
        }
        pre.push(s);
      }
      logitPre.push(pre);
      const act = Float64Array.from(pre, (x) => (x > 0 ? x : LRELU_SLOPE * x));
      softmaxInPlace(act);
      const al = Array.from(act);
      alpha.push(al);
      const av = new Float64Array(H);
      nb.forEach(({ u }, k) => {
        const w = al[k];
        const hu = h[u];
        for (let j = 0; j < H; j++) av[j] += w * hu[j];
      });
      agg.push(av);
      g.push(Float64Array.from(av, (x) => (x > 0 ? x : 0)));
    }

    const z1: Float64Array[] = [];
    const zn: Float64Array[] = [];
    const znInv: number[] = [];
    const z2: Float64Array[] = [];
    const e: Float64Array[] = [];
    for (let v = 0; v < n; v++) {
      const zv = new Float64Array(H);
      for (let o = 0; o < H; o++) {
        let s = 0;
        for (let k = 0; k < H; k++) s += W1[o * H + k] * g[v][k];
        zv[o] = s;
      }
      z1.push(zv);
      const { out, inv } = scaleNorm(zv);
      zn.push(out);
      znInv.push(inv);
      const z2v = new Float64Array(H);
      for (let k = 0; k < H; k++) z2v[k] = gamma[k] * out[k] + beta[k];
      z2.push(z2v);
      const ev = new Float64Array(H);
      for (let o = 0; o < H; o++) {
        let s = b2[o];
        for (let k = 0; k < H; k++) s += W2[o * H + k] * z2v[k];
        ev[o] = s;
      }
      e.push(ev);
    }

    const pMax = new Float64Array(H).fill(-Infinity);
    const pMaxArg = new Int32Array(H);
    const pMean = new Float64Array(H);
    for (let v = 0; v < n; v++) {
      const ev = e[v];
      for (let k = 0; k < H; k++) {
        if (ev[k] > pMax[k]) {
          pMax[k] = ev[k];
          pMaxArg[k] = v;
        }
        pMean[k] += ev[k] / n;
      }
    }

    const mlp = (inp: Float64Array, w1: string, bn1: string, w2: string, bn2: string) => {
      const M1 = this.view(w1);
      const B1 = this.view(bn1);
      const M2 = this.view(w2);
      const B2v = this.view(bn2);
      const o1 = new Float64Array(H);
      for (let o = 0; o < H; o++) {
        let s = B1[o];
        for (let k = 0; k < H; k++) s += M1[o * H + k] * inp[k];
        o1[o] = Math.tanh(s);
      }
      const o2 = new Float64Array(H);
      for (let o = 0; o < H; o++) {
        let s = B2v[o];
        for (let k = 0; k < H; k++) s += M2[o * H + k] * o1[k];
        o2[o] = Math.tanh(s);
      }
      return { o1, o2 };
    };

    const { o1: t1, o2: t2 } = mlp(pMax, "A1", "bA1", "A2", "bA2");
    const A3 = this.view("A3");
    const bA3 = this.view("bA3");
    const logitsA = new Float64Array(nActions);
    for (let o = 0; o < nActions; o++) {
      let s = bA3[o];
      for (let k = 0; k < H; k++) s += A3[o * H + k] * t2[k];
      logitsA[o] = s;
    }
    const probs = Float64Array.from(logitsA);
    softmaxInPlace(probs);
    const logProbs = new Float64Array(nActions);
    {
      let m = -Infinity;
      for (const v of logitsA) m = Math.max(m, v);
      let s = 0;
      for (const v of logitsA) s += Math.exp(v - m);
      const lse = m + Math.log(s);
      for (let i = 0; i < nActions; i++) logProbs[i] = logitsA[i] - lse;
    }

    const { o1: u1, o2: u2 } = mlp(pMean, "C1", "bC1", "C2", "bC2");
    const C3 = this.view("C3");
    let value = this.view("bC3")[0];
    for (let k = 0; k < H; k++) value += C3[k] * u2[k];

    const cache: Cache = {
      obs, n, inbound, h, hn, hnInv, logitPre, alpha, agg, g,
      z1, zn, znInv, z2, e, pMax, pMaxArg, pMean, t1, t2, logitsA, u1, u2,
    };
    return { probs, logProbs, value, cache };
  }

  /** Accumulate parameter gradients for dL/dlogitsA and dL/dvalue. */
  backward(res: ForwardResult, dLogitsA: Float64Array, dValue: number,
           grad: Float64Array): void {
    const { dIn, dEdge, hidden: H, nActions } = this.dims;
    const c = res.cache;
    const n = c.n;
    const gv = (name: string) => this.view(name, grad);

    // actor head
    const dT2 = new Float64Array(H);
    {
      const A3 = this.view("A3");
      const dA3 = gv("A3");
      const dbA3 = gv("bA3");
      for (let o = 0; o < nActions; o++) {
        const d = dLogitsA[o];
        if (d === 0) continue;
        dbA3[o] += d;
        for (let k = 0; k < H; k++) {
          dA3[o * H + k] += d * c.t2[k];
          dT2[k] += A3[o * H + k] * d;
        }
      }
    }
    const dPMax = this.mlpBackward(dT2, c.pMax, c.t1, c.t2, "A1", "bA1", "A2", "bA2", grad);

    // critic head
    const dU2 = new Float64Array(H);
    {
      const C3 = this.view("C3");
      const dC3 = gv("C3");
      gv("bC3")[0] += dValue;
      for (let k = 0; k < H; k++) {
        dC3[k] += dValue * c.u2[k];
        dU2[k] += C3[k] * dValue;
      }
    }
    const dPMean = this.mlpBackward(dU2, c.pMean, c.u1, c.u2, "C1", "bC1", "C2", "bC2", grad);

    // pooling
    const dE: Float64Array[] = [];
    for (let v = 0; v < n; v++) dE.push(new Float64Array(H));
    for (let k = 0; k < H; k++) {
      dE[c.pMaxArg[k]][k] += dPMax[k];
      const m = dPMean[k] / n;
      for (let v = 0; v < n; v++) dE[v][k] += m;
    }

    // per-node stack
    const W1 = this.view("W1");
    const W2 = this.view("W2");
    const gamma = this.view("gamma");
    const dW1 = gv("W1");
    const dW2 = gv("W2");
    const db2 = gv("b2");
    const dGamma = gv("gamma");
    const dBeta = gv("beta");
    const dH: Float64Array[] = [];
    for (let v = 0; v < n; v++) dH.push(new Float64Array(H));
    const dHn: Float64Array[] = [];
    for (let v = 0; v < n; v++) dHn.push(new Float64Array(H));

    const aSrc = this.view("aSrc");
    const aDst = this.view("aDst");
    const daSrc = gv("aSrc");
    const daDst = gv("aDst");
    const daEdge = gv("aEdge");

    for (let v = 0; v < n; v++) {
      // e = W2 z2 + b2
      const dZ2 = new Float64Array(H);
      const dev = dE[v];
      for (let o = 0; o < H; o++) {
        const d = dev[o];
        if (d === 0) continue;
        db2[o] += d;
        for (let k = 0; k < H; k++) {
          dW2[o * H + k] += d * c.z2[v][k];
          dZ2[k] += W2[o * H + k] * d;
        }
      }
      // z2 = gamma*zn + beta
      const dZn = new Float64Array(H);
      for (let k = 0; k < H; k++) {
        dGamma[k] += dZ2[k] * c.zn[v][k];
        dBeta[k] += dZ2[k];
        dZn[k] = dZ2[k] * gamma[k];
      }
      const dZ1 = new Float64Array(H);
      scaleNormBackward(dZn, c.zn[v], c.znInv[v], dZ1);
      // z1 = W1 g
      const dG = new Float64Array(H);
      for (let o = 0; o < H; o++) {
        const d = dZ1[o];
        if (d === 0) continue;
        for (let k = 0; k < H; k++) {
          dW1[o * H + k] += d * c.g[v][k];
          dG[k] += W1[o * H + k] * d;
        }
      }
      // g = relu(agg)
      const dAgg = new Float64Array(H);
      for (let k = 0; k < H; k++) dAgg[k] = c.agg[v][k] > 0 ? dG[k] : 0;
      // agg = sum alpha_k h_uk
      const nb = c.inbound[v];
      const al = c.alpha[v];
      const dAlpha: number[] = [];
      nb.forEach(({ u }, k) => {
        let s = 0;
        const hu = c.h[u];
        const w = al[k];
        const dhu = dH[u];
        for (let j = 0; j < H; j++) {
          s += dAgg[j] * hu[j];
          dhu[j] += w * dAgg[j];
        }
        dAlpha.push(s);
      });
      // softmax + leaky relu on attention logits
      let dot = 0;
      for (let k = 0; k < nb.length; k++) dot += al[k] * dAlpha[k];
      nb.forEach(({ u, edge }, k) => {
        const dLogit = al[k] * (dAlpha[k] - dot);
        const dPre = c.logitPre[v][k] > 0 ? dLogit : LRELU_SLOPE * dLogit;
        if (dPre === 0) return;
        const hnu = c.hn[u];
        const hnv = c.hn[v];
        for (let j = 0; j < H; j++) {
          daSrc[j] += dPre * hnu[j];
          dHn[u][j] += dPre * aSrc[j];
          daDst[j] += dPre * hnv[j];
          dHn[v][j] += dPre * aDst[j];
        }
        if (edge >= 0) {
          const f = c.obs.edgeFeatures[edge];
          for (let j = 0; j < dEdge; j++) daEdge[j] += dPre * f[j];
        }
      });
    }

    // scale norm on h, then h = W x
    const dW = gv("W");
    for (let i = 0; i < n; i++) {
      scaleNormBackward(dHn[i], c.hn[i], c.hnInv[i], dH[i]);
      const x = c.obs.nodeFeatures[i];
      const dhi = dH[i];
      for (let o = 0; o < H; o++) {
        const d = dhi[o];
        if (d === 0) continue;
        for (let k = 0; k < dIn; k++) dW[o * dIn + k] += d * x[k];
      }
    }
  }

  private mlpBackward(dOut2: Float64Array, inp: Float64Array, o1: Float64Array,
                      o2: Float64Array, w1: string, b1: string, w2: string,
                      b2: string, grad: Float64Array): Float64Array {
    const H = this.dims.hidden;
    const M1 = this.view(w1);
    const M2 = this.view(w2);
    const dM1 = this.view(w1, grad);
    const dB1 = this.view(b1, grad);
    const dM2 = this.view(w2, grad);
    const dB2 = this.view(b2, grad);
    const dPre2 = new Float64Array(H);
    for (let k = 0; k < H; k++) dPre2[k] = dOut2[k] * (1 - o2[k] * o2[k]);
    const dO1 = new Float64Array(H);
    for (let o = 0; o < H; o++) {
      const d = dPre2[o];
      if (d === 0) continue;
      dB2[o] += d;
      for (let k = 0; k < H; k++) {
        dM2[o * H + k] += d * o1[k];
        dO1[k] += M2[o * H + k] * d;
      }
    }
    const dPre1 = new Float64Array(H);
    for (let k = 0; k < H; k++) dPre1[k] = dO1[k] * (1 - o1[k] * o1[k]);
    const dInp = new Float64Array(H);
    for (let o = 0; o < H; o++) {
      const d = dPre1[o];
      if (d === 0) continue;
      dB1[o] += d;
      for (let k = 0; k < H; k++) {
        dM1[o * H + k] += d * inp[k];
        dInp[k] += M1[o * H + k] * d;
      }
    }
    return dInp;
  }

  saveJson(): string {
    return JSON.stringify({
      format: "rcstream-agent/1",
      dims: this.dims,
      data: Array.from(this.data),
    });
  }

  static loadJson(text: string): Model {
    const raw = JSON.parse(text);
    if (raw.format !== "rcstream-agent/1") {
      throw new Error(`unknown checkpoint format: ${raw.format}`);
    }
    return new Model(raw.dims, Float64Array.from(raw.data as number[]));
  }
}
