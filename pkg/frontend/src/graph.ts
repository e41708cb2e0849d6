/** Graph observations and the wire message schemas (rcenv/1). */

import { z } from "zod";

export const FEATURE_DIM = 8;
export const EDGE_FEATURE_DIM = 2;
export const N_ACTIONS = 10;

export interface GraphObs {
  nodeIds: string[];
  /** nodeFeatures[i] has FEATURE_DIM entries. */
  nodeFeatures: Float64Array[];
  /** [src, dst] index pairs into nodeIds. */
  edges: Array<[number, number]>;
  edgeFeatures: Float64Array[];
}

export const welcomeSchema = z.object({
  kind: z.literal("welcome"),
  version: z.string(),
  topology: z.string(),
  n_nodes: z.number().int(),
  n_edges: z.number().int(),
  n_actions: z.number().int(),
  feature_dim: z.number().int(),
  edge_feature_dim: z.number().int().optional(),
  episode_length: z.number().int().optional(),
  k_s: z.number().optional(),
});

export const observationSchema = z.object({
  kind: z.literal("observation"),
  nodes: z.array(z.object({
    id: z.string(),
    kind: z.string(),
    features: z.array(z.number()).length(FEATURE_DIM),
  })),
  edges: z.array(z.object({
    src: z.number().int(),
    dst: z.number().int(),
    features: z.array(z.number()).length(EDGE_FEATURE_DIM),
  })),
  reward: z.number(),
  done: z.boolean(),
  info: z.object({
    thr: z.number(),
    mean_latency_s: z.number(),
    bp_time_s: z.number(),
  }),
});

export const errorSchema = z.object({
  kind: z.literal("error"),
  code: z.string(),
  message: z.string(),
});

export type WelcomeMsg = z.infer<typeof welcomeSchema>;
export type ObservationMsg = z.infer<typeof observationSchema>;

export function toGraphObs(msg: ObservationMsg): GraphObs {
  return {
    nodeIds: msg.nodes.map((n) => n.id),
    nodeFeatures: msg.nodes.map((n) => Float64Array.from(n.features)),
    edges: msg.edges.map((e) => [e.src, e.dst] as [number, number]),
    edgeFeatures: msg.edges.map((e) => Float64Array.from(e.features)),
  };
}
