/** Agent command line: train against a running rcstream envserver, or
 * evaluate a checkpoint (and the default scheme) over the same protocol. */

import * as fs from "node:fs";
import * as path from "node:path";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { Model } from "./model.js";
import { evaluatePolicy, train, writeEvalCsv } from "./trainer.js";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command("train", "train the graph PPO agent", (y) => y
      .option("topologies", { type: "string", default: "wct", describe: "comma-separated names" })
      .option("host", { type: "string", default: "127.0.0.1" })
      .option("port", { type: "number", default: 7777 })
      .option("iterations", { type: "number", default: 150 })
      .option("seed", { type: "number", default: 0 })
      .option("lr", { type: "number", default: 3e-4 })
      .option("out", { type: "string", default: "runs/agent" })
      .option("stop-at-reward", { type: "number" }))
    .command("evaluate", "greedy evaluation of a checkpoint vs the default scheme", (y) => y
      .option("topology", { type: "string", demandOption: true })
      .option("checkpoint", { type: "string", demandOption: true })
      .option("host", { type: "string", default: "127.0.0.1" })
      .option("port", { type: "number", default: 7777 })
      .option("steps", { type: "number", default: 300 })
      .option("seed", { type: "number", default: 1 })
      .option("out", { type: "string", default: "runs/eval" }))
    .demandCommand(1)
    .strict()
    .parse();

  const cmd = argv._[0];
  if (cmd === "train") {
    const topologies = String(argv.topologies).split(",").map((s) => s.trim());
    await train({
      topologies,
      host: String(argv.host),
      port: Number(argv.port),
      config: {
        iterations: Number(argv.iterations),
        seed: Number(argv.seed),
        learningRate: Number(argv.lr),
      },
      outDir: String(argv.out),
      stopAtReward: argv["stop-at-reward"] as number | undefined,
    });
    console.log(`checkpoint + reward_curve.csv written to ${argv.out}`);
    return 0;
  }
  if (cmd === "evaluate") {
    const model = Model.loadJson(fs.readFileSync(String(argv.checkpoint), "utf-8"));
    const host = String(argv.host);
    const port = Number(argv.port);
    const topology = String(argv.topology);
    const steps = Number(argv.steps);
    const seed = Number(argv.seed);
    const policy = await evaluatePolicy(host, port, topology, model, steps, seed);
    const dflt = await evaluatePolicy(host, port, topology, null, steps, seed, 9);
    fs.mkdirSync(String(argv.out), { recursive: true });
    writeEvalCsv(policy, path.join(String(argv.out), `${topology}_policy.csv`));
    writeEvalCsv(dflt, path.join(String(argv.out), `${topology}_default.csv`));
    const thrGain = 100 * (policy.thrMean - dflt.thrMean) / dflt.thrMean;
    const latDrop = dflt.latencyMean > 0
      ? 100 * (dflt.latencyMean - policy.latencyMean) / dflt.latencyMean : 0;
    console.log(`${topology}: policy thr ${policy.thrMean.toFixed(1)}/s vs default ` +
                `${dflt.thrMean.toFixed(1)}/s (${thrGain >= 0 ? "+" : ""}${thrGain.toFixed(2)}%)`);
    console.log(`${topology}: policy latency ${(policy.latencyMean * 1e3).toFixed(3)}ms vs ` +
                `${(dflt.latencyMean * 1e3).toFixed(3)}ms (${latDrop.toFixed(2)}% drop)`);
    return 0;
  }
  return 2;
}

main().then((code) => process.exit(code), (err) => {
  console.error(err);
  process.exit(1);
});
