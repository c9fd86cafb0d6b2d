#!/usr/bin/env node
import { resolveModel } from "./models.js";
import { serve } from "./server.js";

const spec = process.argv[2];
if (!spec) {
  process.stderr.write(
    "usage: model-server <builtin:mexican_hat | path/to/artifact.json>\n",
  );
  process.exit(1);
}

let model;
try {
  model = resolveModel(spec);
} catch (err) {
  process.stderr.write(
    `cannot load model ${JSON.stringify(spec)}: ${err instanceof Error ? err.message : err}\n`,
  );
  process.exit(1);
}

await serve(model);
