import { readFileSync } from "node:fs";

export interface Model {
  predict(x: number[]): number;
}

/** f(x) = (1 - |x|^2/2) exp(-|x|^2/2); peak value 1 at the origin. */
export function mexicanHat(x: number[]): number {
  const r2 = x.reduce((s, v) => s + v * v, 0);
  return (1 - 0.5 * r2) * Math.exp(-0.5 * r2);
}

type Activation = "identity" | "relu" | "tanh";

interface LinearArtifact {
  type: "linear";
  weights: number[];
  intercept?: number;
}

interface MlpLayer {
  weights: number[][]; // [units out][units in]
  bias: number[];
  activation: Activation;
}

interface MlpArtifact {
  type: "mlp";
  layers: MlpLayer[];
}

type Artifact = LinearArtifact | MlpArtifact;

const ACTIVATIONS: Record<Activation, (v: number) => number> = {
  identity: (v) => v,
  relu: (v) => (v > 0 ? v : 0),
  tanh: Math.tanh,
};

function isNumberVector(v: unknown): v is number[] {
  return Array.isArray(v) && v.every((e) => typeof e === "number");
}

export function linearModel(weights: number[], intercept = 0): Model {
  return {
    predict(x) {
      if (x.length !== weights.length) {
        throw new Error(`expected ${weights.length} features, got ${x.length}`);
      }
      return weights.reduce((s, w, i) => s + w * x[i], intercept);
    },
  };
}

export function mlpModel(layers: MlpLayer[]): Model {
  for (const layer of layers) {
    if (!(layer.activation in ACTIVATIONS)) {
      throw new Error(`unknown activation ${JSON.stringify(layer.activation)}`);
    }
    if (layer.weights.length !== layer.bias.length) {
      throw new Error("layer weights and bias disagree on unit count");
    }
  }
  const last = layers[layers.length - 1];
  if (!last || last.weights.length !== 1) {
    throw new Error("final layer must have exactly one output unit");
  }
  return {
    predict(x) {
      let h = x;
      for (const layer of layers) {
        const act = ACTIVATIONS[layer.activation];
        h = layer.weights.map((row, i) => {
          if (row.length !== h.length) {
            throw new Error(`layer expects width ${row.length}, got ${h.length}`);
          }
          return act(row.reduce((s, w, j) => s + w * h[j], layer.bias[i]));
        });
      }
      return h[0];
    },
  };
}

/** Build a model from a JSON artifact file; throws when it cannot be loaded. */
export function loadArtifact(path: string): Model {
  const raw: Artifact = JSON.parse(readFileSync(path, "utf-8"));
  if (raw.type === "linear") {
    if (!isNumberVector(raw.weights)) {
      throw new Error("linear artifact needs a numeric weights array");
    }
    return linearModel(raw.weights, raw.intercept ?? 0);
  }
  if (raw.type === "mlp") {
    if (!Array.isArray(raw.layers) || raw.layers.length === 0) {
      throw new Error("mlp artifact needs a nonempty layers array");
    }
    return mlpModel(raw.layers);
  }
  throw new Error(`unknown artifact type ${JSON.stringify((raw as { type?: unknown }).type)}`);
}

/** Resolve a CLI model spec: builtin:NAME or a path to an artifact file. */
export function resolveModel(spec: string): Model {
  if (spec.startsWith("builtin:")) {
    const name = spec.slice("builtin:".length);
    if (name === "mexican_hat") {
      return { predict: mexicanHat };
    }
    throw new Error(`unknown builtin ${JSON.stringify(name)}`);
  }
  return loadArtifact(spec);
}
