import readline from "node:readline";
import type { Readable, Writable } from "node:stream";
import type { Model } from "./models.js";

// One JSON document per line, id echoed back:
//   {"id": 1, "x": [0.1, 0.2]}        -> {"id": 1, "f": 0.97}
//   {"id": 2, "X": [[..], [..]]}      -> {"id": 2, "F": [f0, f1]}
//   anything malformed                -> {"id": <id or null>, "error": "..."}
// The loop is single-threaded; the client serializes requests, and the id
// echo keeps replies matchable regardless.

export interface Reply {
  id: unknown;
  f?: number;
  F?: number[];
  error?: string;
}

function isFiniteVector(v: unknown): v is number[] {
  return Array.isArray(v) && v.every((e) => typeof e === "number" && Number.isFinite(e));
}

export function handleLine(model: Model, line: string): Reply {
  let req: { id?: unknown; x?: unknown; X?: unknown };
  try {
    req = JSON.parse(line);
  } catch {
    return { id: null, error: `unparseable request: ${line.slice(0, 80)}` };
  }
  if (req === null || typeof req !== "object") {
    return { id: null, error: "request must be a JSON object" };
  }
  const id = "id" in req ? req.id : null;
  try {
    if (req.X !== undefined) {
      if (!Array.isArray(req.X) || !req.X.every(isFiniteVector)) {
        return { id, error: "X must be an array of finite number rows" };
      }
      const F = req.X.map((row) => model.predict(row));
      if (!F.every(Number.isFinite)) {
        return { id, error: "model produced a non-finite value" };
      }
      return { id, F };
    }
    if (req.x !== undefined) {
      if (!isFiniteVector(req.x)) {
        return { id, error: "x must be an array of finite numbers" };
      }
      const f = model.predict(req.x);
      if (!Number.isFinite(f)) {
        return { id, error: "model produced a non-finite value" };
      }
      return { id, f };
    }
    return { id, error: "request needs an x vector or an X batch" };
  } catch (err) {
    return { id, error: err instanceof Error ? err.message : String(err) };
  }
}

/** Answer requests line by line until the input closes. */
export function serve(
  model: Model,
  input: Readable = process.stdin,
  output: Writable = process.stdout,
): Promise<void> {
  const rl = readline.createInterface({ input, terminal: false });
  rl.on("line", (line) => {
    if (line.trim() === "") {
      return;
    }
    output.write(JSON.stringify(handleLine(model, line)) + "\n");
  });
  return new Promise((resolve) => rl.once("close", resolve));
}
