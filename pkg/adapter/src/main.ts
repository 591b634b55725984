import { parseArgs } from "node:util";
import { loadModel, loadSchema, type Schema } from "./models.js";
import { serveStdio, serveTcp } from "./server.js";

const USAGE = `usage: main.js (--stdio | --port P) [--model NAME|PATH] [--schema FILE] [--n-features N]

--model     built-in "linear" or "stumps", or a path to a module whose default
            export is (nFeatures, columns?) => (row) => score  (default: linear)
--schema    feature schema JSON; supplies the arity and categorical levels
--n-features  arity when no schema file is given`;

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      stdio: { type: "boolean", default: false },
      port: { type: "string" },
      model: { type: "string", default: "linear" },
      schema: { type: "string" },
      "n-features": { type: "string" },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help) {
    console.log(USAGE);
    return;
  }
  if (!values.stdio && values.port === undefined) {
    console.error(USAGE);
    process.exit(2);
  }

  let schema: Schema | undefined;
  let nFeatures: number;
  if (values.schema) {
    schema = await loadSchema(values.schema);
    nFeatures = Object.keys(schema).length;
  } else if (values["n-features"]) {
    nFeatures = Number.parseInt(values["n-features"], 10);
  } else {
    console.error("either --schema or --n-features is required");
    process.exit(2);
    return;
  }
  if (!Number.isInteger(nFeatures) || nFeatures < 1) {
    console.error(`invalid feature count ${nFeatures}`);
    process.exit(2);
  }

  const model = await loadModel(values.model!, nFeatures, schema);
  const config = { model, nFeatures };
  if (values.stdio) {
    await serveStdio(config);
  } else {
    const server = serveTcp(config, Number.parseInt(values.port!, 10));
    server.on("listening", () => {
      const address = server.address();
      const port = typeof address === "object" && address ? address.port : values.port;
      console.error(`listening on ${port}`);
    });
  }
}

main().catch((err) => {
  console.error(`fatal: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
});
