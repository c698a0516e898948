/**
 * convert --input <dir> --name {cora|citeseer|pubmed} --output <dir>
 *
 * Reads a legacy bundle, writes the portable dataset directory, and
 * prints the conversion report as JSON. Exit codes: 0 success, 1
 * conversion or I/O failure, 2 usage error.
 */

import { writeDatasetDir } from "./datasetdir";
import { ConvertError, convert, DATASET_NAMES, DatasetName } from "./planetoid";

const USAGE =
  "usage: convert --input <dir> --name {cora|citeseer|pubmed} --output <dir>";

function usageError(message: string): never {
  process.stderr.write(`${message}\n${USAGE}\n`);
  process.exit(2);
}

interface Args {
  input: string;
  name: DatasetName;
  output: string;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0 || argv[0] !== "convert") {
    usageError("expected the convert subcommand");
  }
  const options = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    if (!["--input", "--name", "--output"].includes(flag)) {
      usageError(`unknown option ${flag}`);
    }
    if (i + 1 >= argv.length) usageError(`${flag} needs a value`);
    if (options.has(flag)) usageError(`${flag} given twice`);
    options.set(flag, argv[i + 1]);
  }
  for (const flag of ["--input", "--name", "--output"]) {
    if (!options.has(flag)) usageError(`${flag} is required`);
  }
  const name = options.get("--name")!;
  if (!(DATASET_NAMES as readonly string[]).includes(name)) {
    usageError(`--name must be one of ${DATASET_NAMES.join(", ")}, got ${name}`);
  }
  return {
    input: options.get("--input")!,
    name: name as DatasetName,
    output: options.get("--output")!,
  };
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  try {
    const dataset = convert(args.input, args.name);
    const report = writeDatasetDir(dataset, args.output);
    process.stdout.write(JSON.stringify(report, null, 2) + "\n");
    return 0;
  } catch (err) {
    if (err instanceof ConvertError || (err as NodeJS.ErrnoException).code !== undefined) {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
