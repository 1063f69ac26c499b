/**
 * Process-boundary plumbing: how the bindings reach the renderer CLI.
 *
 * The default command is `python3 -m multidepth`; set MULTIDEPTH_CLI
 * (whitespace-separated, e.g. "python3 -m multidepth" or an absolute
 * script path) to point somewhere else.
 */

import { spawn } from "node:child_process";

export interface CliResult {
  stdout: string;
  stderr: string;
}

export function cliCommand(): string[] {
  const override = process.env.MULTIDEPTH_CLI;
  if (override && override.trim().length > 0) {
    return override.trim().split(/\s+/);
  }
  return ["python3", "-m", "multidepth"];
}

/** Run one CLI subcommand; rejects with stderr attached on failure. */
export function runCli(
  args: string[],
  options: { cwd?: string } = {},
): Promise<CliResult> {
  const [command, ...base] = cliCommand();
  return new Promise((resolve, reject) => {
    const child = spawn(command, [...base, ...args], {
      cwd: options.cwd,
      stdio: ["ignore", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    child.stdout.setEncoding("utf8");
    child.stderr.setEncoding("utf8");
    child.stdout.on("data", (chunk: string) => {
      stdout += chunk;
    });
    child.stderr.on("data", (chunk: string) => {
      stderr += chunk;
    });
    child.on("error", (err) => {
      reject(new Error(`failed to launch ${command}: ${err.message}`));
    });
    child.on("close", (code) => {
      if (code === 0) {
        resolve({ stdout, stderr });
      } else {
        reject(
          new Error(
            `${command} ${[...base, ...args].join(" ")} exited with ` +
              `code ${code}\n${stderr.trim()}`,
          ),
        );
      }
    });
  });
}
