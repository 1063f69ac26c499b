import { defineConfig } from "vitest/config";

// Tests spawn the multidepth CLI (a Python process) for reference
// outputs, so per-test budgets are generous.
export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
