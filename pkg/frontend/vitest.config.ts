import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    testTimeout: 60_000,
    hookTimeout: 60_000,
    // The integration test spawns a real service process; keep files
    // sequential so two tests never race for the same port or CPU.
    fileParallelism: false,
  },
});
