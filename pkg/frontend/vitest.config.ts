import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the round-trip test drives a real server subprocess
    testTimeout: 90_000,
    hookTimeout: 30_000,
  },
});
