import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // integration tests spawn the Python app server and run realtime
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
