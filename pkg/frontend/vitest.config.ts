import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the e2e test spawns a python fixture server and waits on real sockets;
    // keep files sequential so it never competes with other workers for CPU
    fileParallelism: false,
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
