import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["src/**/*.test.ts"],
    environment: "node",
    // Training tests run a real (tiny) fit loop on the CPU backend.
    testTimeout: 180_000,
    hookTimeout: 60_000,
  },
});
