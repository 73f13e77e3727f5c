/// <reference types="vitest/config" />
import react from "@vitejs/plugin-react";
import { defineConfig } from "vite";

export default defineConfig({
  plugins: [react()],
  test: {
    setupFiles: ["tests/setup.ts"],
    environment: "jsdom",
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
