import { defineConfig } from "vitest/config";

const servicePaths = [
  "/tasks",
  "/questions",
  "/annotations",
  "/verdicts",
  "/records",
  "/stats",
  "/workers",
];

export default defineConfig({
  server: {
    port: 5173,
    proxy: Object.fromEntries(
      servicePaths.map((path) => [
        path,
        { target: process.env.TRMR_SERVICE_URL ?? "http://127.0.0.1:8000", changeOrigin: true },
      ]),
    ),
  },
  test: {
    environment: "node",
    testTimeout: 120000,
    hookTimeout: 120000,
  },
});
