import { defineConfig } from "vitest/config";

// The integration suite talks to a live service process; running test
// files in parallel starves its frame stream, so keep files sequential.
export default defineConfig({
  test: {
    fileParallelism: false,
  },
});
