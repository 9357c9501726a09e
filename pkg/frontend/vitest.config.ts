import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'jsdom',
    include: ['tests/**/*.test.ts'],
    // The end-to-end suite boots the Python backend, which takes a moment.
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
