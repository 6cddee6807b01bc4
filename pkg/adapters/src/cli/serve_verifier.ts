/**
 * Run the verifier server until interrupted.
 *
 * Usage:
 *   node dist/cli/serve_verifier.js --model hash:64 --listen 127.0.0.1:8742
 */

import { parseArgs } from 'node:util';

import { serveVerifier } from '../verifier.js';

const { values } = parseArgs({
  options: {
    model: { type: 'string' },
    listen: { type: 'string', default: '127.0.0.1:8742' },
  },
});

if (!values.model) {
  console.error('required: --model');
  process.exit(1);
}

serveVerifier(values.model, values.listen!).catch((error) => {
  console.error(String(error));
  process.exit(2);
});
