/**
 * Fill empty page captions and write the updated pages.jsonl.
 *
 * Usage:
 *   node dist/cli/caption_pages.js --model hash:64 --manifest corpus/ --out pages.jsonl
 */

import { parseArgs } from 'node:util';

import { captionPages } from '../caption.js';

const { values } = parseArgs({
  options: {
    model: { type: 'string' },
    manifest: { type: 'string' },
    out: { type: 'string' },
  },
});

if (!values.model || !values.manifest || !values.out) {
  console.error('required: --model --manifest --out');
  process.exit(1);
}

try {
  captionPages(values.manifest, values.model, values.out);
} catch (error) {
  console.error(String(error));
  process.exit(2);
}
