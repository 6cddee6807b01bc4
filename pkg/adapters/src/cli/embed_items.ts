/**
 * Embed one corpus channel into an engine-ready JSONL file.
 *
 * Usage:
 *   node dist/cli/embed_items.js --model hash:64 --manifest corpus/ \
 *     --out embeddings.jsonl --channel ocr_text/text/single \
 *     [--batch-size 32] [--instruction "Represent the question"]
 */

import { parseArgs } from 'node:util';

import { embedItems } from '../embed.js';

const { values } = parseArgs({
  options: {
    model: { type: 'string' },
    manifest: { type: 'string' },
    out: { type: 'string' },
    channel: { type: 'string' },
    'batch-size': { type: 'string', default: '32' },
    instruction: { type: 'string' },
  },
});

if (!values.model || !values.manifest || !values.out || !values.channel) {
  console.error('required: --model --manifest --out --channel');
  process.exit(1);
}

try {
  embedItems({
    modelId: values.model,
    manifestPath: values.manifest,
    outPath: values.out,
    channel: values.channel,
    batchSize: Number(values['batch-size']),
    instruction: values.instruction,
  });
} catch (error) {
  console.error(String(error));
  process.exit(2);
}
