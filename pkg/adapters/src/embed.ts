/**
 * Batch embedding jobs: one corpus + one channel -> one engine-ready JSONL
 * file, one record per item, in corpus order.
 */

import { writeFileSync } from 'node:fs';

import { loadBackend } from './backends.js';
import { loadCorpus, type CorpusFiles, type QueryRow } from './corpus.js';
import {
  channelToString,
  parseChannel,
  recordsToJsonl,
  type Channel,
  type EmbeddingRecord,
} from './records.js';

export interface AdapterJob {
  modelId: string;
  manifestPath: string;
  outPath: string;
  channel: string;
  batchSize: number;
  instruction?: string;
}

interface Item {
  id: string;
  text: string;
  imageRef: string | null;
}

function queryText(query: QueryRow, instruction?: string): string {
  const parts = [instruction ?? query.instruction ?? '', query.text ?? ''];
  return parts.filter((p) => p.length > 0).join(' ');
}

/** Pick the items a channel embeds and the content each contributes. */
function itemsFor(corpus: CorpusFiles, channel: Channel, instruction?: string): Item[] {
  switch (channel.granularity) {
    case 'page':
      return corpus.pages.map((p) => ({ id: p.id, text: p.ocr_text, imageRef: p.image_ref }));
    case 'ocr_text':
      return corpus.pages.map((p) => ({ id: p.id, text: p.ocr_text, imageRef: null }));
    case 'caption':
      return corpus.pages.map((p) => ({ id: p.id, text: p.caption, imageRef: null }));
    case 'region':
      return corpus.regions.map((r) => ({
        id: r.id,
        text: `${r.page_id} ${r.bbox.join(' ')}`,
        imageRef: r.image_ref,
      }));
    case 'query':
      return corpus.queries.map((q) => ({
        id: q.id,
        text: queryText(q, instruction),
        imageRef: q.image_ref,
      }));
  }
}

/** Run one embedding job; returns the records it wrote. */
export function embedItems(job: AdapterJob): EmbeddingRecord[] {
  const channel = parseChannel(job.channel);
  const backend = loadBackend(job.modelId);
  const corpus = loadCorpus(job.manifestPath);
  const items = itemsFor(corpus, channel, job.instruction);
  if (job.batchSize < 1) throw new Error(`batch size must be positive, got ${job.batchSize}`);

  const records: EmbeddingRecord[] = [];
  for (let start = 0; start < items.length; start += job.batchSize) {
    for (const item of items.slice(start, start + job.batchSize)) {
      let vectors: number[][];
      if (channel.kind === 'multi') {
        vectors = backend.embedTextMulti(item.text, 8);
      } else if (channel.modality === 'image') {
        const ref = item.imageRef ?? item.id;
        vectors = [backend.embedImage(ref, corpus.baseDir)];
      } else if (channel.modality === 'multimodal') {
        const text = backend.embedText(item.text);
        const image = backend.embedImage(item.imageRef ?? item.id, corpus.baseDir);
        vectors = [normalizeMix(text.map((v, i) => v + image[i]))];
      } else {
        vectors = [backend.embedText(item.text)];
      }
      records.push({
        item_id: item.id,
        granularity: channel.granularity,
        modality: channel.modality,
        kind: channel.kind,
        vectors,
      });
    }
  }

  writeFileSync(job.outPath, recordsToJsonl(records));
  console.log(
    `embedded ${records.length} items into channel ${channelToString(channel)} -> ${job.outPath}`,
  );
  return records;
}

function normalizeMix(vector: number[]): number[] {
  let sumSquares = 0;
  for (const v of vector) sumSquares += v * v;
  if (sumSquares === 0) {
    const fallback = new Array<number>(vector.length).fill(0);
    fallback[0] = 1;
    return fallback;
  }
  const norm = Math.sqrt(sumSquares);
  return vector.map((v) => Math.fround(v / norm));
}
