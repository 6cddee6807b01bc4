/**
 * Model backends behind one interface.
 *
 * The bundled "hash:<dim>" family is a deterministic local stand-in: text is
 * feature-hashed token by token, images are digest-expanded from file bytes
 * (or from the ref string when the file is absent), and verification is
 * lexical overlap. Real encoder/captioner/VLM backends plug in behind the
 * same interface; they are intentionally not bundled because they need
 * model downloads.
 */

import { createHash } from 'node:crypto';
import { existsSync, readFileSync } from 'node:fs';

export interface VerifyRequest {
  query_text: string;
  prompt: string;
  candidate_id: string;
  ocr_text: string | null;
  caption: string | null;
  image_ref: string | null;
}

export interface ModelBackend {
  readonly modelId: string;
  readonly dim: number;
  /** One unit vector for a text. */
  embedText(text: string): number[];
  /** One unit vector for an image (resolved against baseDir when relative). */
  embedImage(ref: string, baseDir: string): number[];
  /** Token-level rows for late-interaction channels; at least one row. */
  embedTextMulti(text: string, maxRows: number): number[][];
  /** A short description of a page, derived from whatever content exists. */
  caption(pageId: string, docId: string, ocrText: string, imageRef: string | null): string;
  /** Raw Yes/No answer text for a verification request. */
  verify(request: VerifyRequest): string;
}

const MAX_MULTI_ROWS = 8;

function tokenize(text: string): string[] {
  return (text.toLowerCase().match(/[a-z0-9]+/g) ?? []).slice(0, 512);
}

function digest(...parts: (string | Buffer)[]): Buffer {
  const hash = createHash('sha256');
  for (const part of parts) hash.update(part);
  return hash.digest();
}

function normalize(vector: number[]): number[] {
  let sumSquares = 0;
  for (const v of vector) sumSquares += v * v;
  if (sumSquares === 0) {
    const fallback = new Array<number>(vector.length).fill(0);
    fallback[0] = 1;
    return fallback;
  }
  const norm = Math.sqrt(sumSquares);
  // round-trip through float32 so emitted decimals reload bit-exactly
  return vector.map((v) => Math.fround(v / norm));
}

/** Expand a digest into dim centered floats by counter-mode re-hashing. */
function expand(seed: Buffer, dim: number): number[] {
  const out: number[] = [];
  for (let counter = 0; out.length < dim; counter++) {
    const block = digest(seed, String(counter));
    for (let i = 0; i + 4 <= block.length && out.length < dim; i += 4) {
      out.push(block.readUInt32LE(i) / 0xffffffff - 0.5);
    }
  }
  return out;
}

class HashBackend implements ModelBackend {
  readonly modelId: string;
  readonly dim: number;

  constructor(modelId: string, dim: number) {
    this.modelId = modelId;
    this.dim = dim;
  }

  embedText(text: string): number[] {
    const accumulator = new Array<number>(this.dim).fill(0);
    for (const token of tokenize(text)) {
      const h = digest('tok', token);
      const index = h.readUInt32LE(0) % this.dim;
      const sign = (h[4] & 1) === 0 ? 1 : -1;
      accumulator[index] += sign;
    }
    return normalize(accumulator);
  }

  embedImage(ref: string, baseDir: string): number[] {
    const resolved = ref.startsWith('/') ? ref : `${baseDir}/${ref}`;
    const seed = existsSync(resolved)
      ? digest('img', readFileSync(resolved))
      : digest('imgref', ref);
    return normalize(expand(seed, this.dim));
  }

  embedTextMulti(text: string, maxRows: number = MAX_MULTI_ROWS): number[][] {
    const tokens = tokenize(text);
    const rows = tokens.slice(0, maxRows).map((token) => normalize(expand(digest('tok', token), this.dim)));
    if (rows.length === 0) rows.push(normalize(expand(digest('empty'), this.dim)));
    return rows;
  }

  caption(pageId: string, docId: string, ocrText: string, imageRef: string | null): string {
    const words = tokenize(ocrText).slice(0, 12);
    const gist = words.length > 0 ? `about ${words.join(' ')}` : 'with no recognized text';
    const visual = imageRef ? 'A scanned page' : 'A page';
    return `${visual} (${pageId} of ${docId}) ${gist}.`;
  }

  verify(request: VerifyRequest): string {
    const queryTokens = new Set(tokenize(request.query_text));
    if (queryTokens.size === 0) return 'No';
    const candidateTokens = new Set(
      tokenize(`${request.ocr_text ?? ''} ${request.caption ?? ''}`),
    );
    let overlap = 0;
    for (const token of queryTokens) if (candidateTokens.has(token)) overlap++;
    return overlap / queryTokens.size >= 1 / 3 ? 'Yes' : 'No';
  }
}

/**
 * Resolve a model id to a backend. "hash" and "hash:<dim>" are bundled;
 * anything else names a real model this offline build cannot load.
 */
export function loadBackend(modelId: string): ModelBackend {
  if (modelId === 'hash') return new HashBackend(modelId, 64);
  const match = modelId.match(/^hash:(\d+)$/);
  if (match) {
    const dim = Number(match[1]);
    if (dim < 1 || dim > 4096) throw new Error(`hash backend dim out of range: ${dim}`);
    return new HashBackend(modelId, dim);
  }
  throw new Error(
    `model "${modelId}" is not bundled; only the deterministic hash family ` +
      '(hash, hash:<dim>) ships with the adapters. Wire a real encoder behind ' +
      'the ModelBackend interface in backends.ts to use hosted models.',
  );
}
