/**
 * Embedding record shape shared with the engine's JSONL format, plus the
 * channel triple parser ("granularity/modality/kind").
 */

export const GRANULARITIES = ['page', 'region', 'ocr_text', 'caption', 'query'] as const;
export const MODALITIES = ['image', 'text', 'multimodal'] as const;
export const KINDS = ['single', 'multi'] as const;

export type Granularity = (typeof GRANULARITIES)[number];
export type Modality = (typeof MODALITIES)[number];
export type Kind = (typeof KINDS)[number];

export interface Channel {
  granularity: Granularity;
  modality: Modality;
  kind: Kind;
}

export interface EmbeddingRecord {
  item_id: string;
  granularity: Granularity;
  modality: Modality;
  kind: Kind;
  vectors: number[][];
}

export function parseChannel(spec: string): Channel {
  const parts = spec.split('/');
  if (parts.length !== 3) {
    throw new Error(`channel must be granularity/modality/kind, got: ${spec}`);
  }
  const [granularity, modality, kind] = parts;
  if (!GRANULARITIES.includes(granularity as Granularity)) {
    throw new Error(`unknown granularity: ${granularity}`);
  }
  if (!MODALITIES.includes(modality as Modality)) {
    throw new Error(`unknown modality: ${modality}`);
  }
  if (!KINDS.includes(kind as Kind)) {
    throw new Error(`unknown kind: ${kind}`);
  }
  return {
    granularity: granularity as Granularity,
    modality: modality as Modality,
    kind: kind as Kind,
  };
}

export function channelToString(channel: Channel): string {
  return `${channel.granularity}/${channel.modality}/${channel.kind}`;
}

/** Serialize records the way the engine's JSONL codec expects them. */
export function recordsToJsonl(records: EmbeddingRecord[]): string {
  return records.map((r) => JSON.stringify(r)).join('\n') + (records.length ? '\n' : '');
}
