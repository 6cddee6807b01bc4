/**
 * Reader/writer for the engine's corpus manifest layout: a directory holding
 * manifest.json plus pages/regions/queries JSONL files.
 */

import { readFileSync, writeFileSync } from 'node:fs';
import { join, dirname } from 'node:path';

export interface PageRow {
  id: string;
  doc_id: string;
  image_ref: string | null;
  ocr_text: string;
  caption: string;
}

export interface RegionRow {
  id: string;
  page_id: string;
  bbox: [number, number, number, number];
  image_ref: string | null;
}

export interface QueryRow {
  id: string;
  text: string | null;
  image_ref: string | null;
  instruction: string | null;
  ground_truth: string[];
}

export interface CorpusFiles {
  baseDir: string;
  version: number;
  pages: PageRow[];
  regions: RegionRow[];
  queries: QueryRow[];
}

function readJsonl<T>(path: string): T[] {
  const rows: T[] = [];
  for (const line of readFileSync(path, 'utf-8').split('\n')) {
    if (line.trim().length === 0) continue;
    rows.push(JSON.parse(line) as T);
  }
  return rows;
}

export function writeJsonl(path: string, rows: unknown[]): void {
  writeFileSync(path, rows.map((r) => JSON.stringify(r)).join('\n') + (rows.length ? '\n' : ''));
}

/** Load a corpus from its directory or its manifest.json path. */
export function loadCorpus(manifestPath: string): CorpusFiles {
  const path = manifestPath.endsWith('.json') ? manifestPath : join(manifestPath, 'manifest.json');
  const manifest = JSON.parse(readFileSync(path, 'utf-8')) as {
    version: number;
    pages: string;
    regions: string;
    queries: string;
  };
  const baseDir = dirname(path);
  return {
    baseDir,
    version: manifest.version,
    pages: readJsonl<PageRow>(join(baseDir, manifest.pages)),
    regions: readJsonl<RegionRow>(join(baseDir, manifest.regions)),
    queries: readJsonl<QueryRow>(join(baseDir, manifest.queries)),
  };
}
