/**
 * Fill empty page captions and emit an updated pages.jsonl.
 */

import { loadBackend } from './backends.js';
import { loadCorpus, writeJsonl, type PageRow } from './corpus.js';

/** Caption every page whose caption is empty; existing captions are kept. */
export function captionPages(manifestPath: string, modelId: string, outPath: string): PageRow[] {
  const backend = loadBackend(modelId);
  const corpus = loadCorpus(manifestPath);
  const updated = corpus.pages.map((page) => ({
    ...page,
    caption:
      page.caption.length > 0
        ? page.caption
        : backend.caption(page.id, page.doc_id, page.ocr_text, page.image_ref),
  }));
  writeJsonl(outPath, updated);
  const filled = updated.filter((p, i) => corpus.pages[i].caption.length === 0).length;
  console.log(`captioned ${filled} of ${updated.length} pages -> ${outPath}`);
  return updated;
}
