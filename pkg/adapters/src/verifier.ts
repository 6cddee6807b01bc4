/**
 * Live verifier server implementing the engine's wire contract:
 *
 *   POST /verify
 *     {"query_text", "prompt", "candidate_id", "ocr_text", "caption", "image_ref"}
 *     -> 200 {"answer": "..."}
 *   GET /health -> 200 {"status": "ok"}
 *
 * Malformed bodies get 400, unknown routes 404, backend failures 500.
 */

import { createServer, type IncomingMessage, type Server, type ServerResponse } from 'node:http';
import type { AddressInfo } from 'node:net';

import { loadBackend, type ModelBackend, type VerifyRequest } from './backends.js';

function sendJson(response: ServerResponse, status: number, body: unknown): void {
  const payload = JSON.stringify(body);
  response.writeHead(status, {
    'Content-Type': 'application/json',
    'Content-Length': Buffer.byteLength(payload),
  });
  response.end(payload);
}

function readBody(request: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    request.on('data', (chunk) => chunks.push(chunk));
    request.on('end', () => resolve(Buffer.concat(chunks).toString('utf-8')));
    request.on('error', reject);
  });
}

function parseVerifyRequest(raw: string): VerifyRequest | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof parsed !== 'object' || parsed === null) return null;
  const body = parsed as Record<string, unknown>;
  if (typeof body.candidate_id !== 'string' || typeof body.prompt !== 'string') return null;
  if (typeof body.query_text !== 'string') return null;
  const optional = (v: unknown): v is string | null => v === null || typeof v === 'string';
  if (!optional(body.ocr_text ?? null) || !optional(body.caption ?? null) || !optional(body.image_ref ?? null)) {
    return null;
  }
  return {
    query_text: body.query_text,
    prompt: body.prompt,
    candidate_id: body.candidate_id,
    ocr_text: (body.ocr_text ?? null) as string | null,
    caption: (body.caption ?? null) as string | null,
    image_ref: (body.image_ref ?? null) as string | null,
  };
}

export function createVerifierServer(backend: ModelBackend): Server {
  return createServer(async (request, response) => {
    if (request.method === 'GET' && request.url === '/health') {
      sendJson(response, 200, { status: 'ok', model: backend.modelId });
      return;
    }
    if (request.method !== 'POST' || request.url !== '/verify') {
      sendJson(response, 404, { error: 'not found' });
      return;
    }
    const body = parseVerifyRequest(await readBody(request));
    if (body === null) {
      sendJson(response, 400, { error: 'malformed verify request' });
      return;
    }
    try {
      sendJson(response, 200, { answer: backend.verify(body) });
    } catch (error) {
      sendJson(response, 500, { error: String(error) });
    }
  });
}

/** Start serving on host:port; resolves once the socket is listening. */
export function serveVerifier(modelId: string, listenAddr: string): Promise<Server> {
  const backend = loadBackend(modelId);
  const separator = listenAddr.lastIndexOf(':');
  if (separator < 0) throw new Error(`listen address must be host:port, got ${listenAddr}`);
  const host = listenAddr.slice(0, separator);
  const port = Number(listenAddr.slice(separator + 1));
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`bad port in listen address: ${listenAddr}`);
  }
  const server = createVerifierServer(backend);
  return new Promise((resolve, reject) => {
    server.once('error', reject);
    server.listen(port, host, () => {
      const bound = (server.address() as AddressInfo).port;
      console.log(`verifier (${modelId}) listening on ${host}:${bound}`);
      resolve(server);
    });
  });
}
