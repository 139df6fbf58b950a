import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, `${name}.json`), "utf-8")) as T;
}

export interface RecordedCall {
  key: string; // "METHOD /path"
  query: URLSearchParams;
  headers: Record<string, string>;
  body?: unknown;
}

export interface RouteReply {
  status?: number;
  body: unknown;
  headers?: Record<string, string>;
}

type Router = Record<string, (call: RecordedCall) => RouteReply>;

// fetch stand-in routed by "METHOD /path"; records every call it serves.
export function routedFetch(routes: Router, calls: RecordedCall[]) {
  return async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, "http://fixture.test");
    const call: RecordedCall = {
      key: `${init?.method ?? "GET"} ${url.pathname}`,
      query: url.searchParams,
      headers: Object.fromEntries(
        Object.entries((init?.headers ?? {}) as Record<string, string>),
      ),
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    };
    calls.push(call);
    const route = routes[call.key];
    if (!route) throw new Error(`no route for ${call.key}`);
    const { status = 200, body, headers = {} } = route(call);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json", ...headers },
    });
  };
}
