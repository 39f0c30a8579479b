/** Typed client for the limetree explanation service.
 *
 * This module is the only place that talks HTTP; everything else consumes
 * the returned documents. All endpoints are JSON except the render
 * endpoint, which the UI uses as plain <img> sources.
 */

export interface SessionMeta {
  id: string;
  d: number;
  kind: "image" | "text";
  variants: string[];
  reports: FitReports | Record<string, never>;
  labels?: number[][];
}

export interface FitReports {
  classes: number[];
  anchor_probabilities: number[];
  variants: Record<string, unknown>;
}

export interface WhatIfAnswer {
  kind: "what_if";
  probabilities: number[];
  oracle: string;
  classes: number[];
  render: string;
}

export interface CounterfactualTarget {
  type: "argmax_is" | "argmax_not" | "prob_at_least";
  class: number;
  threshold?: number;
}

export interface CounterfactualAnswer {
  kind: "counterfactual";
  distance: number | null;
  points: number[][];
  impossible: boolean;
  renders: string[];
  constraints_echo: {
    given: Record<string, number>;
    despite: number[];
    target: unknown[];
  };
}

export interface ImportanceAnswer {
  kind: "importance";
  importance: number[];
  no_splits: boolean;
}

export interface TreeNodeDoc {
  id: number;
  kind: "split" | "leaf";
  feature?: number;
  left?: number;
  right?: number;
  prediction?: number[];
  support?: number;
  minimal_point?: number[];
  thumbnail?: string;
}

export interface TreeDoc {
  d: number;
  classes: number[];
  depth: number;
  width: number;
  variant: string;
  nodes: TreeNodeDoc[];
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
  get busy(): boolean {
    return this.status === 409;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail =
      typeof body === "object" && body !== null && "error" in body
        ? String((body as { error: unknown }).error)
        : resp.statusText;
    throw new ServiceError(resp.status, detail);
  }
  return body as T;
}

function post<T>(url: string, payload: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  });
}

export class Api {
  constructor(public readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  createDemo(): Promise<{ id: string; d: number }> {
    return post(this.url("/demo"), {});
  }

  getSession(id: string): Promise<SessionMeta> {
    return request(this.url(`/sessions/${id}`));
  }

  fit(id: string, options: Record<string, unknown> = {}): Promise<FitReports> {
    return post(this.url(`/sessions/${id}/fit`), options);
  }

  mergeSegments(
    id: string,
    groups: number[][],
  ): Promise<{ d: number; invalidated: boolean }> {
    return request(this.url(`/sessions/${id}/segmentation`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ merge: groups }),
    });
  }

  whatIf(id: string, bits: number[], oracle?: string): Promise<WhatIfAnswer> {
    return post(this.url(`/sessions/${id}/query`), {
      kind: "what_if",
      point: bits.join(""),
      ...(oracle ? { oracle } : {}),
    });
  }

  counterfactual(
    id: string,
    target: CounterfactualTarget,
    given: Record<number, number>,
    despite: number[],
  ): Promise<CounterfactualAnswer> {
    return post(this.url(`/sessions/${id}/query`), {
      kind: "counterfactual",
      target,
      given,
      despite,
    });
  }

  importance(id: string): Promise<ImportanceAnswer> {
    return post(this.url(`/sessions/${id}/query`), { kind: "importance" });
  }

  treeDoc(id: string): Promise<TreeDoc> {
    return request(this.url(`/sessions/${id}/tree`));
  }

  /** Absolute URL of the occluded rendering for a bit pattern. */
  renderUrl(id: string, bits: number[]): string {
    return this.url(`/sessions/${id}/render/${bits.join("")}.png`);
  }
}
