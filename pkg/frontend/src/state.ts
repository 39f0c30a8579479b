/** View-side session state: the occlusion pattern being displayed, the
 * per-segment constraint marks, and the query history.
 *
 * The invariant that matters: the probability row shown always belongs to
 * the occlusion pattern shown. Responses carry the sequence number of the
 * request that produced them and anything stale is discarded, so the pair
 * can be out of sync for at most one in-flight request.
 */

import {
  Api,
  CounterfactualAnswer,
  CounterfactualTarget,
  ServiceError,
} from "./api.js";

export type SegmentMark = "none" | "given-1" | "given-0" | "despite";

export interface HistoryEntry {
  kind: string;
  summary: string;
  at: number;
}

export interface CounterfactualCard {
  bits: number[];
  distance: number;
  render: string;
}

export interface CounterfactualGallery {
  impossible: boolean;
  distance: number | null;
  cards: CounterfactualCard[];
}

export class ViewState {
  /** 1 = segment preserved, 0 = occluded; starts at the anchor. */
  bits: number[];
  marks: SegmentMark[];
  probabilities: number[] | null = null;
  classes: number[] = [];
  history: HistoryEntry[] = [];
  needsRefit = false;
  lastError: string | null = null;

  private seq = 0;
  private appliedSeq = 0;

  constructor(
    private readonly api: Api,
    public readonly sessionId: string,
    public d: number,
  ) {
    this.bits = new Array(d).fill(1);
    this.marks = new Array(d).fill("none");
  }

  static async open(api: Api, sessionId: string): Promise<ViewState> {
    const meta = await api.getSession(sessionId);
    const state = new ViewState(api, sessionId, meta.d);
    if (meta.variants.length === 0) {
      state.needsRefit = true;
    }
    return state;
  }

  get atAnchor(): boolean {
    return this.bits.every((b) => b === 1);
  }

  /** Flip one segment and refresh the probability row via a what-if
   * query. Stale responses are dropped; failures roll the bit back. */
  async toggleSegment(segment: number): Promise<void> {
    this.checkSegment(segment);
    if (this.marks[segment] === "despite") {
      throw new Error(
        `segment ${segment} is marked despite; unmark it before toggling`,
      );
    }
    const previous = this.bits[segment];
    this.bits[segment] = previous === 1 ? 0 : 1;
    const mySeq = ++this.seq;
    try {
      const answer = await this.api.whatIf(this.sessionId, [...this.bits]);
      if (mySeq < this.appliedSeq) {
        return; // a newer toggle already repainted the panel
      }
      this.appliedSeq = mySeq;
      this.probabilities = answer.probabilities;
      this.classes = answer.classes;
      this.lastError = null;
      this.record("what_if", `toggled #${segment} -> ${this.bits.join("")}`);
    } catch (err) {
      this.bits[segment] = previous;
      this.lastError = err instanceof Error ? err.message : String(err);
      throw err;
    }
  }

  /** Cycle or set the constraint mark for a segment; given and despite
   * are mutually exclusive by construction (one slot per segment). */
  setMark(segment: number, mark: SegmentMark): void {
    this.checkSegment(segment);
    this.marks[segment] = mark;
  }

  givenConstraints(): Record<number, number> {
    const given: Record<number, number> = {};
    this.marks.forEach((mark, i) => {
      if (mark === "given-1") given[i] = 1;
      if (mark === "given-0") given[i] = 0;
    });
    return given;
  }

  despiteConstraints(): number[] {
    return this.marks
      .map((mark, i) => (mark === "despite" ? i : -1))
      .filter((i) => i >= 0);
  }

  /** Ask the service for all minimal counterfactuals under the current
   * marks and re-check every returned card client-side. */
  async submitCounterfactual(
    target: CounterfactualTarget,
  ): Promise<CounterfactualGallery> {
    const given = this.givenConstraints();
    const despite = this.despiteConstraints();
    const answer = await this.api.counterfactual(
      this.sessionId,
      target,
      given,
      despite,
    );
    const gallery = this.toGallery(answer);
    for (const card of gallery.cards) {
      this.assertSatisfies(card.bits, given, despite);
    }
    this.record(
      "counterfactual",
      answer.impossible
        ? "impossible under these constraints"
        : `${gallery.cards.length} card(s) at distance ${answer.distance}`,
    );
    return gallery;
  }

  /** Merge the selected segments; an empty or singleton selection is a
   * cancelled gesture and issues no request. */
  async mergeMode(selection: number[]): Promise<boolean> {
    const unique = [...new Set(selection)];
    if (unique.length < 2) {
      return false;
    }
    unique.forEach((s) => this.checkSegment(s));
    try {
      const result = await this.api.mergeSegments(this.sessionId, [unique]);
      this.d = result.d;
      this.bits = new Array(this.d).fill(1);
      this.marks = new Array(this.d).fill("none");
      this.probabilities = null;
      this.needsRefit = result.invalidated;
      this.record("merge", `merged [${unique.join(",")}] -> d=${this.d}`);
      return result.invalidated;
    } catch (err) {
      if (err instanceof ServiceError && err.busy) {
        this.lastError = "a fit or merge is already in flight";
      } else {
        this.lastError = err instanceof Error ? err.message : String(err);
      }
      throw err;
    }
  }

  async refit(options: Record<string, unknown> = {}): Promise<void> {
    const reports = await this.api.fit(this.sessionId, options);
    this.classes = reports.classes;
    this.probabilities = reports.anchor_probabilities;
    this.needsRefit = false;
    this.record("fit", `fitted for classes [${reports.classes.join(",")}]`);
  }

  private toGallery(answer: CounterfactualAnswer): CounterfactualGallery {
    return {
      impossible: answer.impossible,
      distance: answer.distance,
      cards: answer.points.map((bits, i) => ({
        bits,
        distance: answer.distance ?? 0,
        render: answer.renders[i],
      })),
    };
  }

  private assertSatisfies(
    bits: number[],
    given: Record<number, number>,
    despite: number[],
  ): void {
    for (const [feature, value] of Object.entries(given)) {
      if (bits[Number(feature)] !== value) {
        throw new Error(`card violates given constraint on segment ${feature}`);
      }
    }
    for (const feature of despite) {
      if (bits[feature] !== 1) {
        throw new Error(`card violates despite constraint on segment ${feature}`);
      }
    }
  }

  private record(kind: string, summary: string): void {
    this.history.push({ kind, summary, at: Date.now() });
  }

  private checkSegment(segment: number): void {
    if (!Number.isInteger(segment) || segment < 0 || segment >= this.d) {
      throw new Error(`segment ${segment} out of range 0..${this.d - 1}`);
    }
  }
}
