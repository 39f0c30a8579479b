/** End-to-end workbench flows against the running service: merge + refit,
 * impossible counterfactuals, distance-0 targets and render URLs.
 */

import { beforeAll, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { ViewState } from "../src/state.js";

const api = new Api(process.env.LIMETREE_SERVICE_URL ?? "http://127.0.0.1:8000");

let sessionId: string;

beforeAll(async () => {
  sessionId = (await api.createDemo()).id;
  await api.fit(sessionId, {});
});

describe("workbench flows", () => {
  it("serves occlusion renders for the current pattern", async () => {
    const state = await ViewState.open(api, sessionId);
    await state.toggleSegment(2);
    const resp = await fetch(api.renderUrl(sessionId, state.bits));
    expect(resp.status).toBe(200);
    expect(resp.headers.get("content-type")).toBe("image/png");
  });

  it("target = current argmax yields one card at distance 0", async () => {
    const state = await ViewState.open(api, sessionId);
    const gallery = await state.submitCounterfactual({
      type: "argmax_is",
      class: 0, // the anchor's argmax on the demo table
    });
    expect(gallery.distance).toBe(0);
    expect(gallery.cards.map((c) => c.bits)).toEqual([[1, 1, 1]]);
  });

  it("freezing the decisive segment makes the query impossible", async () => {
    const state = await ViewState.open(api, sessionId);
    state.setMark(0, "despite");
    const gallery = await state.submitCounterfactual({
      type: "argmax_is",
      class: 1,
    });
    expect(gallery.impossible).toBe(true);
  });

  it("tree document exposes leaf thumbnails", async () => {
    const doc = await api.treeDoc(sessionId);
    const leaves = doc.nodes.filter((n) => n.kind === "leaf");
    expect(leaves.length).toBe(8);
    for (const leaf of leaves) {
      expect(leaf.thumbnail).toMatch(/\/render\/[01]{3}\.png$/);
    }
  });

  it("merge invalidates, then a refit shrinks the importance panel", async () => {
    // dedicated session: this flow mutates the segmentation
    const fresh = (await api.createDemo()).id;
    await api.fit(fresh, {});
    const state = await ViewState.open(api, fresh);
    const invalidated = await state.mergeMode([1, 2, 2]);
    expect(invalidated).toBe(true);
    expect(state.d).toBe(2);
    expect(state.needsRefit).toBe(true);
    await state.refit();
    const importance = await api.importance(fresh);
    expect(importance.importance).toHaveLength(2);
    expect(importance.importance[0]).toBeCloseTo(1.0, 10);
  });
});
