/** DOM glue: renders the workbench panels and wires them to ViewState.
 * Deliberately framework-free; every panel re-renders from state after
 * each interaction.
 */

import { Api, CounterfactualTarget, TreeDoc } from "./api.js";
import { CounterfactualGallery, ViewState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class Workbench {
  private root: HTMLElement;
  private state!: ViewState;

  constructor(
    private readonly api: Api,
    rootId = "app",
  ) {
    const root = document.getElementById(rootId);
    if (!root) throw new Error(`missing #${rootId} mount point`);
    this.root = root;
  }

  async start(sessionId?: string): Promise<void> {
    const id = sessionId ?? (await this.api.createDemo()).id;
    this.state = await ViewState.open(this.api, id);
    if (this.state.needsRefit) {
      await this.state.refit();
    }
    this.render();
  }

  private render(): void {
    this.root.replaceChildren(
      this.segmentPanel(),
      this.probabilityPanel(),
      this.counterfactualPanel(),
      this.historyPanel(),
    );
    void this.treePanel();
  }

  private segmentPanel(): HTMLElement {
    const panel = el("section", "segments");
    panel.appendChild(el("h2", undefined, "Segments"));
    const preview = el("img", "occlusion-preview") as HTMLImageElement;
    preview.src = this.api.renderUrl(this.state.sessionId, this.state.bits);
    panel.appendChild(preview);
    if (this.state.needsRefit) {
      panel.appendChild(
        el("div", "banner", "segmentation changed; refit required"),
      );
    }
    for (let i = 0; i < this.state.d; i++) {
      const row = el("div", "segment-row");
      const toggle = el(
        "button",
        this.state.bits[i] ? "preserved" : "occluded",
        `segment ${i}: ${this.state.bits[i] ? "visible" : "occluded"}`,
      );
      toggle.onclick = () => {
        this.state
          .toggleSegment(i)
          .then(() => this.render())
          .catch(() => this.render()); // rollback already applied; repaint
      };
      row.appendChild(toggle);
      const mark = el("select") as HTMLSelectElement;
      for (const value of ["none", "given-1", "given-0", "despite"]) {
        const option = el("option", undefined, value) as HTMLOptionElement;
        option.value = value;
        mark.appendChild(option);
      }
      mark.value = this.state.marks[i];
      mark.onchange = () => {
        this.state.setMark(i, mark.value as never);
      };
      row.appendChild(mark);
      panel.appendChild(row);
    }
    if (this.state.lastError) {
      panel.appendChild(el("div", "toast", this.state.lastError));
    }
    return panel;
  }

  private probabilityPanel(): HTMLElement {
    const panel = el("section", "probabilities");
    panel.appendChild(el("h2", undefined, "Probabilities"));
    const probs = this.state.probabilities;
    if (!probs) {
      panel.appendChild(el("p", undefined, "no fit yet"));
      return panel;
    }
    probs.forEach((p, i) => {
      const row = el("div", "prob-row");
      const label = this.state.classes[i] ?? i;
      row.appendChild(el("span", undefined, `class ${label}`));
      const bar = el("div", "bar");
      bar.style.width = `${Math.round(p * 100)}%`;
      bar.title = p.toFixed(4);
      row.appendChild(bar);
      panel.appendChild(row);
    });
    return panel;
  }

  private counterfactualPanel(): HTMLElement {
    const panel = el("section", "counterfactual");
    panel.appendChild(el("h2", undefined, "Why not ...?"));
    const classInput = el("input") as HTMLInputElement;
    classInput.type = "number";
    classInput.value = "0";
    const contrast = el("select") as HTMLSelectElement;
    for (const value of ["argmax_is", "argmax_not"]) {
      const option = el("option", undefined, value) as HTMLOptionElement;
      option.value = value;
      contrast.appendChild(option);
    }
    const submit = el("button", undefined, "ask");
    const gallery = el("div", "gallery");
    submit.onclick = () => {
      const target: CounterfactualTarget = {
        type: contrast.value as CounterfactualTarget["type"],
        class: Number(classInput.value),
      };
      this.state
        .submitCounterfactual(target)
        .then((cards) => this.renderGallery(gallery, cards))
        .catch((err) => {
          gallery.replaceChildren(el("div", "toast", String(err)));
        });
    };
    panel.append(classInput, contrast, submit, gallery);
    return panel;
  }

  private renderGallery(
    mount: HTMLElement,
    gallery: CounterfactualGallery,
  ): void {
    mount.replaceChildren();
    if (gallery.impossible) {
      mount.appendChild(
        el("div", "card impossible", "impossible under these constraints"),
      );
      return;
    }
    for (const card of gallery.cards) {
      const node = el("div", "card");
      const img = el("img") as HTMLImageElement;
      img.src = card.render;
      node.appendChild(img);
      node.appendChild(el("span", "badge", `distance ${card.distance}`));
      node.appendChild(el("code", undefined, card.bits.join("")));
      mount.appendChild(node);
    }
  }

  private async treePanel(): Promise<void> {
    let doc: TreeDoc;
    try {
      doc = await this.api.treeDoc(this.state.sessionId);
    } catch {
      return; // no fit yet; panel simply absent
    }
    const panel = el("section", "tree");
    panel.appendChild(
      el("h2", undefined, `Surrogate (${doc.variant}, depth ${doc.depth})`),
    );
    const renderNode = (id: number, depth: number): HTMLElement => {
      const node = doc.nodes[id];
      const details = el("details") as HTMLDetailsElement;
      details.open = depth < 2;
      if (node.kind === "split") {
        const summary = el("summary", undefined, `segment ${node.feature}?`);
        details.appendChild(summary);
        details.appendChild(renderNode(node.left!, depth + 1));
        details.appendChild(renderNode(node.right!, depth + 1));
      } else {
        const summary = el("summary", undefined, `leaf ${id}`);
        details.appendChild(summary);
        const img = el("img", "thumb") as HTMLImageElement;
        img.src = this.api.baseUrl.replace(/\/$/, "") + node.thumbnail!;
        details.appendChild(img);
        details.appendChild(
          el(
            "code",
            undefined,
            (node.prediction ?? []).map((p) => p.toFixed(3)).join(" "),
          ),
        );
      }
      return details;
    };
    panel.appendChild(renderNode(0, 0));
    this.root.appendChild(panel);
  }

  private historyPanel(): HTMLElement {
    const panel = el("section", "history");
    panel.appendChild(el("h2", undefined, "History"));
    const list = el("ol");
    for (const entry of this.state.history.slice().reverse()) {
      list.appendChild(el("li", entry.kind, entry.summary));
    }
    panel.appendChild(list);
    return panel;
  }
}

declare global {
  interface Window {
    limetreeWorkbench?: Workbench;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const base =
    new URLSearchParams(window.location.search).get("service") ??
    "http://127.0.0.1:8000";
  const bench = new Workbench(new Api(base));
  window.limetreeWorkbench = bench;
  void bench.start();
}
