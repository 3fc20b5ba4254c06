/**
 * Teaching playground view: candidates with signed certainty bars, grade
 * buttons, next-problem suggestions, ambiguity sparkline and the training
 * completion indicator.
 *
 * The app is stateless beyond the session id: every render reflects the
 * latest server responses, and a reload rebuilds the whole view from
 * GET /sessions/{id}/state.
 */

import {
  ApiError,
  CandidateReport,
  SessionState,
  SuggestResult,
  TeachingApi,
} from "./api";

interface Badge {
  changed: boolean;
  before: number;
  after: number;
}

interface ErrorBanner {
  message: string;
  retry: () => Promise<void>;
}

export class TeachingApp {
  sessionId: string | null = null;
  state: SessionState | null = null;
  candidates: CandidateReport[] = [];
  suggestion: SuggestResult | null = null;
  badge: Badge | null = null;
  banner: ErrorBanner | null = null;
  onSession: (id: string) => void = () => undefined;
  pending: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: TeachingApi,
    private readonly doc: Document = document,
  ) {}

  async start(sessionId?: string): Promise<void> {
    if (sessionId) {
      this.sessionId = sessionId;
      await this.refresh();
    } else {
      this.render();
    }
  }

  async createSession(nFeatures: number): Promise<void> {
    await this.guard(async () => {
      const features = Array.from({ length: nFeatures }, (_, i) => ({
        name: `X${i + 1}`,
        domain: ["0", "1"],
      }));
      const { id } = await this.api.createSession({ features });
      this.sessionId = id;
      this.onSession(id);
      await this.loadState();
    });
  }

  async refresh(): Promise<void> {
    await this.guard(async () => {
      await this.loadState();
      await this.rescoreCandidates();
    });
  }

  async requestSuggestion(): Promise<void> {
    await this.guard(async () => {
      const id = this.requireSession();
      this.suggestion = await this.api.suggestNext(id);
      this.badge = null;
      const values = this.suggestion.problem.states.flat().map((c) => c.values);
      const scored = await this.api.scoreCandidates(
        id,
        values.map((v) => ({ values: v })),
      );
      this.candidates = scored.candidates;
      await this.loadState();
    });
  }

  async grade(index: number, verdict: 0 | 1): Promise<void> {
    await this.guard(async () => {
      const id = this.requireSession();
      const candidate = this.candidates[index];
      if (!candidate) throw new Error(`no candidate at index ${index}`);
      const result = await this.api.submitLabel(id, candidate.values, verdict);
      this.badge = {
        changed: result.changed,
        before: result.ambiguity_before,
        after: result.ambiguity_after,
      };
      await this.rescoreCandidates();
      await this.loadState();
    });
  }

  private requireSession(): string {
    if (!this.sessionId) throw new Error("no active session");
    return this.sessionId;
  }

  private async loadState(): Promise<void> {
    this.state = await this.api.getState(this.requireSession());
    this.render();
  }

  private async rescoreCandidates(): Promise<void> {
    if (!this.candidates.length) return;
    const scored = await this.api.scoreCandidates(
      this.requireSession(),
      this.candidates.map((c) => ({ values: c.values })),
    );
    this.candidates = scored.candidates;
  }

  private async guard(work: () => Promise<void>): Promise<void> {
    const task = async () => {
      try {
        this.banner = null;
        await work();
      } catch (err) {
        const message =
          err instanceof ApiError
            ? `service error: ${err.message}`
            : `service unreachable: ${String(err)}`;
        this.banner = { message, retry: () => this.guard(work) };
      }
      this.render();
    };
    this.pending = this.pending.then(task, task);
    await this.pending;
  }

  // ------------------------------------------------------------- rendering

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    attrs: Record<string, string> = {},
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = this.doc.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
    if (text !== undefined) node.textContent = text;
    return node;
  }

  render(): void {
    this.root.replaceChildren();
    if (this.banner) this.root.appendChild(this.renderBanner(this.banner));
    if (!this.sessionId) {
      this.root.appendChild(this.renderCreateForm());
      return;
    }
    this.root.appendChild(this.renderHeader());
    if (this.badge) this.root.appendChild(this.renderBadge(this.badge));
    if (this.suggestion?.complete) {
      this.root.appendChild(
        this.el(
          "div",
          { class: "complete", "data-testid": "complete-indicator" },
          "Training complete: every pool problem is fully certain",
        ),
      );
    }
    this.root.appendChild(this.renderSuggestPanel());
    this.root.appendChild(this.renderCandidates());
    this.root.appendChild(this.renderTreePanel());
  }

  private renderCreateForm(): HTMLElement {
    const form = this.el("div", { class: "create", "data-testid": "create-form" });
    form.appendChild(this.el("h1", {}, "Teach a new model"));
    const input = this.el("input", {
      type: "number",
      value: "6",
      min: "1",
      "data-testid": "feature-count",
    });
    const button = this.el("button", { "data-testid": "create-button" }, "Start session");
    button.addEventListener("click", () => {
      void this.createSession(Number(input.value) || 6);
    });
    form.append(input, button);
    return form;
  }

  private renderHeader(): HTMLElement {
    const header = this.el("header", { class: "status" });
    header.appendChild(
      this.el("span", { "data-testid": "session-id" }, `session ${this.sessionId}`),
    );
    header.appendChild(
      this.el(
        "span",
        { "data-testid": "training-count" },
        `${this.state?.training_count ?? 0} examples`,
      ),
    );
    header.appendChild(
      this.el(
        "span",
        { "data-testid": "ambiguity" },
        `ambiguity ${this.state?.ambiguity ?? 0}`,
      ),
    );
    header.appendChild(this.renderSparkline());
    return header;
  }

  private renderSparkline(): HTMLElement {
    const wrap = this.el("span", { class: "spark", "data-testid": "ambiguity-sparkline" });
    const trace = this.state?.ambiguity_trace ?? [];
    if (trace.length < 2) return wrap;
    const w = 120;
    const h = 24;
    const max = Math.max(...trace.map((p) => p.ambiguity), 1);
    const points = trace
      .map((p, i) => {
        const x = (i / (trace.length - 1)) * w;
        const y = h - (p.ambiguity / max) * (h - 2) - 1;
        return `${x.toFixed(1)},${y.toFixed(1)}`;
      })
      .join(" ");
    const svg = this.doc.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("width", String(w));
    svg.setAttribute("height", String(h));
    const line = this.doc.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("points", points);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", "currentColor");
    svg.appendChild(line);
    wrap.appendChild(svg);
    return wrap;
  }

  private renderBadge(badge: Badge): HTMLElement {
    const text = badge.changed
      ? `model updated (ambiguity ${badge.before} → ${badge.after})`
      : "model unchanged";
    return this.el(
      "div",
      {
        class: badge.changed ? "badge changed" : "badge unchanged",
        "data-testid": "badge",
        "data-changed": String(badge.changed),
      },
      text,
    );
  }

  private renderBanner(banner: ErrorBanner): HTMLElement {
    const div = this.el("div", { class: "banner", "data-testid": "error-banner" });
    div.appendChild(this.el("span", {}, banner.message));
    const retry = this.el("button", { "data-testid": "retry-button" }, "Retry");
    retry.addEventListener("click", () => void banner.retry());
    div.appendChild(retry);
    return div;
  }

  private renderSuggestPanel(): HTMLElement {
    const panel = this.el("section", { class: "suggest" });
    const button = this.el("button", { "data-testid": "suggest-button" }, "Suggest next problem");
    button.addEventListener("click", () => void this.requestSuggestion());
    panel.appendChild(button);
    if (this.suggestion) {
      panel.appendChild(
        this.el(
          "span",
          { "data-testid": "suggestion-score" },
          `lowest certainty in pool: ${(this.suggestion.score * 100).toFixed(0)}%`,
        ),
      );
    }
    return panel;
  }

  private renderCandidates(): HTMLElement {
    const section = this.el("section", { class: "candidates" });
    section.appendChild(this.el("h2", {}, "Candidate actions"));
    if (!this.candidates.length) {
      section.appendChild(
        this.el("p", { "data-testid": "no-candidates" }, "Request a suggestion to begin."),
      );
      return section;
    }
    const names = this.state?.schema.features.map((f) => f.name) ?? [];
    this.candidates.forEach((candidate, index) => {
      const row = this.el("div", { class: "candidate", "data-testid": "candidate-row" });
      const labelText = candidate.values
        .map((v, f) => `${names[f] ?? `X${f + 1}`}=${v}`)
        .join(" ");
      row.appendChild(this.el("code", {}, labelText));
      row.appendChild(this.renderCertainty(candidate.signed_ic));
      const yes = this.el("button", { "data-testid": "grade-correct" }, "✓ correct");
      yes.addEventListener("click", () => void this.grade(index, 1));
      const no = this.el("button", { "data-testid": "grade-incorrect" }, "✗ incorrect");
      no.addEventListener("click", () => void this.grade(index, 0));
      row.append(yes, no);
      section.appendChild(row);
    });
    return section;
  }

  private renderCertainty(value: number): HTMLElement {
    const wrap = this.el("span", {
      class: "cert",
      "data-testid": "cert-value",
      "data-cert": String(value),
    });
    const bar = this.el("span", { class: "cert-bar" });
    const fill = this.el("span", {
      class: value >= 0 ? "cert-fill pos" : "cert-fill neg",
    });
    fill.style.width = `${Math.abs(value) * 50}%`;
    if (value >= 0) fill.style.left = "50%";
    else fill.style.right = "50%";
    bar.appendChild(fill);
    wrap.appendChild(bar);
    wrap.appendChild(
      this.el("span", { class: "cert-num" }, `${value > 0 ? "+" : ""}${Math.round(value * 100)}%`),
    );
    return wrap;
  }

  private renderTreePanel(): HTMLElement {
    const details = this.el("details", { "data-testid": "tree-panel" }) as HTMLDetailsElement;
    details.appendChild(this.el("summary", {}, "Model structure"));
    const leaves = this.state?.leaves ?? [];
    const list = this.el("ul", { class: "leaves" });
    for (const leaf of leaves) {
      list.appendChild(
        this.el(
          "li",
          { "data-testid": "leaf-row" },
          `[${leaf.key}] ${leaf.label === 1 ? "correct" : "incorrect"} ` +
            `(${leaf.size} samples, ambiguity ${leaf.ambiguity})`,
        ),
      );
    }
    details.appendChild(list);
    return details;
  }
}
