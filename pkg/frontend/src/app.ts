/** DOM wiring: batch selector, card rendering, keyboard shortcuts. */

import { BatchSummary, ReviewApi } from "./api.js";
import { TriageSnapshot, TriageState } from "./state.js";

export interface AppHandles {
  state: TriageState;
  refreshBatches: () => Promise<void>;
}

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

function renderCounts(snapshot: TriageSnapshot): HTMLElement {
  const counts = snapshot.counts;
  const box = el("div", "progress");
  if (!counts) return box;
  box.append(
    el("span", "accepted", `accepted ${counts.accepted} / ${counts.required}`),
    el("span", "rejected", `rejected ${counts.rejected}`),
    el("span", "pending", `pending ${counts.pending}`),
  );
  if (snapshot.readyToMerge) {
    box.append(el("span", "ready", "quota met — ready to merge"));
  }
  return box;
}

function renderCard(snapshot: TriageSnapshot, state: TriageState): HTMLElement {
  const item = snapshot.queue[snapshot.cursor];
  const card = el("div", "card");
  if (!item) return card;
  card.dataset.index = String(item.index);

  const img = el("img", "candidate");
  img.src = item.url;
  img.alt = `candidate ${item.index}`;

  const meta = el("div", "meta");
  meta.append(
    el("div", "target", item.target_attribute),
    el("div", "seed", `seed ${item.seed}`),
    el("div", "prompt", item.positive || item.positive_excerpt),
  );

  const actions = el("div", "actions");
  const accept = el("button", "accept", "Accept (a)");
  accept.onclick = () => void state.decide("accept");
  const reject = el("button", "reject", "Reject (r)");
  reject.onclick = () => void state.decide("reject");
  actions.append(accept, reject);

  card.append(img, meta, actions);
  return card;
}

export function render(root: HTMLElement, snapshot: TriageSnapshot,
                       state: TriageState): void {
  root.replaceChildren();
  if (snapshot.error) {
    const banner = el("div", "banner error", snapshot.error);
    const retry = el("button", "retry", "Retry");
    retry.onclick = () => {
      if (snapshot.batchId) void state.loadBatch(snapshot.batchId);
    };
    banner.append(retry);
    root.append(banner);
  }
  root.append(renderCounts(snapshot));
  switch (snapshot.phase) {
    case "loading":
      root.append(el("div", "status", "loading…"));
      break;
    case "complete": {
      const counts = snapshot.counts;
      const summary = counts
        ? `review complete — accepted ${counts.accepted} of ${counts.required} required`
        : "review complete";
      root.append(el("div", "status complete", summary));
      break;
    }
    case "reviewing":
      root.append(
        el("div", "queue-position",
           `card ${snapshot.cursor + 1} of ${snapshot.queue.length}`),
        renderCard(snapshot, state),
      );
      break;
    case "error":
      break;
  }
}

export function bindKeyboard(state: TriageState,
                             target: EventTarget = document): void {
  target.addEventListener("keydown", (event) => {
    const key = (event as KeyboardEvent).key;
    if (key === "a") void state.decide("accept");
    else if (key === "r") void state.decide("reject");
    else if (key === "ArrowRight" || key === "n") state.move(1);
    else if (key === "ArrowLeft" || key === "p") state.move(-1);
  });
}

export function mountApp(root: HTMLElement, api: ReviewApi): AppHandles {
  const state = new TriageState(api);
  const selector = el("select", "batch-selector");
  const main = el("div", "main");
  root.replaceChildren(el("h1", "title", "candidate review"), selector, main);

  state.subscribe((snapshot) => render(main, snapshot, state));
  bindKeyboard(state);

  selector.onchange = () => {
    if (selector.value) void state.loadBatch(selector.value);
  };

  const refreshBatches = async () => {
    let batches: BatchSummary[];
    try {
      batches = await api.batches();
    } catch (err) {
      main.replaceChildren(
        el("div", "banner error",
           `cannot reach review service: ${
             err instanceof Error ? err.message : String(err)}`),
      );
      return;
    }
    selector.replaceChildren(
      ...batches.map((b) => {
        const opt = el("option");
        opt.value = b.id;
        opt.textContent =
          `${b.id} — ${b.target} (${b.counts.pending} pending)`;
        return opt;
      }),
    );
    if (batches.length > 0) {
      selector.value = batches[0].id;
      await state.loadBatch(batches[0].id);
    } else {
      main.replaceChildren(el("div", "status", "no batches found"));
    }
  };

  void refreshBatches();
  return { state, refreshBatches };
}
