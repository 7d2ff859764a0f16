/** Vote panel and satisfaction dialog.
 *
 * Buttons are disabled synchronously inside the click handler, before any
 * awaiting, so a double-click can never issue two submissions. They are
 * re-enabled only when the controller reports the next prompt.
 */

import { SessionController, ControllerState } from "./controller.js";

export interface VotePanelElements {
  root: HTMLElement;
  buttons: HTMLButtonElement[];
  slider: HTMLInputElement;
  sliderLabel: HTMLElement;
}

const VOTE_LABELS: [string, 0 | 1 | 2][] = [
  ["Bad", 0],
  ["Good", 1],
  ["Very Good", 2],
];

export function buildVotePanel(
  doc: Document,
  controller: SessionController,
): VotePanelElements {
  const root = doc.createElement("div");
  root.className = "vote-panel";

  const slider = doc.createElement("input");
  slider.type = "range";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.05";
  slider.value = "0.5";

  const sliderLabel = doc.createElement("span");
  sliderLabel.textContent = "preference 0.50";
  slider.addEventListener("input", () => {
    sliderLabel.textContent = `preference ${Number(slider.value).toFixed(2)}`;
  });

  const buttons: HTMLButtonElement[] = [];
  for (const [label, vote] of VOTE_LABELS) {
    const btn = doc.createElement("button");
    btn.textContent = label;
    btn.dataset.vote = String(vote);
    btn.addEventListener("click", () => {
      if (btn.disabled) return;
      for (const b of buttons) b.disabled = true;
      void controller.submitVote(vote, Number(slider.value));
    });
    buttons.push(btn);
    root.appendChild(btn);
  }
  root.appendChild(slider);
  root.appendChild(sliderLabel);

  controller.onChange((state: ControllerState) => {
    const active = state.phase === "awaiting_vote" && !state.submitting;
    for (const b of buttons) b.disabled = !active;
    slider.disabled = state.phase !== "awaiting_vote";
    root.style.display = state.phase === "awaiting_vote" ? "" : "none";
  });
  for (const b of buttons) b.disabled = true;
  return { root, buttons, slider, sliderLabel };
}

export interface SatisfactionElements {
  root: HTMLElement;
  yes: HTMLButtonElement;
  no: HTMLButtonElement;
}

export function buildSatisfactionDialog(
  doc: Document,
  controller: SessionController,
): SatisfactionElements {
  const root = doc.createElement("div");
  root.className = "satisfaction-dialog";

  const text = doc.createElement("p");
  text.textContent =
    "Satisfied with the current target? Confirming freezes it permanently.";
  root.appendChild(text);

  const mk = (label: string, satisfied: boolean) => {
    const btn = doc.createElement("button");
    btn.textContent = label;
    btn.addEventListener("click", () => {
      if (btn.disabled) return;
      yes.disabled = true;
      no.disabled = true;
      void controller.submitSatisfaction(satisfied);
    });
    root.appendChild(btn);
    return btn;
  };
  const yes = mk("Yes, freeze target", true);
  const no = mk("No, keep refining", false);

  controller.onChange((state) => {
    const active = state.phase === "awaiting_satisfaction" && !state.submitting;
    yes.disabled = !active;
    no.disabled = !active;
    root.style.display = state.phase === "awaiting_satisfaction" ? "" : "none";
  });
  yes.disabled = true;
  no.disabled = true;
  return { root, yes, no };
}
