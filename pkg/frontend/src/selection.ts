// Span selection helpers. Offsets are always computed from the rendered
// text — either from a DOM selection or by keyboard adjustment of an
// existing selection — never typed by hand.

import { SpanSelection } from "./types";

export function selectionFromOffsets(
  source: "question" | "passage",
  fullText: string,
  start: number,
  end: number,
): SpanSelection {
  if (!(0 <= start && start < end && end <= fullText.length)) {
    throw new Error(`selection [${start}, ${end}) out of range`);
  }
  return { source, start, end, text: fullText.slice(start, end) };
}

/** Selection of the nth occurrence of a substring of the rendered text. */
export function selectionOf(
  source: "question" | "passage",
  fullText: string,
  needle: string,
  occurrence = 0,
): SpanSelection {
  let start = -1;
  for (let i = 0; i <= occurrence; i++) {
    start = fullText.indexOf(needle, start + 1);
    if (start < 0) throw new Error(`${JSON.stringify(needle)} not found in the rendered text`);
  }
  return selectionFromOffsets(source, fullText, start, start + needle.length);
}

export type Edge = "start" | "end";

/** Keyboard adjustment: move one selection edge by a character step. */
export function nudge(
  selection: SpanSelection,
  fullText: string,
  edge: Edge,
  delta: -1 | 1,
): SpanSelection {
  const start = edge === "start" ? selection.start + delta : selection.start;
  const end = edge === "end" ? selection.end + delta : selection.end;
  if (!(0 <= start && start < end && end <= fullText.length)) return selection;
  return selectionFromOffsets(selection.source, fullText, start, end);
}

/** Resolve a DOM selection inside a container that renders fullText verbatim. */
export function captureDomSelection(
  source: "question" | "passage",
  container: HTMLElement,
  fullText: string,
): SpanSelection | null {
  const domSelection = window.getSelection();
  if (!domSelection || domSelection.rangeCount === 0 || domSelection.isCollapsed) return null;
  const range = domSelection.getRangeAt(0);
  if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) {
    return null;
  }
  const prefix = document.createRange();
  prefix.selectNodeContents(container);
  prefix.setEnd(range.startContainer, range.startOffset);
  const start = prefix.toString().length;
  const text = range.toString();
  if (!text.length) return null;
  const end = start + text.length;
  if (fullText.slice(start, end) !== text) return null;
  return { source, start, end, text };
}
