// Rendering primitives shared by every view.

// All numbers shown in the console go through show(): JSON.stringify of a
// parsed JSON number reproduces the wire bytes, which is what keeps the UI
// and the engine from ever disagreeing on a displayed figure.
export function show(value: number | string | null): string {
  if (value === null || value === undefined) return "";
  return typeof value === "number" ? JSON.stringify(value) : value;
}

export function esc(value: string | null | undefined): string {
  if (!value) return "";
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function emptyState(message: string): string {
  return `<p class="empty">${esc(message)}</p>`;
}
