// Tiny HTML helpers shared by the render modules.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// Numbers are displayed exactly as the API sent them: no rounding, no
// locale formatting. The service owns presentation precision.
export function apiNumber(value: number): string {
  return String(value);
}
