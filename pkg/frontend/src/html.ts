const REPLACEMENTS: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => REPLACEMENTS[ch] ?? ch);
}

/** Tagged template that escapes interpolated values; nest with raw(). */
export function html(strings: TemplateStringsArray, ...values: unknown[]): string {
  let out = "";
  strings.forEach((part, i) => {
    out += part;
    if (i < values.length) {
      const value = values[i];
      out += value instanceof Raw ? value.markup : escapeHtml(String(value));
    }
  });
  return out;
}

class Raw {
  constructor(public readonly markup: string) {}
}

export function raw(markup: string): Raw {
  return new Raw(markup);
}
