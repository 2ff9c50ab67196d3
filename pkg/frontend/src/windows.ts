/** Time-window parsing and tagging; mirrors the exporter's window syntax. */

export interface TimeWindow {
  tag: string;
  start: number; // epoch seconds, inclusive
  end: number; // exclusive
}

function parseDateUtc(text: string): Date {
  const monthOnly = /^(\d{4})-(\d{2})$/.exec(text);
  if (monthOnly) {
    return new Date(Date.UTC(Number(monthOnly[1]), Number(monthOnly[2]) - 1, 1));
  }
  const full = /^(\d{4})-(\d{2})-(\d{2})$/.exec(text);
  if (full) {
    return new Date(Date.UTC(Number(full[1]), Number(full[2]) - 1, Number(full[3])));
  }
  throw new Error(`bad window date ${text}; use YYYY-MM or YYYY-MM-DD`);
}

/** One range: `YYYY-MM` (whole month) or `start,end` dates with end exclusive. */
export function parseWindow(text: string): TimeWindow {
  const trimmed = text.trim();
  let start: Date;
  let end: Date;
  if (trimmed.includes(",")) {
    const [s, e] = trimmed.split(",", 2);
    start = parseDateUtc(s.trim());
    end = parseDateUtc(e.trim());
  } else {
    start = parseDateUtc(trimmed);
    end = new Date(Date.UTC(start.getUTCFullYear(), start.getUTCMonth() + 1, 1));
  }
  if (!(start < end)) {
    throw new Error(`empty window ${text}`);
  }
  return { tag: trimmed.replace(",", "_"), start: start.getTime() / 1000, end: end.getTime() / 1000 };
}

/** Semicolon-separated list of ranges. */
export function parseWindows(text: string): TimeWindow[] {
  return text.split(";").filter((w) => w.trim().length > 0).map(parseWindow);
}

/** Tag for a timestamp: first matching window, or "all" when none given. */
export function windowTag(timestamp: number, windows: TimeWindow[]): string {
  if (windows.length === 0) {
    return "all";
  }
  for (const w of windows) {
    if (timestamp >= w.start && timestamp < w.end) {
      return w.tag;
    }
  }
  return "other";
}
