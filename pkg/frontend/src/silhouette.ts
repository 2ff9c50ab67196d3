/** Silhouette score of a 2-D embedding against externally given groups. */

import type { EmbeddingPoint } from "./tsne.js";

export function silhouette(points: EmbeddingPoint[], groups: (string | number)[]): number {
  const n = points.length;
  if (n !== groups.length) {
    throw new Error(`${n} points vs ${groups.length} group labels`);
  }
  const byGroup = new Map<string | number, number[]>();
  groups.forEach((g, i) => {
    const members = byGroup.get(g) ?? [];
    members.push(i);
    byGroup.set(g, members);
  });
  if (byGroup.size < 2) {
    throw new Error("need at least two groups for a silhouette");
  }
  const dist = (i: number, j: number) =>
    Math.hypot(points[i].x - points[j].x, points[i].y - points[j].y);

  let total = 0;
  for (let i = 0; i < n; i++) {
    const own = byGroup.get(groups[i])!;
    if (own.length === 1) {
      continue; // singleton convention: s(i) = 0
    }
    let a = 0;
    for (const j of own) {
      if (j !== i) {
        a += dist(i, j);
      }
    }
    a /= own.length - 1;
    let b = Infinity;
    for (const [g, members] of byGroup) {
      if (g === groups[i]) {
        continue;
      }
      let mean = 0;
      for (const j of members) {
        mean += dist(i, j);
      }
      b = Math.min(b, mean / members.length);
    }
    total += (b - a) / Math.max(a, b);
  }
  return total / n;
}
