/** Deterministic PRNG so embeddings are reproducible across runs. */

/** mulberry32: small, fast, good-enough 32-bit generator. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Standard-normal sampler via Box-Muller over a uniform source. */
export function gaussian(uniform: () => number): () => number {
  let spare: number | null = null;
  return () => {
    if (spare !== null) {
      const value = spare;
      spare = null;
      return value;
    }
    let u = 0;
    let v = 0;
    do {
      u = uniform();
    } while (u <= 1e-12);
    v = uniform();
    const radius = Math.sqrt(-2.0 * Math.log(u));
    spare = radius * Math.sin(2.0 * Math.PI * v);
    return radius * Math.cos(2.0 * Math.PI * v);
  };
}
