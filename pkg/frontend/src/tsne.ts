/** Exact O(N^2) t-SNE over a precomputed pairwise distance matrix.
 *
 * Distances are consumed as-is (squared inside the affinity computation, as
 * usual for precomputed-metric t-SNE); no re-vectorization happens anywhere.
 * Fixed seed + fixed inputs give identical coordinates.
 */

import { gaussian, mulberry32 } from "./prng.js";

export interface TsneParams {
  perplexity?: number;
  iterations?: number;
  seed?: number;
  learningRate?: number;
}

export interface EmbeddingPoint {
  x: number;
  y: number;
}

const EXAGGERATION = 12;
const EXAGGERATION_ITERS = 250;
const MOMENTUM_EARLY = 0.5;
const MOMENTUM_LATE = 0.8;
const MIN_PROB = 1e-12;

/** Conditional probabilities for one row via binary search on precision.
 *
 * Exponents are shifted by the nearest off-diagonal distance so the closest
 * neighbor always contributes exp(0): without the shift, rows whose target
 * entropy is unreachable (many exactly equidistant neighbors) underflow to
 * all-zero as beta grows.
 */
function rowAffinities(
  d2: Float64Array, n: number, i: number, logPerplexity: number, out: Float64Array,
): void {
  let nearest = Infinity;
  for (let j = 0; j < n; j++) {
    if (j !== i && d2[i * n + j] < nearest) {
      nearest = d2[i * n + j];
    }
  }
  let betaMin = -Infinity;
  let betaMax = Infinity;
  let beta = 1.0;
  for (let attempt = 0; attempt < 50; attempt++) {
    let sum = 0;
    for (let j = 0; j < n; j++) {
      out[j] = j === i ? 0 : Math.exp(-(d2[i * n + j] - nearest) * beta);
      sum += out[j];
    }
    let entropy = 0;
    for (let j = 0; j < n; j++) {
      if (out[j] > 0) {
        const p = out[j] / sum;
        entropy -= p * Math.log(p);
      }
      out[j] /= sum;
    }
    const diff = entropy - logPerplexity;
    if (Math.abs(diff) < 1e-5) {
      return;
    }
    if (diff > 0) {
      betaMin = beta;
      beta = betaMax === Infinity ? beta * 2 : (beta + betaMax) / 2;
    } else {
      betaMax = beta;
      beta = betaMin === -Infinity ? beta / 2 : (beta + betaMin) / 2;
    }
  }
}

/** Symmetrized joint probabilities from the distance matrix. */
export function jointProbabilities(
  distances: Float64Array, n: number, perplexity: number,
): Float64Array {
  const effective = Math.max(1, Math.min(perplexity, (n - 1) / 3));
  const logPerplexity = Math.log(effective);
  const d2 = new Float64Array(n * n);
  for (let i = 0; i < n * n; i++) {
    d2[i] = distances[i] * distances[i];
  }
  const conditional = new Float64Array(n * n);
  const row = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    rowAffinities(d2, n, i, logPerplexity, row);
    conditional.set(row, i * n);
  }
  const joint = new Float64Array(n * n);
  let total = 0;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const p = (conditional[i * n + j] + conditional[j * n + i]) / (2 * n);
      joint[i * n + j] = p;
      total += p;
    }
  }
  for (let i = 0; i < n * n; i++) {
    joint[i] = Math.max(joint[i] / total, MIN_PROB);
  }
  return joint;
}

/** Run gradient descent; returns one 2-D point per input row. */
export function embed(
  distances: Float64Array, n: number, params: TsneParams = {},
): EmbeddingPoint[] {
  if (distances.length !== n * n) {
    throw new Error(`distance buffer has ${distances.length} values, need ${n * n}`);
  }
  if (n === 0) {
    return [];
  }
  if (n === 1) {
    return [{ x: 0, y: 0 }];
  }
  const { perplexity = 30, iterations = 1000, seed = 42 } = params;
  // the customary auto rule; a fixed large rate diverges on small inputs
  const learningRate = params.learningRate ?? Math.max(n / (EXAGGERATION * 4), 50);
  const exaggerationEnd = Math.min(EXAGGERATION_ITERS, Math.floor(iterations / 2));
  const P = jointProbabilities(distances, n, perplexity);

  const normal = gaussian(mulberry32(seed));
  const Y = new Float64Array(2 * n);
  for (let i = 0; i < 2 * n; i++) {
    Y[i] = normal() * 1e-2;
  }
  const velocity = new Float64Array(2 * n);
  const gains = new Float64Array(2 * n).fill(1);
  const Qnum = new Float64Array(n * n);
  const grad = new Float64Array(2 * n);

  for (let iter = 0; iter < iterations; iter++) {
    // student-t numerators and their sum
    let qSum = 0;
    for (let i = 0; i < n; i++) {
      Qnum[i * n + i] = 0;
      for (let j = i + 1; j < n; j++) {
        const dx = Y[2 * i] - Y[2 * j];
        const dy = Y[2 * i + 1] - Y[2 * j + 1];
        const q = 1 / (1 + dx * dx + dy * dy);
        Qnum[i * n + j] = q;
        Qnum[j * n + i] = q;
        qSum += 2 * q;
      }
    }
    if (qSum === 0) {
      qSum = Number.MIN_VALUE;
    }
    const exaggeration = iter < exaggerationEnd ? EXAGGERATION : 1;
    grad.fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        if (i === j) {
          continue;
        }
        const q = Qnum[i * n + j];
        const mult = (exaggeration * P[i * n + j] - q / qSum) * q;
        grad[2 * i] += 4 * mult * (Y[2 * i] - Y[2 * j]);
        grad[2 * i + 1] += 4 * mult * (Y[2 * i + 1] - Y[2 * j + 1]);
      }
    }
    const momentum = iter < exaggerationEnd ? MOMENTUM_EARLY : MOMENTUM_LATE;
    for (let i = 0; i < 2 * n; i++) {
      const sameSign = Math.sign(grad[i]) === Math.sign(velocity[i]);
      gains[i] = Math.max(0.01, sameSign ? gains[i] * 0.8 : gains[i] + 0.2);
      velocity[i] = momentum * velocity[i] - learningRate * gains[i] * grad[i];
      Y[i] += velocity[i];
    }
    // re-center so the embedding does not drift
    let meanX = 0;
    let meanY = 0;
    for (let i = 0; i < n; i++) {
      meanX += Y[2 * i];
      meanY += Y[2 * i + 1];
    }
    meanX /= n;
    meanY /= n;
    for (let i = 0; i < n; i++) {
      Y[2 * i] -= meanX;
      Y[2 * i + 1] -= meanY;
    }
  }
  return Array.from({ length: n }, (_, i) => ({ x: Y[2 * i], y: Y[2 * i + 1] }));
}
