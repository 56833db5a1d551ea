// Shared test helpers: a small deterministic PRNG so property-style tests
// are reproducible from a fixed seed.

export type Rng = () => number;

/** mulberry32: fast 32-bit seeded generator, uniform in [0, 1). */
export function makeRng(seed: number): Rng {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randInt(rng: Rng, low: number, high: number): number {
  return low + Math.floor(rng() * (high - low + 1));
}

export function choice<T>(rng: Rng, items: readonly T[]): T {
  return items[Math.floor(rng() * items.length)]!;
}

const VOCAB = [
  "the", "a", "on", "in", "at", "accident", "crash", "fire", "plant",
  "motorway", "chemical", "french", "quick", "brown", "fox", "jumps",
  "over", "lazy", "dog", "alpha", "beta", "gamma", "delta",
];

export function randomWords(rng: Rng, minLen = 1, maxLen = 8): string[] {
  const length = randInt(rng, minLen, maxLen);
  return Array.from({ length }, () => choice(rng, VOCAB));
}

export function randomSentence(rng: Rng, minLen = 1, maxLen = 8): string {
  return randomWords(rng, minLen, maxLen).join(" ");
}
