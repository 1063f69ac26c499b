/**
 * Deterministic counter-based random streams.
 *
 * Mirrors the renderer's stream derivation bit-for-bit: a splitmix64-style
 * finalizer over an absorbed key chain, evaluated here on BigInt and
 * converted to doubles from the top 53 bits. Every draw is a pure function
 * of (seed, stream name, integer counters), so values match the Python
 * side exactly regardless of evaluation order or batching.
 */

const MASK64 = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX_A = 0xbf58476d1ce4e5b9n;
const MIX_B = 0x94d049bb133111ebn;
const INV_2_53 = 2 ** -53;

function mix64(x: bigint): bigint {
  x &= MASK64;
  x ^= x >> 30n;
  x = (x * MIX_A) & MASK64;
  x ^= x >> 27n;
  x = (x * MIX_B) & MASK64;
  x ^= x >> 31n;
  return x;
}

function toU64(value: number | bigint): bigint {
  if (typeof value === "number") {
    if (!Number.isSafeInteger(value)) {
      throw new TypeError(`counters must be integers, got ${value}`);
    }
    value = BigInt(value);
  }
  return BigInt.asUintN(64, value);
}

/** Fold one integer into hash state h. */
export function absorb(h: bigint, value: number | bigint): bigint {
  const shifted = (toU64(value) + GOLDEN) & MASK64;
  return mix64(h ^ mix64(shifted));
}

/** Root hash for a named stream under a seed. */
export function streamKey(seed: number | bigint, stream: string): bigint {
  const data = new TextEncoder().encode(stream);
  let h = absorb(GOLDEN, seed);
  h = absorb(h, data.length);
  for (let i = 0; i < data.length; i += 8) {
    let word = 0n;
    for (let j = 0; j < 8 && i + j < data.length; j++) {
      word |= BigInt(data[i + j]) << BigInt(8 * j);
    }
    h = absorb(h, word);
  }
  return h;
}

export function counterHash(
  key: bigint,
  ...counters: Array<number | bigint>
): bigint {
  let h = key;
  for (const c of counters) {
    h = absorb(h, c);
  }
  return h;
}

/** [0, 1) from the top 53 bits; exact float64 conversion. */
function unit(h: bigint): number {
  return Number(h >> 11n) * INV_2_53;
}

/** Uniform in [low, high) for one counter tuple. */
export function uniform(
  key: bigint,
  counters: Array<number | bigint>,
  low = 0.0,
  high = 1.0,
): number {
  return low + (high - low) * unit(counterHash(key, ...counters));
}

/** Index draw from a discrete distribution for one counter tuple. */
export function categorical(
  key: bigint,
  probs: readonly number[],
  counters: Array<number | bigint>,
): number {
  if (probs.length === 0) {
    throw new RangeError("probs must be non-empty");
  }
  const edges = new Float64Array(probs.length);
  let acc = 0.0;
  for (let i = 0; i < probs.length; i++) {
    if (!(probs[i] >= 0)) {
      throw new RangeError("probs must be non-negative");
    }
    acc += probs[i];
    edges[i] = acc;
  }
  const u = uniform(key, counters) * edges[edges.length - 1];
  let idx = 0;
  while (idx < edges.length && edges[idx] <= u) {
    idx++;
  }
  return Math.min(idx, probs.length - 1);
}
