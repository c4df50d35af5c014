/**
 * Aggregation identical to the harness's summary statistics: mean, standard
 * error of the mean with the sample (n-1) standard deviation, and a 95%
 * interval half-width of 2 * SEM.  A single observation has SEM 0.
 */

export function mean(values: number[]): number {
  if (values.length === 0) {
    throw new Error("mean of an empty group");
  }
  let total = 0;
  for (const v of values) total += v;
  return total / values.length;
}

export function sem(values: number[]): number {
  const n = values.length;
  if (n < 2) return 0;
  const m = mean(values);
  let sq = 0;
  for (const v of values) sq += (v - m) * (v - m);
  return Math.sqrt(sq / (n - 1)) / Math.sqrt(n);
}

/** 95% interval half-width: 2 * SEM, recomputed from the raw rows. */
export function halfWidth(values: number[]): number {
  return 2 * sem(values);
}

/**
 * Per-environment min-max normalization to [0, 1] for cross-environment
 * aggregation: the lower end is the environment's minimum possible return
 * when known (the `floors` map), otherwise the minimum observed; the upper
 * end is the maximum observed across all agents.
 */
export function normalizeByEnv(
  envs: string[],
  returns: number[],
  floors: Record<string, number> = {},
): number[] {
  const observedMin = new Map<string, number>();
  const observedMax = new Map<string, number>();
  for (let i = 0; i < envs.length; i++) {
    const env = envs[i];
    observedMin.set(env, Math.min(observedMin.get(env) ?? Infinity, returns[i]));
    observedMax.set(env, Math.max(observedMax.get(env) ?? -Infinity, returns[i]));
  }
  return returns.map((r, i) => {
    const env = envs[i];
    const bottom = floors[env] ?? observedMin.get(env)!;
    const top = observedMax.get(env)!;
    return top > bottom ? (r - bottom) / (top - bottom) : 0;
  });
}
