/* tslint:disable */
/* eslint-disable */

/**
 * Resonant transmission versus pump power from 0 to `p_max_pw`. Returns
 * `[P₀..Pₙ (pW), gain₀..gainₙ, stable₀..stableₙ (1/0)]`.
 */
export function gain_curve(p_max_pw: number, points: number, blue: boolean, norm: string): Float64Array;

/**
 * Operating point summary as a JSON object: photon number, cooperativity,
 * stability and the least-damped eigenvalue.
 */
export function operating_point(pump_power_pw: number, blue: boolean): string;

/**
 * Transmission spectrum. Returns `[Δs₀..Δsₙ, |t₀|²..|tₙ|²]` (length `2n`).
 * A non-positive `half_span` picks the span automatically.
 */
export function spectrum(pump_power_pw: number, blue: boolean, half_span: number, points: number, norm: string): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly gain_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly operating_point: (a: number, b: number) => [number, number];
    readonly spectrum: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
