/* tslint:disable */
/* eslint-disable */

/**
 * Approximate fixed point trace of a registry map on the square, levels `1, 2, 4, ...` up to `max_level`.
 */
export function afp_trace(map: string, max_level: number): string;

/**
 * Picard iterates of a registry field from `u0 = (1, 0)` on `[0, 1]`.
 */
export function picard(field: string, iterations: number, samples: number): string;

/**
 * Net of the square `[-1, 1]^2` at radius `epsilon` and the projection of `(x, y)`.
 */
export function square_net(epsilon: number, x: number, y: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly afp_trace: (a: number, b: number, c: number) => [number, number, number, number];
    readonly picard: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly square_net: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
