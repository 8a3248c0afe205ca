/* tslint:disable */
/* eslint-disable */

/**
 * Two sensors at equal distance from a shared receiver, solved once and
 * then simulated on demand.
 */
export class PairDemo {
    free(): void;
    [Symbol.dispose](): void;
    episodeJson(horizon: number, seed: bigint): string;
    constructor(f1: number, f2: number, lambda: number, alpha: number);
    policyJson(): string;
}

export function feasibilitySlice(d2_over_d1: number, kappa3: number, resolution: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_pairdemo_free: (a: number, b: number) => void;
    readonly feasibilitySlice: (a: number, b: number, c: number) => [number, number, number, number];
    readonly pairdemo_episodeJson: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly pairdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly pairdemo_policyJson: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
