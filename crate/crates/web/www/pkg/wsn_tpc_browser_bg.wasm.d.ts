/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_pairdemo_free: (a: number, b: number) => void;
export const feasibilitySlice: (a: number, b: number, c: number) => [number, number, number, number];
export const pairdemo_episodeJson: (a: number, b: number, c: bigint) => [number, number, number, number];
export const pairdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const pairdemo_policyJson: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
