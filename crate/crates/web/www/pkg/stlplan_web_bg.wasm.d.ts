/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const check: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const demo_execute: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const demo_formula: (a: number) => [number, number];
export const demo_new: (a: number, b: number) => [number, number, number];
export const demo_plan: (a: number, b: number, c: number) => [number, number];
export const demo_plan_csv: (a: number) => [number, number];
export const demo_rho_opt: (a: number) => number;
export const demo_status: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
