/* tslint:disable */
/* eslint-disable */

/**
 * A bundled scenario with its fitted library and the latest plan.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    execute(kick_node: number, offset: number, noise_pos: number, seed: number): string;
    formula(): string;
    constructor(name: string);
    plan(seed: number, iterations: number): string;
    /**
     * Planned motion held still until the formula horizon, as CSV.
     */
    plan_csv(): string;
    /**
     * Optimistic bound the scenario evaluates with.
     */
    rho_opt(): number;
    status(): string;
}

export function check(formula: string, csv: string, rho_opt: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly check: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_execute: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_formula: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number) => [number, number, number];
    readonly demo_plan: (a: number, b: number, c: number) => [number, number];
    readonly demo_plan_csv: (a: number) => [number, number];
    readonly demo_rho_opt: (a: number) => number;
    readonly demo_status: (a: number) => [number, number];
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
