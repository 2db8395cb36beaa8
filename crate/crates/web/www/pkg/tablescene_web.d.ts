/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Generates and renders a feasible scene. Returns its JSON.
     */
    generate(seed: number): string;
    grid_cols(): number;
    grid_rows(): number;
    height(): number;
    /**
     * RGBA of the last render with placement `index` highlighted and the rest dimmed.
     */
    highlight(index: number): Uint8Array;
    /**
     * Catalog, grasps and the reachability map for an arm reaching `reach` metres.
     */
    constructor(reach: number, scale: number);
    /**
     * Display name of placement `index`.
     */
    object_name(index: number): string | undefined;
    /**
     * Placement index under pixel (x, y), or -1.
     */
    pick(x: number, y: number): number;
    /**
     * Row-major 0/1 per cell.
     */
    reachable(): Uint8Array;
    /**
     * RGBA pixels of the last render, empty before the first.
     */
    rgba(): Uint8Array;
    /**
     * Recomputes the map; the current scene is dropped. Returns the number of reachable cells.
     */
    set_reach(reach: number): number;
    /**
     * Pixel count of each placement's visible region.
     */
    visible_pixels(): Uint32Array;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_generate: (a: number, b: number) => [number, number, number, number];
    readonly demo_grid_cols: (a: number) => number;
    readonly demo_grid_rows: (a: number) => number;
    readonly demo_height: (a: number) => number;
    readonly demo_highlight: (a: number, b: number) => [number, number];
    readonly demo_new: (a: number, b: number) => [number, number, number];
    readonly demo_object_name: (a: number, b: number) => [number, number];
    readonly demo_pick: (a: number, b: number, c: number) => number;
    readonly demo_reachable: (a: number) => [number, number];
    readonly demo_rgba: (a: number) => [number, number];
    readonly demo_set_reach: (a: number, b: number) => [number, number, number];
    readonly demo_visible_pixels: (a: number) => [number, number];
    readonly demo_width: (a: number) => number;
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
