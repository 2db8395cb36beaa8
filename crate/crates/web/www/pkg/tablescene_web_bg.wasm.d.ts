/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_generate: (a: number, b: number) => [number, number, number, number];
export const demo_grid_cols: (a: number) => number;
export const demo_grid_rows: (a: number) => number;
export const demo_height: (a: number) => number;
export const demo_highlight: (a: number, b: number) => [number, number];
export const demo_new: (a: number, b: number) => [number, number, number];
export const demo_object_name: (a: number, b: number) => [number, number];
export const demo_pick: (a: number, b: number, c: number) => number;
export const demo_reachable: (a: number) => [number, number];
export const demo_rgba: (a: number) => [number, number];
export const demo_set_reach: (a: number, b: number) => [number, number, number];
export const demo_visible_pixels: (a: number) => [number, number];
export const demo_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
