/* tslint:disable */
/* eslint-disable */

/**
 * A synthetic scene plus the last regional stitch of it.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Per-vertex similarity field of the target mesh: tick direction is
     * the rotation, tick length the scale.
     */
    field(): Frame;
    /**
     * Side-by-side input pair.
     */
    inputs(): Frame;
    /**
     * The regional mosaic with both solved meshes drawn over it.
     */
    mesh_overlay(): Frame;
    /**
     * `planes` strips (1 to 4) over a `width`x`height` image, meshes of
     * `mesh`x`mesh` cells.
     */
    constructor(planes: number, seed: bigint, width: number, height: number, mesh: number);
    /**
     * Mosaic from region consensus (`baseline = false`) or from a single
     * global homography. The summary carries the overlap score.
     */
    stitch(baseline: boolean): Frame;
}

/**
 * One rendered view.
 */
export class Frame {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly height: number;
    /**
     * Row-major RGBA, ready for `ImageData`.
     */
    readonly rgba: Uint8Array;
    readonly summary: string;
    readonly width: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_frame_free: (a: number, b: number) => void;
    readonly demo_field: (a: number) => [number, number, number];
    readonly demo_inputs: (a: number) => number;
    readonly demo_mesh_overlay: (a: number) => [number, number, number];
    readonly demo_new: (a: number, b: bigint, c: number, d: number, e: number) => [number, number, number];
    readonly demo_stitch: (a: number, b: number) => [number, number, number];
    readonly frame_height: (a: number) => number;
    readonly frame_rgba: (a: number) => [number, number];
    readonly frame_summary: (a: number) => [number, number];
    readonly frame_width: (a: number) => number;
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
