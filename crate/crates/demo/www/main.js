import init, { Demo } from "./pkg/planestitch_demo.js";

const $ = (id) => document.getElementById(id);
const status = $("status");
const canvas = $("view");
let demo = null;

function show(frame) {
  canvas.width = frame.width;
  canvas.height = frame.height;
  const pixels = new ImageData(new Uint8ClampedArray(frame.rgba), frame.width, frame.height);
  canvas.getContext("2d").putImageData(pixels, 0, 0);
  status.textContent = frame.summary;
  frame.free();
}

// yield once so the status line paints before a long synchronous call
function run(label, f) {
  status.textContent = label + "...";
  setTimeout(() => {
    const t = performance.now();
    try {
      show(f());
      status.textContent += ` (${((performance.now() - t) / 1000).toFixed(2)} s)`;
    } catch (e) {
      status.textContent = "error: " + (e.message ?? e);
    }
  }, 0);
}

function build() {
  const n = (id) => Number($(id).value);
  run("building scene", () => {
    if (demo) demo.free();
    demo = new Demo(n("planes"), BigInt(n("seed")), n("width"), n("height"), n("mesh"));
    return demo.inputs();
  });
}

await init();
$("build").onclick = build;
$("regional").onclick = () => run("stitching", () => demo.stitch(false));
$("baseline").onclick = () => run("stitching", () => demo.stitch(true));
$("field").onclick = () => run("field", () => demo.field());
$("meshes").onclick = () => run("meshes", () => demo.mesh_overlay());
build();
