import init, { prepare, generateTune, render } from "./pkg/quantune_web.js";

const $ = (id) => document.getElementById(id);
let lastEvents = null;

function guard(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = e.message ?? String(e);
    }
  };
}

function showPrepare() {
  const weights = $("weights").value.trim().split(/[\s,]+/).map(Number);
  const out = JSON.parse(prepare(new Float64Array(weights)));
  const k = out.qubits;
  $("probs").innerHTML = out.probabilities
    .map((p, i) => {
      const bits = i.toString(2).padStart(k, "0");
      return `<div><code>${bits}</code> <span class="bar" style="width:${(p * 300).toFixed(1)}px"></span> ${p.toFixed(4)}</div>`;
    })
    .join("");
  $("circuit").textContent = `x=${out.x} ry=${out.ry} cx=${out.cx}\n${out.circuit}`;
}

function showTune() {
  const tune = JSON.parse(
    generateTune(
      Number($("order").value),
      Number($("rounds").value),
      Number($("shots").value),
      Number($("noise").value),
      $("tolerate").checked,
      $("random").checked,
      Number($("seed").value),
    ),
  );
  lastEvents = tune.events;
  $("stats").textContent =
    `good ${tune.good}, skipped ${tune.skipped} (dead ends ${tune.dead_end}), noisy ${tune.noisy}`;
  $("tune").textContent = tune.codes
    .map((c, i) => `${c}  ${tune.names[i]} ${tune.events[i].duration}`)
    .join("\n");
  $("sing").disabled = false;
}

function sing() {
  const samples = render(JSON.stringify(lastEvents), $("vowel").value, Number($("tempo").value), Number($("seed").value));
  if (samples.length === 0) return;
  const ctx = new AudioContext({ sampleRate: 44100 });
  const buffer = ctx.createBuffer(1, samples.length, 44100);
  buffer.copyToChannel(samples, 0);
  const src = ctx.createBufferSource();
  src.buffer = buffer;
  src.connect(ctx.destination);
  src.start();
}

await init();
$("prepare").addEventListener("click", guard(showPrepare));
$("generate").addEventListener("click", guard(showTune));
$("sing").addEventListener("click", guard(sing));
showPrepare();
