import init, { Demo } from "./pkg/tabal_demo.js";

const $ = (id) => document.getElementById(id);
const RES = 64;
const COLORS = ["#2b6cb0", "#dd6b20"];

let demo = null;
let pool = null;
let run = null;

function status(msg) {
  $("status").textContent = msg || "";
}

function toCanvas(canvas, x, y) {
  const [x0, x1, y0, y1] = pool.bounds;
  return [((x - x0) / (x1 - x0)) * canvas.width, ((y1 - y) / (y1 - y0)) * canvas.height];
}

function drawPlane() {
  const canvas = $("plane");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const round = Number($("round").value);

  if (run) {
    const field = demo.field(round, $("measure").value, RES);
    const cw = canvas.width / RES;
    const ch = canvas.height / RES;
    for (let r = 0; r < RES; r++) {
      for (let c = 0; c < RES; c++) {
        const v = field[r * RES + c];
        const shade = Math.round(255 - 150 * v);
        ctx.fillStyle = `rgb(${shade},${shade},255)`;
        ctx.fillRect(c * cw, r * ch, cw + 1, ch + 1);
      }
    }
  }

  const labeled = new Set();
  const fresh = new Set();
  if (run) {
    run.record.initial_context.forEach((i) => labeled.add(i));
    run.record.rounds.slice(0, round + 1).forEach((rd, t) => {
      rd.queried.forEach((i) => {
        labeled.add(i);
        if (t === round) fresh.add(i);
      });
    });
  }

  for (let i = 0; i < pool.x.length; i++) {
    const [px, py] = toCanvas(canvas, pool.x[i], pool.y[i]);
    ctx.beginPath();
    if (pool.test[i]) {
      ctx.strokeStyle = COLORS[pool.labels[i]];
      ctx.rect(px - 2, py - 2, 4, 4);
      ctx.stroke();
      continue;
    }
    ctx.arc(px, py, labeled.has(i) ? 4.5 : 2.5, 0, 2 * Math.PI);
    ctx.fillStyle = labeled.has(i) ? "#000" : COLORS[pool.labels[i]];
    ctx.globalAlpha = labeled.has(i) ? 1 : 0.55;
    ctx.fill();
    ctx.globalAlpha = 1;
    if (fresh.has(i)) {
      ctx.strokeStyle = "#e53e3e";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(px, py, 7, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.lineWidth = 1;
    }
  }
}

function drawCurve() {
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!run) return;
  const rounds = run.record.rounds;
  const pad = 30;
  const nMax = run.record.budget;
  const nMin = rounds[0].n_labeled;
  const sx = (n) => pad + ((n - nMin) / Math.max(1, nMax - nMin)) * (canvas.width - 2 * pad);
  const sy = (v) => canvas.height - pad - ((v + 0.2) / 1.2) * (canvas.height - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, sy(0));
  ctx.lineTo(canvas.width - pad, sy(0));
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, canvas.height - pad);
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText("kappa", 2, pad - 8);
  ctx.fillText("1", pad - 12, sy(1) + 4);
  ctx.fillText("0", pad - 12, sy(0) + 4);
  ctx.fillText(`${nMin}`, pad, canvas.height - pad + 14);
  ctx.fillText(`${nMax} labeled`, canvas.width - pad - 50, canvas.height - pad + 14);

  ctx.strokeStyle = "#2b6cb0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  rounds.forEach((r, i) => {
    const p = [sx(r.n_labeled), sy(r.kappa)];
    i === 0 ? ctx.moveTo(...p) : ctx.lineTo(...p);
  });
  ctx.stroke();
  ctx.lineWidth = 1;
  const cur = rounds[Number($("round").value)];
  ctx.fillStyle = "#e53e3e";
  ctx.beginPath();
  ctx.arc(sx(cur.n_labeled), sy(cur.kappa), 4, 0, 2 * Math.PI);
  ctx.fill();
}

function redraw() {
  $("roundOut").textContent = $("round").value;
  drawPlane();
  drawCurve();
  if (run) {
    const r = run.record.rounds[Number($("round").value)];
    const aulc = run.aulc === null ? "n/a" : run.aulc.toFixed(3);
    $("summary").textContent =
      `${run.record.strategy}: ${r.n_labeled} labeled, kappa ${r.kappa.toFixed(3)}, ` +
      `AUC ${r.auc === null ? "n/a" : r.auc.toFixed(3)}; AULC ${aulc}`;
  } else {
    $("summary").textContent = "";
  }
}

function newPool() {
  try {
    demo = new Demo(Number($("n").value), Number($("sep").value), Number($("poolSeed").value));
    pool = JSON.parse(demo.pool());
    run = null;
    $("round").max = 0;
    $("round").value = 0;
    status();
    redraw();
  } catch (e) {
    status(e.message || String(e));
  }
}

function runStrategy() {
  try {
    run = JSON.parse(
      demo.run($("strategy").value, Number($("batch").value), Number($("budget").value), Number($("runSeed").value)),
    );
    $("round").max = run.record.rounds.length - 1;
    $("round").value = 0;
    status();
    redraw();
  } catch (e) {
    status(e.message || String(e));
  }
}

await init();
$("newPool").addEventListener("click", newPool);
$("run").addEventListener("click", runStrategy);
$("round").addEventListener("input", redraw);
$("measure").addEventListener("change", redraw);
newPool();
