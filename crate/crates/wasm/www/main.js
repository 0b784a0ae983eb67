import init, { tx_window, sinr_map, ser_curve } from "./pkg/gfdm_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

function common() {
  return [$("waveform").value, num("k"), num("m"), num("alpha")];
}

function call(f) {
  $("error").textContent = "";
  try {
    return JSON.parse(f());
  } catch (e) {
    $("error").textContent = String(e);
    return null;
  }
}

// Heatmap of a [k][m] matrix: subcarriers down, subsymbols across.
function heatmap(canvas, rows, lo, hi) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const k = rows.length, m = rows[0].length;
  const cw = canvas.width / m, ch = canvas.height / k;
  for (let r = 0; r < k; r++) {
    for (let c = 0; c < m; c++) {
      const v = rows[r][c];
      const t = v === null ? 1 : Math.min(1, Math.max(0, (v - lo) / (hi - lo || 1)));
      ctx.fillStyle = `hsl(${240 - 240 * t}, 80%, ${30 + 30 * t}%)`;
      ctx.fillRect(c * cw, r * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
}

function range(rows) {
  const vals = rows.flat().filter((v) => v !== null && isFinite(v));
  return [Math.min(...vals), Math.max(...vals)];
}

function drawWindow() {
  const v = call(() => tx_window(...common()));
  if (!v) return;
  const [lo, hi] = range(v.magnitude);
  heatmap($("window-canvas"), v.magnitude, lo, hi);
}

function drawSinr() {
  const [wf, k, m, alpha] = common();
  const v = call(() =>
    sinr_map(wf, k, m, alpha, $("receiver").value, num("snr"), num("taps"), num("seed"), num("channel")));
  if (!v) return;
  const [lo, hi] = range(v.sinr_db);
  $("sinr-summary").textContent =
    `${v.waveform} ${v.receiver}: SINR ${lo.toFixed(1)} to ${hi.toFixed(1)} dB, mean SER ${v.mean_analytic_ser.toExponential(2)}`;
  heatmap($("sinr-canvas"), v.sinr_db, lo, hi);
}

function drawSer() {
  const [wf, k, m, alpha] = common();
  const v = call(() => ser_curve(wf, k, m, alpha, num("taps"), num("seed"), num("channels"), 0, 30, 2));
  if (!v) return;
  const canvas = $("ser-canvas"), ctx = canvas.getContext("2d");
  const pad = 40, w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  const decades = 6;
  const x = (s) => pad + (w * (s - v.snr_db[0])) / (v.snr_db.at(-1) - v.snr_db[0] || 1);
  const y = (p) => pad + (h * -Math.log10(Math.max(p, 10 ** -decades))) / decades;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ddd";
  ctx.fillStyle = "#333";
  for (let d = 0; d <= decades; d++) {
    ctx.beginPath();
    ctx.moveTo(pad, y(10 ** -d));
    ctx.lineTo(pad + w, y(10 ** -d));
    ctx.stroke();
    ctx.fillText(`1e-${d}`, 4, y(10 ** -d) + 4);
  }
  v.snr_db.forEach((s, i) => {
    if (i % 5 === 0) ctx.fillText(`${s} dB`, x(s) - 10, pad + h + 16);
  });
  v.curves.forEach((c, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    c.ser.forEach((p, j) => {
      if (p === null) return;
      const px = x(v.snr_db[j]), py = y(p);
      j === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(c.receiver, pad + w - 90, pad + 14 * (i + 1));
  });
}

await init();
$("show-window").onclick = drawWindow;
$("show-sinr").onclick = drawSinr;
$("show-ser").onclick = drawSer;
drawWindow();
