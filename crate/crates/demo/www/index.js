import init, { compareMethods, eigenSpectra, contaminationCurve } from "./pkg/rfa_demo.js";

const COLORS = { RTS: "#1f6fb4", PCA: "#d9661f" };
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function panelArgs() {
  return [$("family").value, num("p"), num("n")];
}

function showError(target, err) {
  target.innerHTML = `<p class="err">${err.message ?? err}</p>`;
}

function axes(ctx, w, h, pad, xmax, ymax, xlabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.fillText(ymax.toFixed(3), 4, pad / 2 + 10);
  ctx.fillText("0", pad - 12, h - pad + 4);
  ctx.fillText(xlabel, w / 2 - 20, h - 8);
  ctx.fillText(String(xmax), w - pad, h - pad + 16);
}

function legend(ctx, x, y) {
  for (const [i, [name, color]] of Object.entries(COLORS).entries()) {
    ctx.fillStyle = color;
    ctx.fillRect(x, y + i * 16, 10, 10);
    ctx.fillStyle = "#222";
    ctx.fillText(name === "RTS" ? "RTS (Kendall)" : "PCA (covariance)", x + 14, y + 9 + i * 16);
  }
}

function runCompare() {
  const out = $("compare-out");
  try {
    const r = compareMethods(...panelArgs(), num("reps"), num("seed"));
    const row = (name, k) =>
      `<tr><th>${name}</th>${[0, 1, 2].map((j) => `<td>${r[k + j].toFixed(4)}</td>`).join("")}</tr>`;
    out.innerHTML = `<table><tr><th></th><th>MEE-CC</th><th>AVE-FL</th><th>AVE-FS</th></tr>${row("RTS", 0)}${row("PCA", 3)}</table>`;
  } catch (err) {
    showError(out, err);
  }
}

function runSpectra() {
  const canvas = $("spectra");
  const ctx = canvas.getContext("2d");
  try {
    const v = eigenSpectra(...panelArgs(), num("seed"));
    const k = v.length / 2;
    const [w, h, pad] = [canvas.width, canvas.height, 40];
    const ymax = Math.max(...v);
    axes(ctx, w, h, pad, k, ymax, "eigenvalue index");
    const slot = (w - 1.5 * pad) / k;
    for (let j = 0; j < k; j++) {
      [v[j], v[k + j]].forEach((val, m) => {
        ctx.fillStyle = m === 0 ? COLORS.RTS : COLORS.PCA;
        const bh = (val / ymax) * (h - 1.5 * pad);
        ctx.fillRect(pad + j * slot + 4 + m * (slot / 2 - 4), h - pad - bh, slot / 2 - 6, bh);
      });
    }
    legend(ctx, w - 150, 12);
  } catch (err) {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#b00";
    ctx.fillText(err.message ?? String(err), 10, 20);
  }
}

function runContamination() {
  const canvas = $("contamination");
  const ctx = canvas.getContext("2d");
  try {
    const v = contaminationCurve(...panelArgs(), num("pert-reps"), num("max-level"), num("seed"));
    const levels = v.slice(0, 6);
    const curves = { RTS: v.slice(6, 12), PCA: v.slice(12, 18) };
    const [w, h, pad] = [canvas.width, canvas.height, 40];
    const xmax = levels[5] || 1;
    const ymax = Math.max(1e-6, ...curves.RTS, ...curves.PCA);
    axes(ctx, w, h, pad, xmax, ymax, "proportion doubled");
    for (const [name, ys] of Object.entries(curves)) {
      ctx.strokeStyle = COLORS[name];
      ctx.lineWidth = 2;
      ctx.beginPath();
      ys.forEach((y, i) => {
        const px = pad + (levels[i] / xmax) * (w - 1.5 * pad);
        const py = h - pad - (y / ymax) * (h - 1.5 * pad);
        i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
      });
      ctx.stroke();
    }
    ctx.lineWidth = 1;
    legend(ctx, pad + 12, 12);
  } catch (err) {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#b00";
    ctx.fillText(err.message ?? String(err), 10, 20);
  }
}

await init();
$("run-compare").addEventListener("click", runCompare);
$("run-spectra").addEventListener("click", runSpectra);
$("run-contamination").addEventListener("click", runContamination);
runSpectra();
