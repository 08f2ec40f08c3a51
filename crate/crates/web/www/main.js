import init, { portrait, evans, case_sweep } from "./pkg/wavestab_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function num(id) {
  const s = $(id).value.trim();
  return s === "" ? NaN : Number(s);
}

// Minimal line plot: series = [{x, y, color, label}], optional log x axis.
function plot(canvas, series, opts = {}) {
  const g = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, m = 45;
  g.clearRect(0, 0, W, H);
  const tx = opts.logx ? Math.log10 : (v) => v;
  const xs = series.flatMap((s) => s.x.map(tx));
  const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  if (opts.hlines) ys.push(...opts.hlines.map((h) => h.y));
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const pad = 0.05 * (y1 - y0);
  y0 -= pad; y1 += pad;
  const px = (v) => m + ((tx(v) - x0) / (x1 - x0)) * (W - 2 * m);
  const py = (v) => H - m + 10 - ((v - y0) / (y1 - y0)) * (H - 2 * m);
  g.strokeStyle = "#999"; g.lineWidth = 1;
  g.strokeRect(m, m - 10, W - 2 * m, H - 2 * m);
  g.fillStyle = "#444"; g.font = "11px sans-serif";
  g.fillText(y1.toPrecision(4), 2, m - 5);
  g.fillText(y0.toPrecision(4), 2, H - m + 10);
  g.fillText((opts.logx ? "1e" + x0.toFixed(1) : x0.toPrecision(4)), m, H - m + 25);
  g.fillText((opts.logx ? "1e" + x1.toFixed(1) : x1.toPrecision(4)), W - m - 40, H - m + 25);
  if (opts.title) g.fillText(opts.title, m + 5, m + 5);
  for (const h of opts.hlines || []) {
    g.strokeStyle = h.color; g.setLineDash([4, 4]);
    g.beginPath(); g.moveTo(m, py(h.y)); g.lineTo(W - m, py(h.y)); g.stroke();
    g.setLineDash([]);
  }
  series.forEach((s, k) => {
    g.strokeStyle = s.color || COLORS[k % COLORS.length]; g.lineWidth = 1.5;
    g.beginPath();
    let pen = false;
    s.x.forEach((x, i) => {
      const y = s.y[i];
      if (!Number.isFinite(y)) { pen = false; return; }
      pen ? g.lineTo(px(x), py(y)) : g.moveTo(px(x), py(y));
      pen = true;
    });
    g.stroke();
    if (s.label) {
      g.fillStyle = g.strokeStyle;
      g.fillText(s.label, W - m - 110, m + 5 + 14 * k);
    }
  });
}

function fail(target, e) {
  target.textContent = String(e.message || e);
  target.className = "err";
}

function runPortrait() {
  const out = $("verdict");
  out.className = "";
  try {
    const r = JSON.parse(portrait($("model").value, num("gamma"), num("sign"), num("lambda"), num("c"), num("depth")));
    plot($("cv-potential"), [{ x: r.v, y: r.w, label: "W(v)" }], {
      title: "potential",
      hlines: [{ y: r.mu, color: "#d62728" }],
    });
    plot($("cv-profile"), [{ x: r.x, y: r.profile, label: "v(x)" }], { title: "profile, one period" });
    out.textContent =
      `period ${r.period.toPrecision(8)}   mu ${r.mu.toPrecision(8)}\n` +
      `minors ${r.minors.map((m) => m.toExponential(4)).join("  ")}   n = ${r.n_hess}\n` +
      `spectral: ${r.spectral}   orbital: ${r.orbital ?? "-"}   conditions: ${r.conditions.join(" ") || "-"}`;
  } catch (e) {
    fail(out, e);
  }
}

function runEvans() {
  const out = $("evans-info");
  out.className = "";
  out.textContent = "computing...";
  setTimeout(() => {
    try {
      const r = JSON.parse(evans($("model").value, num("gamma"), num("sign"), num("lambda"), num("c"), num("depth")));
      const scaled = r.values.map((d, i) => d / r.r[i] ** 3);
      plot($("cv-evans"), [{ x: r.r, y: scaled, label: "d(r)/r^3" }], {
        logx: true,
        title: "Evans function, scaled",
        hlines: [{ y: r.det_hessian, color: "#2ca02c" }, { y: 0, color: "#999" }],
      });
      out.textContent =
        `det Hess theta ${r.det_hessian.toExponential(6)}   fit ${r.fit_coeff?.toExponential(6) ?? "none"}\n` +
        `log-log slope ${r.fit_slope?.toFixed(4) ?? "none"}   tail sign ${r.tail_sign}   sign changes ${r.sign_changes}`;
    } catch (e) {
      fail(out, e);
    }
  }, 10);
}

function runCase() {
  const out = $("case-info");
  out.className = "";
  out.textContent = "computing...";
  setTimeout(() => {
    try {
      const r = JSON.parse(case_sweep($("case").value, Math.round(num("count"))));
      const period = r.rows.map((row) => row.period);
      // signed log of each minor keeps both signs and the scale readable
      const slog = (v) => Math.sign(v) * Math.log10(1 + Math.abs(v));
      const series = r.minor_order.map((name, k) => ({
        x: period, y: r.rows.map((row) => slog(row.minors[k])), label: `m${k + 1} (${name})`,
      }));
      plot($("cv-case"), series, { title: "sign(m) log10(1+|m|) vs period", hlines: [{ y: 0, color: "#999" }] });
      const lines = r.rows.map((row) =>
        `${row.period.toPrecision(6).padStart(12)}  n=${row.n_hess}  ${row.spectral.padEnd(13)} ${row.conditions.join(" ")}` +
        (row.limit_zone !== "none" ? `  [${row.limit_zone}]` : ""));
      out.textContent = `expected: ${r.expected.join(", ")}${r.note ? "\nnote: " + r.note : ""}\nskipped: ${r.skipped}\n` + lines.join("\n");
    } catch (e) {
      fail(out, e);
    }
  }, 10);
}

await init();
$("status").textContent = "ready";
$("depth").addEventListener("input", () => ($("depthv").textContent = Number($("depth").value).toFixed(2)));
$("go-portrait").addEventListener("click", runPortrait);
$("go-evans").addEventListener("click", runEvans);
$("go-case").addEventListener("click", runCase);
runPortrait();
