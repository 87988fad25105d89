import init, { catalogue, orbits, egoView, limitationDemo } from "./pkg/egoae_web.js";

const COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const $ = (id) => document.getElementById(id);
const canvas = $("canvas");
const ctx = canvas.getContext("2d");

function resize() {
  const r = canvas.getBoundingClientRect();
  canvas.width = r.width * devicePixelRatio;
  canvas.height = r.height * devicePixelRatio;
  ctx.setTransform(devicePixelRatio, 0, 0, devicePixelRatio, 0, 0);
}

// Spring layout, seeded so the same graph always lands in the same place.
function layout(n, edges) {
  let s = 12345;
  const rand = () => ((s = (s * 1103515245 + 12345) % 2147483648) / 2147483648);
  const pos = Array.from({ length: n }, (_, i) => ({
    x: Math.cos((2 * Math.PI * i) / n) + 0.1 * rand(),
    y: Math.sin((2 * Math.PI * i) / n) + 0.1 * rand(),
  }));
  for (let it = 0; it < 300; it++) {
    const f = pos.map(() => ({ x: 0, y: 0 }));
    for (let a = 0; a < n; a++) {
      for (let b = a + 1; b < n; b++) {
        const dx = pos[a].x - pos[b].x, dy = pos[a].y - pos[b].y;
        const d2 = Math.max(dx * dx + dy * dy, 1e-4);
        const k = 0.02 / d2;
        f[a].x += k * dx; f[a].y += k * dy; f[b].x -= k * dx; f[b].y -= k * dy;
      }
    }
    for (const [u, v] of edges) {
      const dx = pos[u].x - pos[v].x, dy = pos[u].y - pos[v].y;
      const d = Math.sqrt(dx * dx + dy * dy) || 1e-3;
      const k = 0.1 * (d - 0.5);
      f[u].x -= (k * dx) / d; f[u].y -= (k * dy) / d; f[v].x += (k * dx) / d; f[v].y += (k * dy) / d;
    }
    for (let i = 0; i < n; i++) { pos[i].x += f[i].x; pos[i].y += f[i].y; }
  }
  return pos;
}

function draw(n, edges, directed, colorOf, highlight = new Set()) {
  resize();
  const r = canvas.getBoundingClientRect();
  ctx.clearRect(0, 0, r.width, r.height);
  if (n === 0) return;
  const pos = layout(n, edges);
  const xs = pos.map((p) => p.x), ys = pos.map((p) => p.y);
  const [minX, maxX, minY, maxY] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const scale = Math.min((r.width - 80) / (maxX - minX || 1), (r.height - 80) / (maxY - minY || 1));
  const P = pos.map((p) => ({ x: 40 + (p.x - minX) * scale, y: 40 + (p.y - minY) * scale }));
  ctx.lineWidth = 1.5;
  for (const [u, v] of edges) {
    ctx.strokeStyle = highlight.has(`${u},${v}`) || highlight.has(`${v},${u}`) ? "#000" : "#bbb";
    ctx.beginPath(); ctx.moveTo(P[u].x, P[u].y); ctx.lineTo(P[v].x, P[v].y); ctx.stroke();
    if (directed) {
      const a = Math.atan2(P[v].y - P[u].y, P[v].x - P[u].x);
      const tx = P[v].x - 14 * Math.cos(a), ty = P[v].y - 14 * Math.sin(a);
      ctx.beginPath(); ctx.moveTo(tx, ty);
      ctx.lineTo(tx - 8 * Math.cos(a - 0.4), ty - 8 * Math.sin(a - 0.4));
      ctx.lineTo(tx - 8 * Math.cos(a + 0.4), ty - 8 * Math.sin(a + 0.4));
      ctx.fillStyle = ctx.strokeStyle; ctx.fill();
    }
  }
  for (let i = 0; i < n; i++) {
    ctx.beginPath(); ctx.arc(P[i].x, P[i].y, 12, 0, 2 * Math.PI);
    ctx.fillStyle = colorOf(i) ?? "#eee"; ctx.fill();
    ctx.strokeStyle = "#333"; ctx.stroke();
    ctx.fillStyle = colorOf(i) ? "#fff" : "#333";
    ctx.font = "11px sans-serif"; ctx.textAlign = "center"; ctx.textBaseline = "middle";
    ctx.fillText(String(i), P[i].x, P[i].y);
  }
}

function fail(out, err) {
  out.textContent = String(err);
  out.className = "error";
}

function showOrbits() {
  const out = $("orbits-out");
  out.className = "";
  try {
    const text = $("template").value;
    const t = JSON.parse(text);
    const report = JSON.parse(orbits(text));
    out.textContent = JSON.stringify(report);
    const orbitOf = {};
    report.orbits.forEach((o, j) => o.forEach((u) => (orbitOf[u] = j)));
    draw(t.num_nodes, t.edges, !!t.directed, (i) => COLORS[orbitOf[i] % COLORS.length]);
  } catch (e) {
    fail(out, e);
  }
}

function showMatch() {
  const out = $("match-out");
  out.className = "";
  try {
    const v = JSON.parse(egoView($("edges").value, $("directed").checked, $("template").value,
      Number($("ego").value), Number($("cap").value)));
    const setOf = {};
    v.ae_sets.forEach((set, j) => set.forEach((u) => { if (!(u in setOf)) setOf[u] = j; }));
    const hl = new Set();
    const t = JSON.parse($("template").value);
    for (const m of v.matches) for (const [a, b] of t.edges) hl.add(`${m[a]},${m[b]}`);
    draw(v.num_nodes, v.edges, $("directed").checked, (i) => (i in setOf ? COLORS[setOf[i] % COLORS.length] : null), hl);
    $("legend").innerHTML = v.ae_sets
      .map((s, j) => `<span style="background:${COLORS[j % COLORS.length]}">A${j}: {${s.join(", ")}}</span>`)
      .join("");
    out.textContent = `${v.matches.length} match(es)${v.truncated ? " (truncated)" : ""}\n` +
      v.matches.map((m) => `[${m.join(", ")}]`).join("\n");
  } catch (e) {
    fail(out, e);
  }
}

function showLimitation() {
  const out = $("limitation-out");
  out.className = "";
  try {
    const r = JSON.parse(limitationDemo(Number($("layers").value), Number($("seeds").value)));
    const lines = r.mpnn.map((d) => `depth ${d.layers}: max pairwise distance ${d.mpnn_max_distance}`);
    lines.push(`triangle template separated ${r.grape_separated}/${r.grape_distances.length} seeds ` +
      `(min distance ${Math.min(...r.grape_distances).toExponential(3)})`);
    lines.push(r.passed ? "PASS" : "FAIL");
    out.textContent = lines.join("\n");
    draw(r.num_nodes, r.edges, false, (i) => (i < 6 ? COLORS[1] : COLORS[0]));
  } catch (e) {
    fail(out, e);
  }
}

await init();
const entries = JSON.parse(catalogue());
for (const e of entries) {
  const opt = document.createElement("option");
  opt.value = JSON.stringify(e.template);
  opt.textContent = `${e.name} (${e.template.directed ? "directed, " : ""}${e.orbits.length} orbits)`;
  $("catalogue").append(opt);
}
$("catalogue").selectedIndex = 2;
$("template").value = $("catalogue").value;
$("catalogue").addEventListener("change", () => { $("template").value = $("catalogue").value; showOrbits(); });
$("show-orbits").addEventListener("click", showOrbits);
$("match").addEventListener("click", showMatch);
$("limitation").addEventListener("click", showLimitation);
addEventListener("resize", showOrbits);
showOrbits();
