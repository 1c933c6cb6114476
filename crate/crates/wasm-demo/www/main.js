import init, { search_2d, layer_pmf, node_curve } from "./pkg/lgsd_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function parse(text, errEl) {
  const v = JSON.parse(text);
  if (v && v.error) {
    errEl.textContent = v.error;
    errEl.className = "err";
    return null;
  }
  errEl.className = "";
  return v;
}

// The K slider is logarithmic: K = 10^v.
const k2d = () => Math.pow(10, num("k2d"));

const VIEW = 4; // half-width of the plane view
const plane = $("plane");
const ctx = plane.getContext("2d");
const toPx = (p) => [((p[0] + VIEW) / (2 * VIEW)) * plane.width, ((VIEW - p[1]) / (2 * VIEW)) * plane.height];

function dot(p, r, fill) {
  const [x, y] = toPx(p);
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fillStyle = fill;
  ctx.fill();
}

function drawSearch() {
  $("k2dv").textContent = k2d().toFixed(2);
  const out = $("out2d");
  const res = parse(
    search_2d(num("b11"), num("b12"), num("b21"), num("b22"), num("y1"), num("y2"), k2d(), $("dec2d").value, $("prot").checked),
    out,
  );
  ctx.clearRect(0, 0, plane.width, plane.height);
  if (!res) return;
  for (const p of res.lattice) dot(p.at, 2, "#aaa");
  const t = [num("y1"), num("y2")];
  const [tx, ty] = toPx(t);
  ctx.beginPath();
  ctx.arc(tx, ty, (res.radius / (2 * VIEW)) * plane.width, 0, 2 * Math.PI);
  ctx.strokeStyle = "#6a6";
  ctx.stroke();
  res.candidates.forEach((c, i) => dot(c.at, 4, res.protected[i] ? "#e80" : "#27c"));
  const best = res.candidates.find((c) => res.best && c.x.join() === res.best.join());
  if (best) {
    const [bx, by] = toPx(best.at);
    ctx.beginPath();
    ctx.arc(bx, by, 8, 0, 2 * Math.PI);
    ctx.strokeStyle = "#c22";
    ctx.stroke();
  }
  dot(t, 3, "#000");
  out.textContent =
    `sigma ${res.sigma.toFixed(4)}  radius ${res.radius.toFixed(4)}\n` +
    `babai ${res.babai}  best ${res.best ?? "none"}  dist ${res.best_dist?.toFixed(4) ?? "-"}\n` +
    `visited ${res.visited_nodes}  probes ${res.probe_count}  candidates ${res.candidates.length}\n` +
    res.trace.map((n) => `layer ${n.layer}  [${n.assignment}]  K ${n.pruning_size.toFixed(3)}`).join("\n");
}

plane.addEventListener("click", (e) => {
  const b = plane.getBoundingClientRect();
  $("y1").value = (((e.clientX - b.left) / b.width) * 2 * VIEW - VIEW).toFixed(2);
  $("y2").value = (VIEW - ((e.clientY - b.top) / b.height) * 2 * VIEW).toFixed(2);
  drawSearch();
});

function drawPmf() {
  $("pcv").textContent = num("pc").toFixed(2);
  const out = $("outpmf");
  const canvas = $("pmf");
  const g = canvas.getContext("2d");
  g.clearRect(0, 0, canvas.width, canvas.height);
  const res = parse(layer_pmf(num("pc"), num("ps"), Math.round(num("pj")), num("pk")), out);
  if (!res) return;
  const sorted = [...res.children].sort((a, b) => a[0] - b[0]);
  const lo = sorted[0][0];
  const span = sorted[sorted.length - 1][0] - lo + 1;
  const w = canvas.width / span;
  for (const [z, p] of sorted) {
    const h = p * (canvas.height - 20);
    g.fillStyle = res.survivors.includes(z) ? "#27c" : "#9bd";
    g.fillRect((z - lo) * w + 4, canvas.height - 14 - h, w - 8, h);
    g.fillStyle = "#000";
    g.fillText(String(z), (z - lo) * w + w / 2 - 4, canvas.height - 2);
  }
  out.textContent =
    `mass ${res.mass.toFixed(6)}\n` +
    res.children.map(([z, p]) => `${z}\t${p.toFixed(6)}`).join("\n") +
    `\nsurvivors at K=${num("pk")}: ${res.survivors.join(", ") || "none"}`;
}

function runNodes() {
  const tab = $("ntab");
  const res = parse(
    node_curve(num("nt"), num("nq"), num("ns"), num("ntr"), num("nseed"), $("nd").value, $("nk").value),
    tab,
  );
  if (!res) return;
  tab.innerHTML =
    "<tr><th>K</th><th>avg nodes</th><th>max nodes</th><th>bound n K</th><th>avg list</th><th>BER</th></tr>" +
    res
      .map(
        (r) =>
          `<tr><td>${r.k}</td><td>${r.avg_s.toFixed(2)}</td><td>${r.max_s}</td><td>${r.bound}</td>` +
          `<td>${r.avg_l.toFixed(2)}</td><td>${r.ber.toExponential(3)}</td></tr>`,
      )
      .join("");
}

await init();
$("status").textContent = "";
for (const id of ["b11", "b12", "b21", "b22", "y1", "y2", "k2d", "dec2d", "prot"]) $(id).addEventListener("input", drawSearch);
for (const id of ["pc", "ps", "pj", "pk"]) $(id).addEventListener("input", drawPmf);
$("nrun").addEventListener("click", runNodes);
drawSearch();
drawPmf();
