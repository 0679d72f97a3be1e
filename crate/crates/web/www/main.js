import init, { equilibrium, epsilon_curve, trajectory } from './pkg/seeding_web.js';

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const int = (id) => Math.max(0, Math.round(num(id)));

function params() {
  return [num('alpha'), num('price'), num('beta'), num('delta')];
}

function fmt(x) {
  if (x === null || x === undefined) return 'undefined';
  return Math.abs(x) >= 1e4 || (x !== 0 && Math.abs(x) < 1e-3) ? x.toExponential(4) : x.toFixed(5);
}

function plot(canvas, series, { logX = false, logY = false } = {}) {
  const ctx = canvas.getContext('2d');
  const { width: w, height: h } = canvas;
  const pad = 44;
  ctx.clearRect(0, 0, w, h);
  const tx = logX ? Math.log10 : (v) => v;
  const ty = logY ? Math.log10 : (v) => v;
  const pts = series.flatMap((s) => s.points).filter(([x, y]) => (!logX || x > 0) && (!logY || y > 0));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => tx(p[0]))), Math.max(...pts.map((p) => tx(p[0])))];
  let [y0, y1] = [Math.min(...pts.map((p) => ty(p[1]))), Math.max(...pts.map((p) => ty(p[1])))];
  if (!logY) y0 = Math.min(0, y0);
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const X = (x) => pad + ((tx(x) - x0) / (x1 - x0)) * (w - 2 * pad);
  const Y = (y) => h - pad + ((ty(y) - y0) / (y1 - y0)) * (2 * pad - h);

  ctx.strokeStyle = '#999';
  ctx.fillStyle = '#555';
  ctx.font = '11px system-ui';
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  const label = (v, log) => (log ? `1e${v.toFixed(1)}` : v.toPrecision(3));
  ctx.fillText(label(y1, logY), 2, pad / 2 + 8);
  ctx.fillText(label(y0, logY), 2, h - pad);
  ctx.fillText(label(x0, logX), pad, h - pad + 16);
  ctx.fillText(label(x1, logX), w - pad - 30, h - pad + 16);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(X(x), Y(y)) : ctx.lineTo(X(x), Y(y))));
    ctx.stroke();
    for (const [x, y] of s.points) ctx.fillRect(X(x) - 2, Y(y) - 2, 4, 4);
  }
}

function guarded(fn) {
  return () => {
    try {
      $('error').textContent = '';
      fn();
    } catch (e) {
      $('error').textContent = e.message ?? String(e);
    }
  };
}

const updateEquilibrium = guarded(() => {
  const r = JSON.parse(equilibrium(int('chi'), int('m'), num('g'), ...params()));
  const rows = [
    ['agents', r.n],
    ['role-model centrality (numeric)', fmt(r.c_leader)],
    ['role-model centrality (closed form)', fmt(r.c_leader_closed_form)],
    ['Nash seeding of a role model', fmt(r.seed_leader)],
    ['Nash seeding of a follower', fmt(r.seed_follower)],
    ['firm utility at Nash', fmt(r.nash_utility)],
    ['firm utility seeding role models only', fmt(r.role_model_utility)],
    ['epsilon (closed form)', fmt(r.tau)],
    ['epsilon (exact gain ratio)', fmt(r.epsilon_exact)],
  ];
  $('equilibrium').innerHTML = rows.map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`).join('');
});

const updateCurve = guarded(() => {
  const r = JSON.parse(epsilon_curve(int('chi'), num('g'), ...params(), int('mmax')));
  plot($('curve'), [
    { color: '#1565c0', points: r.points.map((p) => [p.m, p.epsilon]) },
    { color: '#c62828', points: r.points.filter((p) => p.epsilon_exact !== null).map((p) => [p.m, p.epsilon_exact]) },
  ], { logX: true, logY: true });
  $('slope').textContent = r.slope === null ? '' : `log-log slope for m ≥ 10: ${r.slope.toFixed(3)}`;
});

const updatePaths = guarded(() => {
  const r = JSON.parse(trajectory(int('chi'), int('m'), num('g'), ...params(), int('steps'), $('seeding').value));
  plot($('paths'), [
    { color: '#1565c0', points: r.total_bar.map((v, k) => [k, v]) },
    { color: '#c62828', points: r.total_under.map((v, k) => [k, v]) },
  ]);
});

function updateAll() {
  updateEquilibrium();
  updateCurve();
  updatePaths();
}

await init();
$('params').addEventListener('change', updateAll);
$('mmax').addEventListener('change', updateCurve);
$('steps').addEventListener('change', updatePaths);
$('seeding').addEventListener('change', updatePaths);
updateAll();
