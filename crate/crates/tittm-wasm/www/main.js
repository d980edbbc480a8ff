// Static glue for the playground: load the wasm module, wire the controls,
// render traces. Build the module first:
//   wasm-pack build crates/tittm-wasm --target web --out-dir www/pkg
import init, { corpus_list, check_program, run_feedback, run_parallel }
  from "./pkg/tittm_wasm.js";

const $ = (id) => document.getElementById(id);

function renderTape(text) {
  // text like "0^5 1^1 | tail 0"
  const holder = $("tape");
  holder.innerHTML = "";
  const [runsPart, tailPart] = text.split("|");
  const cells = [];
  for (const chunk of runsPart.trim().split(/\s+/).filter(Boolean)) {
    const [bit, len] = chunk.split("^");
    for (let i = 0; i < Math.min(+len, 64) ; i++) cells.push(bit === "1");
    if (+len > 64) break;
  }
  const tail = tailPart.trim().endsWith("1");
  while (cells.length < 24) cells.push(tail);
  for (const [i, one] of cells.slice(0, 96).entries()) {
    const d = document.createElement("div");
    d.className = "cell" + (one ? " one" : "") + (i >= cells.length - 8 ? " tail" : "");
    d.title = `cell ${i}: ${one ? 1 : 0}`;
    holder.appendChild(d);
  }
  $("tapetext").textContent = text + (tail ? "  (all further cells are 1)" : "");
}

function renderTree(nodes) {
  const byParent = new Map();
  for (const n of nodes) {
    const key = n.parent === null ? -1 : n.parent;
    if (!byParent.has(key)) byParent.set(key, []);
    byParent.get(key).push(n);
  }
  function build(parentKey) {
    const kids = byParent.get(parentKey) || [];
    if (!kids.length) return null;
    const ul = document.createElement("ul");
    ul.className = "tree";
    for (const n of kids) {
      const li = document.createElement("li");
      li.className = "node";
      const st = document.createElement("span");
      st.className = "st " + n.status;
      st.textContent = n.status;
      li.appendChild(st);
      const label = document.createElement("span");
      label.textContent = `#${n.id} ${n.label}` + (n.clock ? `  @ ${n.clock}` : "");
      li.appendChild(label);
      const sub = build(n.id);
      if (sub) li.appendChild(sub);
      ul.appendChild(li);
    }
    return ul;
  }
  const holder = $("tree");
  holder.innerHTML = "";
  holder.appendChild(build(-1));
}

function showError(message) {
  const v = $("verdict");
  v.className = "unknown";
  v.textContent = "error: " + message;
  $("clock").textContent = "";
  $("witness").textContent = "";
}

function showTrace(doc) {
  if (doc.error) return showError(doc.error);
  const v = $("verdict");
  const klass = doc.verdict.split(":")[0];
  v.className = klass;
  v.textContent = doc.verdict;
  $("clock").textContent = "root clock: " + doc.clock +
    `   (budgets: ${doc.budgets.max_steps} steps/block, ` +
    `${doc.budgets.max_limits} limits, depth ${doc.budgets.max_depth}, ` +
    `cap ${doc.budgets.clock_cap})`;
  $("witness").textContent = doc.witness
    ? "repeated-call witness: " + doc.witness.join("  →  ")
    : "";
  renderTape(doc.tapes.output);
  renderTree(doc.tree);
  $("parallel").innerHTML = "";
}

function showParallel(doc) {
  if (doc.error) return showError(doc.error);
  const v = $("verdict");
  const klass = doc.answer.startsWith("yes") ? "converges"
    : doc.answer.startsWith("no") ? "diverges"
    : doc.answer.startsWith("freezes") ? "freezes" : "unknown";
  v.className = klass;
  v.textContent = "parallel oracle answers: " + doc.answer;
  $("clock").textContent = "every integer below the budget substituted on the blank tape";
  $("witness").textContent = "";
  const holder = $("parallel");
  holder.innerHTML = "<h3 style='margin:12px 0 2px'>instances</h3>";
  const grid = document.createElement("div");
  grid.className = "grid";
  for (const inst of doc.instances) {
    const d = document.createElement("div");
    d.className = "inst " + inst.verdict;
    d.textContent = `n=${inst.n}`;
    d.title = inst.verdict;
    grid.appendChild(d);
  }
  holder.appendChild(grid);
}

function liveCheck() {
  const res = JSON.parse(check_program($("source").value));
  const box = $("check");
  if (res.ok) {
    box.className = "";
    box.textContent = `parses: ${res.states} states, ${res.rows} rows` +
      (res.total_default ? ", total-default" : "") +
      (res.makes_calls ? ", makes oracle calls" : "");
  } else {
    box.className = "bad";
    box.textContent = res.error;
  }
}

async function main() {
  await init();
  const corpus = JSON.parse(corpus_list());
  const select = $("program");
  for (const entry of corpus) {
    const opt = document.createElement("option");
    opt.value = entry.name;
    opt.textContent = entry.name;
    select.appendChild(opt);
  }
  const byName = new Map(corpus.map((e) => [e.name, e]));
  function pick(name) {
    const entry = byName.get(name);
    $("source").value = entry.source;
    $("desc").textContent = entry.description;
    liveCheck();
  }
  select.addEventListener("change", () => pick(select.value));
  $("source").addEventListener("input", liveCheck);
  $("run").addEventListener("click", () => {
    const doc = JSON.parse(run_feedback(
      $("source").value, $("input").value.trim(),
      +$("steps").value, +$("limits").value, +$("depth").value,
      $("cap").value.trim() || "w^3",
    ));
    showTrace(doc);
  });
  $("par").addEventListener("click", () => {
    const doc = JSON.parse(run_parallel($("source").value, 16, +$("steps").value));
    showParallel(doc);
  });
  select.value = "self_call";
  pick("self_call");
}

main();
