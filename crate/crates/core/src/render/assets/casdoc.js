(function () {
  "use strict";
  var meta = function (name) {
    var m = document.querySelector('meta[name="casdoc:' + name + '"]');
    return m ? m.getAttribute("content") : null;
  };
  var endpoint = meta("telemetry");
  var did = meta("document-id");
  var code = document.querySelector(".cd-code-wrap");
  var pinned = {};
  var undo = [];
  var redo = [];
  var floating = null;

  function cookie(name) {
    var m = document.cookie.match(new RegExp("(?:^|; )" + name + "=([^;]*)"));
    return m ? decodeURIComponent(m[1]) : null;
  }

  function emit(type, detail) {
    if (!endpoint || !cookie("pid")) return;
    var ev = { t: new Date().toISOString(), type: type, did: did, detail: detail };
    var pid = cookie("pid");
    var sid = cookie("sid");
    if (pid) ev.pid = pid;
    if (sid) ev.sid = sid;
    try {
      fetch(endpoint, { method: "POST", body: JSON.stringify([ev]), keepalive: true,
        headers: { "Content-Type": "application/json" } }).catch(function () {});
    } catch (e) { /* telemetry never affects reading */ }
  }

  function payload(id) {
    return document.querySelector('.cd-annotation[data-cd-id="' + CSS.escape(id) + '"]');
  }

  function anchorsOf(id) {
    return document.querySelectorAll('.cd-anchor[data-cd-ids~="' + CSS.escape(id) + '"], .cd-anchor-cont[data-cd-ids~="' + CSS.escape(id) + '"]');
  }

  function trail(id) {
    var chain = [];
    var p = payload(id);
    while (p && p.getAttribute("data-cd-parent")) {
      var parent = p.getAttribute("data-cd-parent");
      chain.unshift(parent);
      p = payload(parent);
    }
    return chain;
  }

  function panelFor(id, cls) {
    var src = payload(id);
    if (!src) return null;
    var panel = document.createElement("div");
    panel.className = "cd-panel " + cls;
    panel.setAttribute("data-cd-id", id);
    var crumbs = trail(id);
    if (crumbs.length) {
      var nav = document.createElement("div");
      nav.className = "cd-breadcrumbs";
      crumbs.forEach(function (c) {
        var a = document.createElement("a");
        a.href = "#";
        a.textContent = (payload(c) && payload(c).getAttribute("data-cd-title")) || c;
        a.addEventListener("click", function (e) {
          e.preventDefault();
          emit("navigation_widget", { widget: "breadcrumb", result: c });
          pin(c, "breadcrumb", true);
        });
        nav.appendChild(a);
        nav.appendChild(document.createTextNode(" › "));
      });
      panel.appendChild(nav);
    }
    panel.insertAdjacentHTML("beforeend", src.innerHTML);
    wire(panel);
    return panel;
  }

  function place(panel, near, pos) {
    var box = code.getBoundingClientRect();
    var r = near ? near.getBoundingClientRect() : box;
    panel.style.left = (pos ? pos.x : r.left - box.left) + "px";
    panel.style.top = (pos ? pos.y : r.bottom - box.top + 4) + "px";
    if (pos) { panel.style.width = pos.w + "px"; panel.style.height = pos.h + "px"; }
    code.appendChild(panel);
  }

  function pin(id, via, record, pos) {
    if (pinned[id]) return;
    var first = anchorsOf(id)[0];
    var panel = panelFor(id, "cd-pinned-panel");
    if (!panel) return;
    place(panel, first, pos);
    pinned[id] = panel;
    anchorsOf(id).forEach(function (a) { a.classList.add("cd-pinned"); });
    if (record) { undo.push({ id: id, open: true }); redo = []; }
    emit("open_close_annotation", { annotation: id, action: "open", via: via });
  }

  function unpin(id, via, record) {
    var panel = pinned[id];
    if (!panel) return;
    panel.remove();
    delete pinned[id];
    anchorsOf(id).forEach(function (a) { a.classList.remove("cd-pinned"); });
    if (record) { undo.push({ id: id, open: false }); redo = []; }
    emit("open_close_annotation", { annotation: id, action: "close", via: via });
  }

  function wire(root) {
    root.querySelectorAll(".cd-anchor, .cd-anchor-cont").forEach(function (el) {
      var ids = el.getAttribute("data-cd-ids").split(" ");
      var timer = null;
      var start = 0;
      el.addEventListener("mouseenter", function () {
        start = Date.now();
        timer = setTimeout(function () {
          if (floating) floating.remove();
          floating = panelFor(ids[0], "cd-floating");
          if (floating) place(floating, el);
        }, 300);
      });
      el.addEventListener("mouseleave", function () {
        clearTimeout(timer);
        var dwell = Date.now() - start;
        if (dwell >= 1000) emit("interact_marker", { marker: ids[0], dwell_ms: dwell });
        if (floating) { floating.remove(); floating = null; }
      });
      el.addEventListener("click", function () {
        ids.forEach(function (id) {
          if (pinned[id]) unpin(id, "anchor", true); else pin(id, "anchor", true);
        });
      });
    });
  }

  function button(cls, fn) {
    var b = document.querySelector(cls);
    if (b) b.addEventListener("click", fn);
  }

  button(".cd-undo", function () {
    var a = undo.pop();
    if (!a) return;
    redo.push(a);
    emit("navigation_widget", { widget: "undo", result: a.id });
    if (a.open) unpin(a.id, "undo", false); else pin(a.id, "undo", false);
  });
  button(".cd-redo", function () {
    var a = redo.pop();
    if (!a) return;
    undo.push(a);
    emit("navigation_widget", { widget: "redo", result: a.id });
    if (a.open) pin(a.id, "redo", false); else unpin(a.id, "redo", false);
  });

  var wt = document.querySelector(".cd-walkthrough");
  var step = -1;
  if (wt) wt.addEventListener("click", function () {
    var ids = wt.getAttribute("data-cd-walkthrough").split(" ");
    if (step >= 0) unpin(ids[step], "walkthrough", true);
    step = (step + 1) % ids.length;
    emit("navigation_widget", { widget: "walkthrough", result: ids[step] });
    pin(ids[step], "walkthrough", true);
  });

  var search = document.querySelector(".cd-search");
  var results = null;
  if (search) search.addEventListener("input", function () {
    var q = search.value.trim().toLowerCase();
    if (results) results.remove();
    var selections = [];
    if (!q) return;
    results = document.createElement("ul");
    results.className = "cd-results";
    document.querySelectorAll(".cd-annotation").forEach(function (p) {
      var id = p.getAttribute("data-cd-id");
      var text = ((p.getAttribute("data-cd-title") || "") + " " + p.textContent).toLowerCase();
      if (text.indexOf(q) < 0) return;
      var li = document.createElement("li");
      li.textContent = p.getAttribute("data-cd-title") || id;
      li.addEventListener("mouseenter", function () {
        emit("search", { query: search.value, selections: [{ annotation: id, action: "hover" }] });
      });
      li.addEventListener("click", function () {
        emit("search", { query: search.value, selections: [{ annotation: id, action: "select" }] });
        trail(id).forEach(function (c) { pin(c, "search", true); });
        pin(id, "search", true);
      });
      results.appendChild(li);
    });
    search.parentNode.appendChild(results);
    emit("search", { query: search.value, selections: selections });
  });

  function b64(s) {
    return btoa(unescape(encodeURIComponent(s))).replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
  }
  function unb64(s) {
    return decodeURIComponent(escape(atob(s.replace(/-/g, "+").replace(/_/g, "/"))));
  }

  button(".cd-save", function () {
    var pins = Object.keys(pinned).sort().map(function (id) {
      var p = pinned[id];
      return { id: id, x: Math.max(0, Math.round(p.offsetLeft)), y: Math.max(0, Math.round(p.offsetTop)),
        w: Math.max(1, Math.round(p.offsetWidth)), h: Math.max(1, Math.round(p.offsetHeight)) };
    });
    location.hash = "cds=" + b64(JSON.stringify({ v: 1, pins: pins }));
  });

  wire(document.querySelector(".cd-code-wrap"));
  var m = location.hash.match(/^#cds=([A-Za-z0-9_-]*=*)$/);
  if (m) {
    try {
      var state = JSON.parse(unb64(m[1]));
      if (state.v === 1) state.pins.forEach(function (p) { if (payload(p.id)) pin(p.id, "state", false, p); });
    } catch (e) { /* no saved state */ }
  }
})();
