//! Matplotlib scripts that redraw a chart from its CSV. They are written,
//! never executed.

/// Log-log error chart with error bars and a reference slope through the
/// finest point.
pub fn loglog(csv: &str, x: &str, y: &str, err: Option<&str>, reference_slope: Option<f64>, title: &str) -> String {
    let err = err.map(|e| format!("{e:?}")).unwrap_or_else(|| "None".into());
    let slope = reference_slope
        .map(|s| format!("{s:?}"))
        .unwrap_or_else(|| "None".into());
    format!(
        r#"#!/usr/bin/env python3
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
X, Y, ERR, SLOPE = {x:?}, {y:?}, {err}, {slope}

with open(os.path.join(HERE, {csv:?})) as fh:
    rows = list(csv.DictReader(fh))
xs = [float(r[X]) for r in rows]
ys = [float(r[Y]) for r in rows]
fig, ax = plt.subplots(figsize=(5, 4))
if ERR is not None:
    es = [min(float(r[ERR]), 0.99 * y) for r, y in zip(rows, ys)]
    ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label="measured")
else:
    ax.plot(xs, ys, marker="o", label="measured")
if SLOPE is not None:
    x0, y0 = xs[-1], ys[-1]
    ax.plot(xs, [y0 * (x / x0) ** SLOPE for x in xs], "k--", label=f"slope {{SLOPE:g}}")
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel(X)
ax.set_ylabel(Y)
ax.set_title({title:?})
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, {png:?}), dpi=150)
"#,
        png = png_name(csv),
    )
}

/// Line chart of one or more columns against `x`.
pub fn series(csv: &str, x: &str, ys: &[&str], log_y: bool, title: &str) -> String {
    let cols = ys.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(", ");
    let log = if log_y { "True" } else { "False" };
    format!(
        r#"#!/usr/bin/env python3
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))

with open(os.path.join(HERE, {csv:?})) as fh:
    rows = list(csv.DictReader(fh))
xs = [float(r[{x:?}]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 4))
for col in [{cols}]:
    ax.plot(xs, [abs(float(r[col])) if {log} else float(r[col]) for r in rows], label=col)
if {log}:
    ax.set_yscale("symlog", linthresh=1e-18)
ax.set_xlabel({x:?})
ax.set_title({title:?})
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, {png:?}), dpi=150)
"#,
        png = png_name(csv),
    )
}

fn png_name(csv: &str) -> String {
    format!("{}.png", csv.strip_suffix(".csv").unwrap_or(csv))
}
