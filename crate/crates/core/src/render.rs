//! Grid pictures of a set under a bipartition: rows are X indices, columns
//! are Y indices, and each cell carries the subset whose block covers it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::construct::OpsInstance;
use crate::plane::projection_sets;
use crate::state::{unflatten, Bipartition};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRendering {
    pub bipartition: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub labels: Vec<String>,
    /// `cells[x][y]` is the covering subset, if any.
    pub cells: Vec<Vec<Option<usize>>>,
}

fn ket_labels(radices: &[usize]) -> Vec<String> {
    let total: usize = radices.iter().product();
    (0..total)
        .map(|i| {
            unflatten(i, radices)
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(if radices.iter().any(|&r| r > 10) { "," } else { "" })
        })
        .collect()
}

pub fn render_grid(ops: &OpsInstance, bip: &Bipartition) -> GridRendering {
    let ps = projection_sets(ops, bip);
    let rx: Vec<usize> = bip.x.iter().map(|&k| ops.dims.get(k)).collect();
    let ry: Vec<usize> = bip.y.iter().map(|&k| ops.dims.get(k)).collect();
    let mut cells = vec![vec![None; ps.dim_y]; ps.dim_x];
    for (r, (xs, ys)) in ps.x.iter().zip(&ps.y).enumerate() {
        for &x in xs {
            for &y in ys {
                cells[x][y] = Some(r);
            }
        }
    }
    GridRendering {
        bipartition: bip.label(),
        rows: ket_labels(&rx),
        cols: ket_labels(&ry),
        labels: ops.subsets.iter().map(|s| s.label.clone()).collect(),
        cells,
    }
}

impl GridRendering {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn cell_map(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for (x, row) in self.cells.iter().enumerate() {
            for (y, c) in row.iter().enumerate() {
                if let Some(r) = c {
                    m.insert((x, y), *r);
                }
            }
        }
        m
    }

    pub fn blank_cells(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for (x, row) in self.cells.iter().enumerate() {
            for (y, c) in row.iter().enumerate() {
                if c.is_none() {
                    v.push((x, y));
                }
            }
        }
        v
    }

    /// Subsets that appear in the grid, in index order.
    pub fn tiles(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cell_map().into_values().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_text(&self) -> String {
        let w = self
            .labels
            .iter()
            .map(|l| l.len())
            .chain(self.cols.iter().map(|c| c.len()))
            .max()
            .unwrap_or(1)
            .max(1);
        let rw = self.rows.iter().map(|r| r.len()).max().unwrap_or(1);
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.bipartition);
        let _ = write!(out, "{:>rw$} |", "");
        for c in &self.cols {
            let _ = write!(out, " {c:^w$}");
        }
        out.push('\n');
        let _ = writeln!(out, "{}-+{}", "-".repeat(rw), "-".repeat((w + 1) * self.cols.len()));
        for (x, row) in self.cells.iter().enumerate() {
            let _ = write!(out, "{:>rw$} |", self.rows[x]);
            for c in row {
                let l = c.map(|r| self.labels[r].as_str()).unwrap_or(".");
                let _ = write!(out, " {l:^w$}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let cell = 36;
        let (nx, ny) = self.shape();
        let (ox, oy) = (48, 28);
        let width = ox + ny * cell + 8;
        let height = oy + nx * cell + 8;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="10">"#
        );
        let _ = writeln!(s, "<title>{}</title>", escape(&self.bipartition));
        for (y, c) in self.cols.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                ox + y * cell + cell / 2,
                oy - 8,
                escape(c)
            );
        }
        for (x, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                ox - 6,
                oy + x * cell + cell / 2 + 4,
                escape(r)
            );
            for y in 0..ny {
                let (fill, label) = match self.cells[x][y] {
                    Some(t) => (fill_for(t), self.labels[t].as_str()),
                    None => ("#ffffff".to_string(), ""),
                };
                let _ = writeln!(
                    s,
                    r##"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="{fill}" stroke="#333"/>"##,
                    ox + y * cell,
                    oy + x * cell
                );
                if !label.is_empty() {
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                        ox + y * cell + cell / 2,
                        oy + x * cell + cell / 2 + 4,
                        escape(label)
                    );
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Golden-angle hue per subset index.
fn fill_for(t: usize) -> String {
    let hue = (t as f64 * 137.508) % 360.0;
    format!("hsl({hue:.0},60%,78%)")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
