//! ASCII and LaTeX renderings in the two-subcolumn layout: each column i
//! shows an a-value and a b-value side by side.

use std::fmt::Write;

use crate::multidegree::TwistVector;
use crate::table::VanishingTable;
use crate::tensor::TensorTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Ascii,
    Latex,
}

/// Header cells (c_i, 2d − c_{i+1}) for each column, blank where they are
/// 0 or 2d at the ends.
pub fn twist_header(w: &TwistVector, d: i32) -> Vec<(Option<i64>, Option<i64>)> {
    let n = w.n();
    (1..=n)
        .map(|i| {
            let a = (i > 1).then(|| w.c_at(i));
            let b = (i < n).then(|| 2 * d as i64 - w.c_at(i + 1));
            (a, b)
        })
        .collect()
}

pub fn render_table(t: &VanishingTable, format: Format) -> String {
    let rows: Vec<(String, Vec<(Cell, Cell)>)> = (0..t.rows())
        .map(|j| {
            let cells = (1..=t.n()).map(|i| (Cell::plain(t.a(i, j)), Cell::plain(t.b(i, j)))).collect();
            (String::new(), cells)
        })
        .collect();
    grid(None, &rows, false, format)
}

/// The tensor table with the potential sections of `w` highlighted.
pub fn render_tensor(t: &VanishingTable, w: &TwistVector, format: Format) -> String {
    let tt = TensorTable::new(t);
    let sections = tt.potential_sections(w);
    let rows: Vec<(String, Vec<(Cell, Cell)>)> = tt
        .rows()
        .iter()
        .enumerate()
        .map(|(k, &row)| {
            let cells = (1..=tt.n())
                .map(|i| {
                    let lit = sections.iter().any(|s| s.row == row && s.contains(i));
                    (Cell { v: Some(tt.a(k, i) as i64), lit }, Cell { v: Some(tt.b(k, i) as i64), lit })
                })
                .collect();
            (format!("({},{})", row.0, row.1), cells)
        })
        .collect();
    let header: Vec<(Cell, Cell)> = twist_header(w, t.d())
        .into_iter()
        .map(|(a, b)| (Cell { v: a, lit: false }, Cell { v: b, lit: false }))
        .collect();
    grid(Some(&header), &rows, true, format)
}

/// The twist vector alone, as the header row of the tensor table.
pub fn render_twist(w: &TwistVector, d: i32, format: Format) -> String {
    let header: Vec<(Cell, Cell)> =
        twist_header(w, d).into_iter().map(|(a, b)| (Cell { v: a, lit: false }, Cell { v: b, lit: false })).collect();
    grid(Some(&header), &[], false, format)
}

#[derive(Clone, Copy)]
struct Cell {
    v: Option<i64>,
    lit: bool,
}

impl Cell {
    fn plain(v: i32) -> Self {
        Cell { v: Some(v as i64), lit: false }
    }
}

fn grid(header: Option<&[(Cell, Cell)]>, rows: &[(String, Vec<(Cell, Cell)>)], labels: bool, format: Format) -> String {
    match format {
        Format::Latex => latex(header, rows, labels),
        Format::Ascii => ascii(header, rows, labels),
    }
}

fn latex(header: Option<&[(Cell, Cell)]>, rows: &[(String, Vec<(Cell, Cell)>)], labels: bool) -> String {
    let n = header.map(|h| h.len()).or_else(|| rows.first().map(|r| r.1.len())).unwrap_or(0);
    let mut out = String::new();
    let spec = vec!["lr"; n].join("|");
    let _ = writeln!(out, "\\begin{{tabular}}{{{}{}}}", if labels { "l" } else { "" }, spec);
    let cell = |c: &Cell| {
        let v = c.v.map(|v| format!("${}$", v)).unwrap_or_default();
        if c.lit {
            format!("\\cellcolor[gray]{{.8}} {}", v)
        } else {
            v
        }
    };
    let line = |label: Option<String>, cells: &[(Cell, Cell)]| {
        let mut parts: Vec<String> = label.into_iter().collect();
        for (a, b) in cells {
            parts.push(cell(a));
            parts.push(cell(b));
        }
        format!("{} \\\\", parts.join(" & "))
    };
    if let Some(h) = header {
        let _ = writeln!(out, "{}", line(labels.then(String::new), h));
        if !rows.is_empty() {
            let _ = writeln!(out, "\\hline");
        }
    }
    for (label, cells) in rows {
        let _ = writeln!(out, "{}", line(labels.then(|| format!("${}$", label)), cells));
    }
    out.push_str("\\end{tabular}\n");
    out
}

fn ascii(header: Option<&[(Cell, Cell)]>, rows: &[(String, Vec<(Cell, Cell)>)], labels: bool) -> String {
    // highlighted values are wrapped in brackets
    let text = |c: &Cell| match (c.v, c.lit) {
        (Some(v), true) => format!("[{}]", v),
        (Some(v), false) => v.to_string(),
        (None, _) => String::new(),
    };
    let all = header.into_iter().chain(rows.iter().map(|r| r.1.as_slice()));
    let width = all.flat_map(|r| r.iter().flat_map(|(a, b)| [text(a).len(), text(b).len()])).max().unwrap_or(1);
    let label_width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let line = |label: &str, cells: &[(Cell, Cell)]| {
        let mut s = String::new();
        if labels {
            let _ = write!(s, "{:<w$} |", label, w = label_width);
        }
        for (k, (a, b)) in cells.iter().enumerate() {
            if k > 0 || labels {
                s.push(' ');
            }
            let _ = write!(s, "{:<w$} {:>w$} |", text(a), text(b), w = width);
        }
        s.pop();
        s.trim_end().to_string()
    };
    let mut out = String::new();
    if let Some(h) = header {
        let l = line("", h);
        let _ = writeln!(out, "{}", l);
        if !rows.is_empty() {
            let _ = writeln!(out, "{}", "-".repeat(l.len()));
        }
    }
    for (label, cells) in rows {
        let _ = writeln!(out, "{}", line(label, cells));
    }
    out
}
