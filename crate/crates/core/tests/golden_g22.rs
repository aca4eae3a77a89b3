use lls_core::drop::{replay_certificate, DropContext, Rule};
use lls_core::render::{render_tensor, twist_header, Format};
use lls_core::verify::{verify_table, SideCondition, VerifyConfig};
use lls_core::{default_multidegree, DegeneracyClass, PotentialSection, Swap, TensorTable, VanishingTable};
use serde::Deserialize;

const EXAMPLE: &str = include_str!("fixtures/g22_example.json");
const TENSOR: &str = include_str!("fixtures/g22_tensor_golden.json");

const DEFAULT_C: [i64; 21] = [3, 5, 7, 9, 12, 14, 17, 19, 21, 23, 25, 27, 29, 31, 33, 36, 38, 41, 43, 45, 47];

#[derive(Deserialize)]
struct GoldenRow {
    row: (usize, usize),
    a: Vec<i32>,
    b: Vec<i32>,
    highlight: Vec<bool>,
}

fn example() -> VanishingTable {
    let t = VanishingTable::from_json(EXAMPLE).unwrap();
    t.validate().unwrap();
    t
}

fn golden() -> Vec<GoldenRow> {
    serde_json::from_str(TENSOR).unwrap()
}

#[test]
fn example_has_one_minimal_swap() {
    let t = example();
    assert_eq!((t.n(), t.r(), t.d(), t.rho()), (22, 6, 25, 1));
    assert_eq!(t.find_swaps(), vec![Swap { column: 9, rows: (2, 3), minimal: true }]);
    assert_eq!(t.classify_degeneracy(), DegeneracyClass::Single { i0: 9, rows: (2, 3) });
    let rho = t.rho_accounting().unwrap();
    assert_eq!(rho.total, 1);
    assert_eq!(rho.exceptional_defect, 1);
    assert_eq!(t.exceptional_rows(), vec![(9, 2)]);
}

#[test]
fn default_multidegree_matches_header() {
    let t = example();
    let w = default_multidegree(&t).unwrap();
    assert_eq!(w.c(), &DEFAULT_C);
    assert_eq!(w.total(), 50);
    // header cells c_i over 2d − c_{i+1}
    let header = twist_header(&w, t.d());
    assert_eq!(header[0], (None, Some(47)));
    assert_eq!(header[4], (Some(9), Some(38)));
    assert_eq!(header[21], (Some(47), None));
}

#[test]
fn tensor_table_matches_golden_cell_for_cell() {
    let t = example();
    let tt = TensorTable::new(&t);
    let rows = golden();
    assert_eq!(rows.len(), 28);
    for (k, g) in rows.iter().enumerate() {
        assert_eq!(tt.rows()[k], g.row);
        for i in 1..=22 {
            assert_eq!(tt.a(k, i), g.a[i - 1], "a at row {:?}, column {}", g.row, i);
            assert_eq!(tt.b(k, i), g.b[i - 1], "b at row {:?}, column {}", g.row, i);
        }
    }
}

#[test]
fn sections_match_highlighted_cells() {
    let t = example();
    let w = default_multidegree(&t).unwrap();
    let tt = TensorTable::new(&t);
    let sections = tt.potential_sections(&w);
    assert_eq!(sections.len(), 29);
    for g in golden() {
        for i in 1..=22 {
            let lit = sections.iter().any(|s| s.row == g.row && s.contains(i));
            assert_eq!(lit, g.highlight[i - 1], "row {:?}, column {}", g.row, i);
        }
    }
    let of = |row| sections.iter().filter(|s| s.row == row).copied().collect::<Vec<_>>();
    assert_eq!(
        of((2, 2)),
        vec![PotentialSection { row: (2, 2), start: 5, end: 7 }, PotentialSection { row: (2, 2), start: 12, end: 12 }]
    );
    assert_eq!(of((2, 3)), vec![PotentialSection { row: (2, 3), start: 7, end: 11 }]);
    assert_eq!(tt.potential_sections_naive(&w), sections);
}

#[test]
fn everything_drops_with_three_blocks() {
    let t = example();
    let w = default_multidegree(&t).unwrap();
    let tt = TensorTable::new(&t);
    let ctx = DropContext::new(&t, &tt, &w, tt.potential_sections(&w));
    let outcome = ctx.drop_all();
    let cert = outcome.certificate().expect("all sections drop").clone();
    let mut blocks = cert.blocks();
    blocks.sort_unstable();
    assert_eq!(blocks, vec![(5, 6), (7, 16), (17, 18)]);
    assert!(cert.steps.iter().all(|s| s.rule != Rule::AtMostTwo || s.dropped.len() <= 2));
    let dropped: usize = cert.steps.iter().map(|s| s.dropped.len()).sum();
    assert_eq!(dropped, 29);
    assert!(replay_certificate(&t, &tt, &w, &cert).unwrap());
    assert!(ctx.exists_successful_order());
}

#[test]
fn verdict_passes_at_default() {
    let t = example();
    let v = verify_table(&t, &VerifyConfig { max_candidates: None, include_certificate: true });
    assert!(v.pass);
    assert_eq!(v.candidate, Some(0));
    assert_eq!(v.side_condition, SideCondition::NotApplicable);
    assert!(!v.left_weighted_required);
    assert!(v.violations.is_empty());
    assert_eq!(v.w.unwrap().c(), &DEFAULT_C);
    assert_eq!(v.certificate.unwrap().steps.len(), v.certificate_steps);
}

/// Cells of a rendered LaTeX row: (value, highlighted).
fn latex_cells(line: &str) -> Vec<(String, bool)> {
    line.trim_end_matches("\\\\")
        .split(" & ")
        .map(|c| {
            let lit = c.contains("\\cellcolor");
            let v = c.replace("\\cellcolor[gray]{.8}", "").replace('$', "");
            (v.trim().to_string(), lit)
        })
        .collect()
}

#[test]
fn latex_rendering_reproduces_the_table() {
    let t = example();
    let w = default_multidegree(&t).unwrap();
    let tex = render_tensor(&t, &w, Format::Latex);
    let lines: Vec<&str> = tex.lines().collect();
    assert!(lines[0].starts_with("\\begin{tabular}{llr|lr|"));
    let header = latex_cells(lines[1]);
    assert_eq!(header.len(), 45);
    assert_eq!(header[2].0, "47");
    assert_eq!(header[3].0, "3");
    assert_eq!(header[43].0, "47");
    assert_eq!(header[44].0, "");
    assert_eq!(lines[2], "\\hline");
    for (k, g) in golden().iter().enumerate() {
        let cells = latex_cells(lines[3 + k]);
        assert_eq!(cells[0].0, format!("({},{})", g.row.0, g.row.1));
        for i in 0..22 {
            assert_eq!(cells[1 + 2 * i].0, g.a[i].to_string());
            assert_eq!(cells[2 + 2 * i].0, g.b[i].to_string());
            assert_eq!(cells[1 + 2 * i].1, g.highlight[i]);
            assert_eq!(cells[2 + 2 * i].1, g.highlight[i]);
        }
    }
    assert_eq!(lines.last(), Some(&"\\end{tabular}"));
}

#[test]
fn json_round_trip() {
    let t = example();
    assert_eq!(VanishingTable::from_json(&t.to_json()).unwrap(), t);
}
