//! Fixed-format MPS export.
//!
//! Names are cut to eight characters; collisions get a numeric suffix that
//! replaces their tail. The returned [`NameMap`] maps emitted names back to
//! the model's names. Maximization models are written with the objective
//! negated (fixed MPS has no sense marker) and a comment line saying so.

use std::collections::HashSet;
use std::fmt::Write;

use serde::Serialize;

use super::model::{ConstraintSense, MilpModel, ObjectiveSense, VarKind};

const OBJ_ROW: &str = "OBJ";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NameMap {
    /// (emitted, original) per column, in variable order.
    pub columns: Vec<(String, String)>,
    /// (emitted, original) per row, in constraint order.
    pub rows: Vec<(String, String)>,
}

impl NameMap {
    /// Tab-separated sidecar listing: `kind<TAB>emitted<TAB>original`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kind\temitted\toriginal\n");
        for (e, o) in &self.rows {
            let _ = writeln!(out, "row\t{e}\t{o}");
        }
        for (e, o) in &self.columns {
            let _ = writeln!(out, "column\t{e}\t{o}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsExport {
    pub text: String,
    pub names: NameMap,
}

struct Namer {
    used: HashSet<String>,
}

impl Namer {
    fn new() -> Self {
        Self { used: HashSet::new() }
    }

    fn claim(&mut self, original: &str) -> String {
        let clean: String = original
            .chars()
            .map(|c| if c.is_ascii_graphic() { c } else { '_' })
            .collect();
        let base: String = if clean.is_empty() { "_".into() } else { clean.chars().take(8).collect() };
        if self.used.insert(base.clone()) {
            return base;
        }
        for k in 1u64.. {
            let suffix = format!("~{k}");
            let keep = 8usize.saturating_sub(suffix.len());
            let candidate: String = base.chars().take(keep).collect::<String>() + &suffix;
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
        unreachable!()
    }
}

fn num(v: f64) -> String {
    // 12-character field
    let s = format!("{v}");
    if s.len() <= 12 {
        return s;
    }
    for prec in (1..=8).rev() {
        let e = format!("{v:.prec$E}");
        if e.len() <= 12 {
            return e;
        }
    }
    format!("{v:.1E}")
}

fn field_line(out: &mut String, kind: &str, name1: &str, name2: &str, value: f64) {
    let _ = writeln!(out, " {kind:<2} {name1:<8}  {name2:<8}  {:>12}", num(value));
}

/// Marker in the fixed columns: name in 5-12, `'MARKER'` in 15-22, tag from 40.
fn marker_line(out: &mut String, marker: usize, tag: &str) {
    let name = format!("M{marker}");
    let _ = writeln!(out, "    {name:<8}  'MARKER'                 {tag}");
}

pub fn export_mps(model: &MilpModel, problem_name: &str) -> MpsExport {
    let mut namer = Namer::new();
    namer.used.insert(OBJ_ROW.to_string());
    let mut names = NameMap::default();
    let row_names: Vec<String> = model
        .constraints
        .iter()
        .map(|c| {
            let e = namer.claim(&c.name);
            names.rows.push((e.clone(), c.name.clone()));
            e
        })
        .collect();
    let mut col_namer = Namer::new();
    let col_names: Vec<String> = model
        .variables
        .iter()
        .map(|v| {
            let e = col_namer.claim(&v.name);
            names.columns.push((e.clone(), v.name.clone()));
            e
        })
        .collect();

    let obj_sign = match model.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };

    // column-major view of the rows
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, coef) in &c.terms {
            columns[v.0].push((i, coef));
        }
    }
    let mut obj_coef = vec![0.0; model.variables.len()];
    for &(v, c) in &model.objective.terms {
        obj_coef[v.0] += obj_sign * c;
    }

    let mut out = String::new();
    if model.sense == ObjectiveSense::Maximize {
        out.push_str("* objective negated: original model maximizes\n");
    }
    let pname: String = problem_name.chars().filter(|c| c.is_ascii_graphic()).take(8).collect();
    let _ = writeln!(out, "NAME          {pname}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for (c, name) in model.constraints.iter().zip(&row_names) {
        let t = match c.sense {
            ConstraintSense::Le => "L",
            ConstraintSense::Ge => "G",
            ConstraintSense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {name}");
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, v) in model.variables.iter().enumerate() {
        let is_int = v.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
            marker_line(&mut out, marker, tag);
            marker += 1;
            in_int = is_int;
        }
        let mut entries: Vec<(&str, f64)> = Vec::new();
        if obj_coef[j] != 0.0 {
            entries.push((OBJ_ROW, obj_coef[j]));
        }
        for &(i, coef) in &columns[j] {
            entries.push((&row_names[i], coef));
        }
        if entries.is_empty() {
            // keep the column visible to readers
            entries.push((OBJ_ROW, 0.0));
        }
        for (row, coef) in entries {
            field_line(&mut out, "", &col_names[j], row, coef);
        }
    }
    if in_int {
        marker_line(&mut out, marker, "'INTEND'");
    }

    out.push_str("RHS\n");
    if model.objective.constant != 0.0 {
        field_line(&mut out, "", "RHS", OBJ_ROW, -obj_sign * model.objective.constant);
    }
    for (c, name) in model.constraints.iter().zip(&row_names) {
        if c.rhs != 0.0 {
            field_line(&mut out, "", "RHS", name, c.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    for (v, name) in model.variables.iter().zip(&col_names) {
        let (lo, hi) = (v.lower, v.upper);
        if v.kind == VarKind::Binary {
            if lo == 0.0 && hi == 1.0 {
                field_line(&mut out, "BV", "BND", name, 1.0);
            } else if lo == hi {
                field_line(&mut out, "FX", "BND", name, lo);
            } else {
                field_line(&mut out, "LO", "BND", name, lo);
                field_line(&mut out, "UP", "BND", name, hi);
            }
            continue;
        }
        if lo == hi {
            field_line(&mut out, "FX", "BND", name, lo);
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " FR BND       {name}");
            continue;
        }
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND       {name}");
        } else if lo != 0.0 {
            field_line(&mut out, "LO", "BND", name, lo);
        }
        if hi.is_finite() {
            field_line(&mut out, "UP", "BND", name, hi);
        }
    }
    out.push_str("ENDATA\n");
    MpsExport { text: out, names }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::LinExpr;

    #[test]
    fn minimal_model_has_one_row_and_one_bound() {
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let x = m.add_continuous("x", 3.0, f64::INFINITY);
        m.set_objective(LinExpr::term(x, 1.0));
        let e = export_mps(&m, "tiny");
        let text = &e.text;
        let section = |name: &str| -> Vec<&str> {
            let start = text.lines().position(|l| l == name).unwrap() + 1;
            text.lines()
                .skip(start)
                .take_while(|l| l.starts_with(' '))
                .collect()
        };
        assert_eq!(section("ROWS").len(), 1);
        assert_eq!(section("BOUNDS").len(), 1);
        assert!(section("BOUNDS")[0].starts_with(" LO BND"));
    }

    #[test]
    fn colliding_prefixes_get_distinct_names() {
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        m.add_continuous("delta_plus[0,0,0,0]", 0.0, 1.0);
        m.add_continuous("delta_plus[0,0,0,1]", 0.0, 1.0);
        m.add_continuous("delta_pl", 0.0, 1.0);
        let e = export_mps(&m, "c");
        let emitted: Vec<&String> = e.names.columns.iter().map(|(e, _)| e).collect();
        assert_eq!(emitted.len(), 3);
        let set: HashSet<_> = emitted.iter().collect();
        assert_eq!(set.len(), 3);
        assert!(emitted.iter().all(|n| n.len() <= 8));
    }

    #[test]
    fn binaries_are_wrapped_in_markers() {
        let mut m = MilpModel::new(ObjectiveSense::Maximize);
        let x = m.add_continuous("x", 0.0, 4.0);
        let b = m.add_binary("b");
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(b, -4.0);
        m.add_constraint("link", e, ConstraintSense::Le, 0.0);
        m.set_objective(LinExpr::term(x, 1.0));
        let text = export_mps(&m, "bin").text;
        assert!(text.contains("'INTORG'"));
        assert!(text.contains("'INTEND'"));
        assert!(text.contains(" BV BND"));
        assert!(text.starts_with("* objective negated"));
    }
}
