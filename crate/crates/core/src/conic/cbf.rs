//! Plain-text dump of a [`ConicProgram`] in the Conic Benchmark Format
//! (version 3), for inspecting a subproblem in an external solver.
//!
//! The objective is stated as a maximization of the linear part only; log
//! terms are written as exponential-cone rows with their own auxiliary
//! columns so the file stays self-contained.

use std::f64::consts::LN_2;
use std::fmt::Write;

use super::expr::{AffineExpr, VarId};
use super::program::{ConicProgram, Sense, SocBlock};

struct Block {
    cone: &'static str,
    rows: Vec<AffineExpr>,
}

pub fn to_cbf(program: &ConicProgram) -> String {
    let n_vars = program.num_vars();
    let n = n_vars + program.log_terms.len();
    let mut blocks: Vec<Block> = Vec::new();

    for l in &program.linear_constraints {
        let (cone, e) = match l.sense {
            Sense::Eq => ("L=", l.expr.clone()),
            Sense::Ge => ("L+", l.expr.clone()),
            Sense::Le => ("L+", -l.expr.clone()),
        };
        blocks.push(Block { cone, rows: vec![e] });
    }
    for (i, v) in program.variables.iter().enumerate() {
        let x = AffineExpr::var(VarId(i));
        if let Some(l) = v.lower {
            blocks.push(Block { cone: "L+", rows: vec![x.clone() - l] });
        }
        if let Some(u) = v.upper {
            blocks.push(Block { cone: "L+", rows: vec![-x + u] });
        }
    }
    for s in &program.soc_blocks {
        match s {
            SocBlock::Standard { head, tail } => {
                let mut rows = vec![head.clone()];
                rows.extend(tail.iter().cloned());
                blocks.push(Block { cone: "Q", rows });
            }
            SocBlock::Rotated { a, b, tail } => {
                // CBF QR is 2 a b >= |tail|^2
                let mut rows = vec![a.clone() * 0.5, b.clone()];
                rows.extend(tail.iter().cloned());
                blocks.push(Block { cone: "QR", rows });
            }
        }
    }
    // CBF EXP is x0 >= x1 exp(x2 / x1)
    for (i, t) in program.log_terms.iter().enumerate() {
        blocks.push(Block {
            cone: "EXP",
            rows: vec![
                AffineExpr::var(t.var),
                AffineExpr::constant(1.0),
                AffineExpr::var(VarId(n_vars + i)),
            ],
        });
    }

    let mut out = String::new();
    let _ = writeln!(out, "VER\n3\n");
    let _ = writeln!(out, "OBJSENSE\nMAX\n");
    let _ = writeln!(out, "VAR\n{n} 1\nF {n}\n");

    let m: usize = blocks.iter().map(|b| b.rows.len()).sum();
    let _ = writeln!(out, "CON\n{m} {}", blocks.len());
    for b in &blocks {
        let _ = writeln!(out, "{} {}", b.cone, b.rows.len());
    }
    out.push('\n');

    if !program.psd_blocks.is_empty() {
        let _ = writeln!(out, "PSDCON\n{}", program.psd_blocks.len());
        for _ in &program.psd_blocks {
            let _ = writeln!(out, "3");
        }
        out.push('\n');
    }

    let mut obj: Vec<(usize, f64)> = program
        .linear_objective
        .terms
        .iter()
        .map(|(v, c)| (v.0, *c))
        .collect();
    for (i, t) in program.log_terms.iter().enumerate() {
        obj.push((n_vars + i, t.weight / LN_2));
    }
    if !obj.is_empty() {
        let _ = writeln!(out, "OBJACOORD\n{}", obj.len());
        for (j, c) in &obj {
            let _ = writeln!(out, "{j} {c:e}");
        }
        out.push('\n');
    }
    if program.linear_objective.constant != 0.0 {
        let _ = writeln!(out, "OBJBCOORD\n{:e}\n", program.linear_objective.constant);
    }

    let rows: Vec<&AffineExpr> = blocks.iter().flat_map(|b| b.rows.iter()).collect();
    let a: Vec<(usize, usize, f64)> = rows
        .iter()
        .enumerate()
        .flat_map(|(r, e)| e.terms.iter().filter(|(_, c)| *c != 0.0).map(move |(v, c)| (r, v.0, *c)))
        .collect();
    if !a.is_empty() {
        let _ = writeln!(out, "ACOORD\n{}", a.len());
        for (r, j, c) in &a {
            let _ = writeln!(out, "{r} {j} {c:e}");
        }
        out.push('\n');
    }
    let b: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter(|(_, e)| e.constant != 0.0)
        .map(|(r, e)| (r, e.constant))
        .collect();
    if !b.is_empty() {
        let _ = writeln!(out, "BCOORD\n{}", b.len());
        for (r, c) in &b {
            let _ = writeln!(out, "{r} {c:e}");
        }
        out.push('\n');
    }

    // PSD blocks as sum_j F_j x_j + G, lower triangle only
    let mut f = Vec::new();
    let mut g = Vec::new();
    for (k, p) in program.psd_blocks.iter().enumerate() {
        for i in 0..3 {
            for j in 0..=i {
                let e = &p.entries[i][j];
                for (v, c) in &e.terms {
                    if *c != 0.0 {
                        f.push(format!("{k} {} {i} {j} {c:e}", v.0));
                    }
                }
                if e.constant != 0.0 {
                    g.push(format!("{k} {i} {j} {:e}", e.constant));
                }
            }
        }
    }
    if !f.is_empty() {
        let _ = writeln!(out, "HCOORD\n{}", f.len());
        for l in &f {
            let _ = writeln!(out, "{l}");
        }
        out.push('\n');
    }
    if !g.is_empty() {
        let _ = writeln!(out, "DCOORD\n{}", g.len());
        for l in &g {
            let _ = writeln!(out, "{l}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_are_present() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", Some(1.5), Some(3.0));
        let y = p.add_free("y");
        p.add_soc(AffineExpr::var(x), vec![AffineExpr::var(y)]);
        p.add_log_term(1.0, x).unwrap();
        p.add_psd3([
            [AffineExpr::var(x), AffineExpr::zero(), AffineExpr::zero()],
            [AffineExpr::zero(), AffineExpr::constant(1.0), AffineExpr::zero()],
            [AffineExpr::zero(), AffineExpr::zero(), AffineExpr::constant(1.0)],
        ])
        .unwrap();
        let s = to_cbf(&p);
        for section in ["VER", "OBJSENSE", "VAR\n3 1", "CON", "PSDCON\n1", "EXP 3", "Q 2", "HCOORD"] {
            assert!(s.contains(section), "missing {section}:\n{s}");
        }
    }
}
