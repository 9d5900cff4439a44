//! SDPA sparse (`.dat-s`) export of the Gram feasibility problem.
//!
//! The problem is written in SDPA's dual form `F_γ • Y = p_γ, Y ⪰ 0` with
//! `F_0 = 0`: one block of the basis size and one constraint matrix per
//! exponent `γ`, holding a 1 at every position `(i, j)` with `i ≤ j` of the
//! group of `γ`. Indices are 1-based and constraints follow the graded order.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::GramProblem;

pub fn sdpa_string(prob: &GramProblem) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "\"Gram feasibility, n={} d={} basis={}\"",
        prob.basis.n(),
        prob.d,
        prob.size()
    );
    let _ = writeln!(s, "{}", prob.num_constraints());
    let _ = writeln!(s, "1");
    let _ = writeln!(s, "{}", prob.size());
    let rhs: Vec<String> = prob.targets.values().map(|t| format!("{t}")).collect();
    let _ = writeln!(s, "{}", rhs.join(" "));
    for (k, pos) in prob.groups.values().enumerate() {
        for &(i, j) in pos.iter().filter(|(i, j)| i <= j) {
            let _ = writeln!(s, "{} 1 {} {} 1", k + 1, i + 1, j + 1);
        }
    }
    s
}

pub fn export_sdpa(prob: &GramProblem, path: &Path) -> io::Result<()> {
    std::fs::write(path, sdpa_string(prob))
}
