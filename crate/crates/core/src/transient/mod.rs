//! Time-dependent law of the chain.

mod laplace;
mod oracle;
mod spectral;

pub use laplace::{eta_times_laplace_h, laplace_h, pgf_f};
pub use oracle::{transient_oracle, transient_oracle_grid, transient_rk45, TransientSolution};
pub use spectral::{
    p0_closed, polynomial_p, polynomial_p_derivative, polynomial_q, pr_closed, roots_of_p,
    SpectralDecomposition,
};

use std::fmt::Write;

/// CSV grid `t,p0,...,pN` in shortest round-trip decimal form.
pub fn grid_csv(rows: &[(f64, Vec<f64>)]) -> String {
    let n = rows.first().map_or(0, |r| r.1.len());
    let mut out = String::from("t");
    for k in 0..n {
        write!(out, ",p{k}").unwrap();
    }
    out.push('\n');
    for (t, probs) in rows {
        write!(out, "{t}").unwrap();
        for p in probs {
            write!(out, ",{p}").unwrap();
        }
        out.push('\n');
    }
    out
}
