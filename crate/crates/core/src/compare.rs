//! Reproduction of the published comparison tables: exact stationary law
//! against its large-N approximation, and the discrete law against the
//! diffusion density.

use rayon::prelude::*;
use serde::Serialize;

use crate::diffusion::{moments_x, stationary_density_w, DiffusionParams};
use crate::error::{domain, Result};
use crate::special::SignedLogValue;
use crate::stationary::{moments, rho_k, rho_k_approx};

/// One row: an exact value, its approximation and their relative difference
/// `(approx - exact) / exact`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n: usize,
    /// `rho = lambda / mu` for the approximation table, `sigma^2` for the
    /// diffusion table.
    pub param: f64,
    pub k: usize,
    pub exact: SignedLogValue,
    pub approx: SignedLogValue,
    pub delta: f64,
}

fn row(n: usize, param: f64, k: usize, exact: SignedLogValue, approx: SignedLogValue) -> ComparisonRow {
    ComparisonRow {
        n,
        param,
        k,
        exact,
        approx,
        delta: exact.relative_diff(approx),
    }
}

/// Exact `rho(k)` against the large-N approximation, over the product grid.
pub fn table1(n_list: &[usize], rho_list: &[f64], k_list: &[usize]) -> Result<Vec<ComparisonRow>> {
    if let Some(r) = rho_list.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return domain(format!("the approximation table needs 0 < rho < 1, got {r}"));
    }
    let cells: Vec<(usize, f64, usize)> = n_list
        .iter()
        .flat_map(|&n| {
            rho_list
                .iter()
                .flat_map(move |&r| k_list.iter().map(move |&k| (n, r, k)))
        })
        .filter(|&(n, _, k)| k <= n)
        .collect();
    cells
        .par_iter()
        .map(|&(n, r, k)| Ok(row(n, r, k, rho_k(k, r, n)?, rho_k_approx(k, r, n)?)))
        .collect()
}

/// `w(k epsilon) epsilon` against `rho(k)` at `lambda = mu`, with
/// `sigma^2 = 2 lambda N epsilon^2`.
pub fn table3(
    n_list: &[usize],
    epsilon: f64,
    lambda_mu: f64,
    k_list: &[usize],
) -> Result<Vec<ComparisonRow>> {
    let cells: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| k_list.iter().map(move |&k| (n, k)))
        .filter(|&(n, k)| k <= n)
        .collect();
    cells
        .par_iter()
        .map(|&(n, k)| {
            let p = DiffusionParams::from_chain(lambda_mu, lambda_mu, n, epsilon)?;
            let w = stationary_density_w(k as f64 * epsilon, &p)? * epsilon;
            Ok(row(
                n,
                p.sigma2,
                k,
                rho_k(k, 1.0, n)?,
                SignedLogValue::from_f64(w),
            ))
        })
        .collect()
}

/// Moments of the level against the diffusion and against their large-N
/// asymptotics, at `lambda = mu = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentAgreement {
    pub n: usize,
    pub epsilon: f64,
    pub mean: f64,
    pub variance: f64,
    /// `sqrt(N / pi)`.
    pub mean_asymptotic: f64,
    /// `N (1/2 - 1/pi) - sqrt(N) / (2 sqrt(pi))`.
    pub variance_asymptotic: f64,
    pub mean_x: f64,
    pub variance_x: f64,
    /// `E[level] epsilon / E[X]`.
    pub mean_ratio: f64,
    /// `Var[level] epsilon^2 / Var[X]`.
    pub variance_ratio: f64,
}

pub fn moment_agreement(n: usize, epsilon: f64) -> Result<MomentAgreement> {
    let m = moments(1.0, n)?;
    let p = DiffusionParams::from_chain(1.0, 1.0, n, epsilon)?;
    let x = moments_x(&p);
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    Ok(MomentAgreement {
        n,
        epsilon,
        mean: m.mean,
        variance: m.variance,
        mean_asymptotic: (nf / pi).sqrt(),
        variance_asymptotic: nf * (0.5 - 1.0 / pi) - nf.sqrt() / (2.0 * pi.sqrt()),
        mean_x: x.mean,
        variance_x: x.variance,
        mean_ratio: m.mean * epsilon / x.mean,
        variance_ratio: m.variance * epsilon * epsilon / x.variance,
    })
}

/// A value as printed in a table, e.g. `"2.6543e-7"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Printed {
    pub text: &'static str,
}

impl Printed {
    /// Significant digits, leading-digit exponent and digit string.
    fn parts(&self) -> (usize, i32, String) {
        let (mant, exp) = match self.text.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i32>().expect("preset exponent")),
            None => (self.text, 0),
        };
        let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
        let all: String = int.chars().chain(frac.chars()).collect();
        let lead = all.find(|c: char| c != '0').expect("nonzero preset value");
        let digits = all[lead..].to_string();
        // Position of the leading digit relative to the decimal point.
        let lead_exp = int.len() as i32 - 1 - lead as i32 + exp;
        (digits.len(), lead_exp, digits)
    }

    pub fn significant_digits(&self) -> usize {
        self.parts().0
    }

    /// `|value - printed|` in units of the last printed digit, computed on
    /// log10 magnitudes so that extreme exponents are exact.
    pub fn units_off(&self, value: SignedLogValue) -> f64 {
        if value.sign() <= 0 {
            return f64::INFINITY;
        }
        let (sig, lead_exp, digits) = self.parts();
        let printed: f64 = digits.parse::<f64>().expect("preset digits");
        // value / 10^(lead_exp - sig + 1), an integer-scale mantissa.
        let scaled = 10f64.powf(value.log10_abs() - (lead_exp - sig as i32 + 1) as f64);
        (scaled - printed).abs()
    }

    /// Within one unit of the last printed digit.
    pub fn matches(&self, value: SignedLogValue) -> bool {
        self.units_off(value) <= 1.0
    }
}

/// One checked table cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCheck {
    pub label: String,
    pub printed: &'static str,
    pub computed: String,
    pub units_off: f64,
    pub pass: bool,
}

fn cell(label: String, printed: &'static str, value: SignedLogValue) -> CellCheck {
    let p = Printed { text: printed };
    let units_off = p.units_off(value);
    CellCheck {
        label,
        printed,
        computed: value.to_sci_string(p.significant_digits() + 2),
        units_off,
        pass: units_off <= 1.0,
    }
}

/// Published approximation table: `(N, k, [(rho(k), approx) for rho in 0.25, 0.5, 0.75])`.
pub const TABLE1_RHOS: [f64; 3] = [0.25, 0.5, 0.75];

#[rustfmt::skip]
pub const TABLE1: &[(usize, usize, [(&str, &str); 3])] = &[
    (100, 0, [("0.754044", "0.75298"), ("0.513742", "0.512301"), ("0.288403", "0.264746")]),
    (100, 10, [("2.6543e-7", "2.65056e-7"), ("0.000185182", "0.000184663"), ("0.00599468", "0.00550296")]),
    (100, 20, [("1.24762e-14", "1.24586e-14"), ("8.91315e-9", "8.88815e-9"), ("0.0000166384", "0.0000152736")]),
    (100, 30, [("7.3537e-23", "7.34332e-23"), ("5.37966e-14", "5.36457e-14"), ("5.7909e-9", "5.3159e-9")]),
    (100, 40, [("4.84975e-32", "4.84291e-32"), ("3.63302e-20", "3.62283e-20"), ("2.25513e-13", "2.07015e-13")]),
    (100, 50, [("2.98151e-42", "2.9773e-42"), ("2.2871e-27", "2.28068e-27"), ("8.18656e-19", "7.51505e-19")]),
    (100, 60, [("1.28441e-53", "1.2826e-53"), ("1.00891e-35", "1.00608e-35"), ("2.08248e-25", "1.91166e-25")]),
    (100, 70, [("2.44772e-66", "2.44427e-66"), ("1.96884e-45", "1.96332e-45"), ("2.34344e-33", "2.15121e-33")]),
    (100, 80, [("9.19408e-81", "9.18111e-81"), ("7.57281e-57", "7.55157e-57"), ("5.19771e-43", "4.77136e-43")]),
    (100, 90, [("1.21998e-97", "1.21826e-97"), ("1.02896e-70", "1.02608e-70"), ("4.07256e-55", "3.7385e-55")]),
    (100, 100, [("5.18222e-120", "5.17491e-120"), ("4.47573e-90", "4.46318e-90"), ("1.02151e-72", "9.37724e-73")]),
    (500, 0, [("0.75082", "0.750828"), ("0.502942", "0.502939"), ("0.2596", "0.2593")]),
    (500, 50, [("3.97755e-33", "3.97755e-33"), ("2.99981e-18", "2.99979e-18"), ("9.87303e-10", "9.86145e-10")]),
    (500, 100, [("8.58336e-70", "8.58336e-70"), ("7.28844e-40", "7.28844e-40"), ("1.52952e-22", "1.52772e-22")]),
    (500, 150, [("5.48926e-111", "5.48926e-111"), ("5.24796e-66", "5.24793e-66"), ("7.02221e-40", "7.01398e-40")]),
    (500, 200, [("5.83949e-157", "5.83949e-157"), ("6.28567e-97", "6.28563e-97"), ("5.36288e-62", "5.35659e-62")]),
    (500, 250, [("4.09278e-208", "4.09278e-208"), ("4.96015e-133", "4.96012e-133"), ("2.69839e-89", "2.69522e-89")]),
    (500, 300, [("4.42983e-265", "4.42983e-265"), ("6.04455e-175", "6.04451e-175"), ("2.0967e-122", "2.09424e-122")]),
    (500, 350, [("7.0932955e-329", "7.0932949e-329"), ("1.08974e-223", "1.08974e-223"), ("2.41023e-162", "2.40741e-162")]),
    (500, 400, [("2.65999780e-401", "2.65999756e-401"), ("4.60105e-281", "4.60102e-281"), ("6.48866e-211", "6.48105e-211")]),
    (500, 450, [("3.10906376e-486", "3.10906348e-486"), ("6.054876e-351", "6.054838e-351"), ("5.4446e-272", "5.4382e-272")]),
    (500, 500, [("2.5924940e-601", "2.5924937e-601"), ("5.68451e-451", "5.68447e-451"), ("3.2592e-363", "3.2554e-363")]),
    (1000, 0, [("0.750415", "0.750415"), ("0.501485", "0.501485"), ("0.255005", "0.254963")]),
    (1000, 100, [("2.09542e-65", "2.09542e-65"), ("1.77512e-35", "1.77512e-35"), ("3.66982e-18", "3.66922e-18")]),
    (1000, 200, [("9.60904e-139", "9.60904e-139"), ("1.0319e-78", "1.03189e-78"), ("8.67317e-44", "8.67175e-44")]),
    (1000, 300, [("3.8264e-221", "3.8264e-221"), ("5.2089e-131", "5.20889e-131"), ("1.77997e-78", "1.77968e-78")]),
    (1000, 400, [("4.1605580e-313", "4.1605579e-313"), ("7.1797e-193", "7.17969e-193"), ("9.97471e-123", "9.97308e-123")]),
    (1000, 500, [("1.931348071e-415", "1.931348049e-415"), ("4.22488e-265", "4.22488e-265"), ("2.38635e-177", "2.38596e-177")]),
    (1000, 600, [("2.090294344e-529", "2.090294320e-529"), ("5.7964397e-349", "5.7964350e-349"), ("1.33109e-243", "1.33087e-243")]),
    (1000, 700, [("4.78531360e-657", "4.78531355e-657"), ("1.6821466e-446", "1.6821452e-446"), ("1.57049e-323", "1.57023e-323")]),
    (1000, 800, [("5.65614342e-802", "5.65614336e-802"), ("2.5204229e-561", "2.5204209e-561"), ("9.5668e-421", "9.5653e-421")]),
    (1000, 900, [("5.62059564e-972", "5.62059558e-972"), ("3.1749356e-701", "3.1749330e-701"), ("4.8995e-543", "4.8987e-543")]),
    (1000, 1000, [("3.191157888e-1203", "3.191157852e-1203"), ("2.2850749e-902", "2.2850730e-902"), ("1.43367e-726", "1.43343e-726")]),
];

/// Published diffusion table at `epsilon = 0.1`, `lambda = mu = 1`:
/// `(k, [(w eps, rho(k), delta) for N in 5000, 10000, 15000])`.
pub const TABLE3_NS: [usize; 3] = [5000, 10000, 15000];
pub const TABLE3_EPSILON: f64 = 0.1;

#[rustfmt::skip]
pub const TABLE3: &[(usize, [(&str, &str, &str); 3])] = &[
    (0, [("0.0159577", "0.015831", "0.00800385"), ("0.0112838", "0.0112203", "0.0056544"), ("0.00921318", "0.00917085", "0.00461492")]),
    (1, [("0.0159545", "0.0158278", "0.00800383"), ("0.0112827", "0.0112192", "0.00565439"), ("0.00921256", "0.00917024", "0.00461492")]),
    (2, [("0.0159449", "0.0158183", "0.00800377"), ("0.0112793", "0.0112159", "0.00565438"), ("0.00921072", "0.00916841", "0.00461491")]),
    (3, [("0.015929", "0.0158025", "0.00800366"), ("0.0112736", "0.0112103", "0.00565435"), ("0.00920765", "0.00916535", "0.0046149")]),
    (4, [("0.0159067", "0.0157804", "0.00800352"), ("0.0112658", "0.0112024", "0.00565432"), ("0.00920336", "0.00916108", "0.0046149")]),
    (5, [("0.0158781", "0.015752", "0.00800334"), ("0.0112556", "0.0111923", "0.00565427"), ("0.00919783", "0.00915558", "0.00461487")]),
    (10, [("0.0156417", "0.0155175", "0.00800184"), ("0.0111715", "0.0111087", "0.00565389"), ("0.009151196", "0.00910992", "0.0046147")]),
    (20, [("0.0147308", "0.014614", "0.007996"), ("0.0108413", "0.0107804", "0.00565241"), ("0.00897074", "0.00892954", "0.00461404")]),
    (30, [("0.013329", "0.0132234", "0.00798679"), ("0.0103126", "0.0102547", "0.00565001"), ("0.00867664", "0.0086368", "0.00461295")]),
    (40, [("0.0115877", "0.011496", "0.00797503"), ("0.00961541", "0.00956142", "0.00564678"), ("0.00828104", "0.00824302", "0.00461148")]),
    (50, [("0.00967883", "0.00960238", "0.00796185"), ("0.00878783", "0.00873852", "0.00564287"), ("0.00779879", "0.007763", "0.00460965")]),
];

/// Every cell of the published approximation table against our values.
pub fn check_table1() -> Result<Vec<CellCheck>> {
    let ns = [100, 500, 1000];
    let ks: Vec<usize> = TABLE1.iter().map(|r| r.1).collect();
    let rows = table1(&ns, &TABLE1_RHOS, &ks)?;
    let find = |n: usize, r: f64, k: usize| {
        rows.iter()
            .find(|x| x.n == n && x.param == r && x.k == k)
            .expect("row computed")
    };
    let mut out = Vec::new();
    for &(n, k, cells) in TABLE1 {
        for (&rho, (exact, approx)) in TABLE1_RHOS.iter().zip(cells) {
            let r = find(n, rho, k);
            out.push(cell(format!("N={n} rho={rho} k={k} exact"), exact, r.exact));
            out.push(cell(format!("N={n} rho={rho} k={k} approx"), approx, r.approx));
        }
    }
    Ok(out)
}

/// Every cell of the published diffusion table against our values.
pub fn check_table3() -> Result<Vec<CellCheck>> {
    let ks: Vec<usize> = TABLE3.iter().map(|r| r.0).collect();
    let rows = table3(&TABLE3_NS, TABLE3_EPSILON, 1.0, &ks)?;
    let mut out = Vec::new();
    for &(k, cells) in TABLE3 {
        for (&n, (w, rho, delta)) in TABLE3_NS.iter().zip(cells) {
            let r = rows.iter().find(|x| x.n == n && x.k == k).expect("row computed");
            out.push(cell(format!("N={n} k={k} w*eps"), w, r.approx));
            out.push(cell(format!("N={n} k={k} rho"), rho, r.exact));
            out.push(cell(
                format!("N={n} k={k} delta"),
                delta,
                SignedLogValue::from_f64(r.delta),
            ));
        }
    }
    Ok(out)
}

/// CSV of comparison rows, with the values also as `(sign, log10)` pairs.
pub fn rows_csv(rows: &[ComparisonRow], param_name: &str, exact_name: &str, approx_name: &str) -> String {
    let mut out = format!(
        "N,{param_name},k,{exact_name},{approx_name},delta,{exact_name}_sign,{exact_name}_log10,{approx_name}_sign,{approx_name}_log10\n"
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.param,
            r.k,
            r.exact.to_sci_string(12),
            r.approx.to_sci_string(12),
            r.delta,
            r.exact.sign(),
            r.exact.log10_abs(),
            r.approx.sign(),
            r.approx.log10_abs()
        ));
    }
    out
}

/// CSV of cell checks `label,printed,computed,units_off,pass`.
pub fn checks_csv(cells: &[CellCheck]) -> String {
    let mut out = String::from("label,printed,computed,units_off,pass\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.label, c.printed, c.computed, c.units_off, c.pass
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_parsing() {
        let p = Printed { text: "2.6543e-7" };
        assert_eq!(p.parts(), (5, -7, "26543".to_string()));
        let q = Printed { text: "0.0000166384" };
        assert_eq!(q.parts(), (6, -5, "166384".to_string()));
        assert!(p.matches(SignedLogValue::from_f64(2.65435e-7)));
        assert!(!p.matches(SignedLogValue::from_f64(2.6546e-7)));
        let big = Printed {
            text: "3.191157888e-1203",
        };
        let v = SignedLogValue::from_ln(-1203.0 * std::f64::consts::LN_10 + 3.1911578884f64.ln());
        assert!(big.matches(v));
    }

    #[test]
    fn approximation_table_scope() {
        assert!(table1(&[100], &[1.0], &[0]).is_err());
        let rows = table1(&[100], &[0.5], &[0, 20, 200]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].delta < 0.0);
    }

    #[test]
    fn diffusion_table_delta_shrinks_with_n() {
        let rows = table3(&TABLE3_NS, 0.1, 1.0, &[0, 50]).unwrap();
        for k in [0, 50] {
            let d: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.delta).collect();
            assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
        }
    }

    #[test]
    fn moment_ratios_approach_one() {
        let mut prev = f64::INFINITY;
        for n in [1000, 10_000, 100_000] {
            let m = moment_agreement(n, 0.1).unwrap();
            let err = (m.mean_ratio - 1.0).abs().max((m.variance_ratio - 1.0).abs());
            assert!(err < prev);
            prev = err;
        }
        let m = moment_agreement(5000, 0.1).unwrap();
        assert!((m.mean / m.mean_asymptotic - 1.0).abs() < 0.01);
    }
}
