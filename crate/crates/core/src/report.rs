//! CSV study tables.
//!
//! Reals are written as `d.dddddE±XX` (six significant digits), integers
//! as plain decimals, and undefined entries as empty fields.

use std::fmt::Write as _;

use crate::adapt::Step;
use crate::bench::{convergence_rate, ErrorSet};
use crate::estimator::effectivity;

pub const CSV_HEADER: &str = "DOF,h,iter,e_sigma,r_sigma,e_u,r_u,e_p,r_p,e_G,r_G,e_omega,r_omega,e_stress,r_stress,e_total,r_total,theta1,eff1,theta2hat,eff2hat";

/// Six significant digits with a signed two-digit (or wider) exponent.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sci).unwrap_or_default()
}

/// Everything one table row needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowData {
    pub dofs: usize,
    pub h: f64,
    pub iterations: usize,
    pub errors: Option<ErrorSet>,
    pub theta1: f64,
    pub theta2_hat: f64,
}

impl RowData {
    pub fn from_step(step: &Step) -> Self {
        RowData {
            dofs: step.dofs(),
            h: step.disc.mesh.mesh_size().unwrap_or(f64::NAN),
            iterations: step.report.iterations(),
            errors: step.errors,
            theta1: step.theta1.global(),
            theta2_hat: step.theta2_hat.global(),
        }
    }
}

/// Header plus one line per row; rates against the previous row's DOF.
pub fn csv_table(rows: &[RowData]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    // rates[i][j]: rate of error j between rows j-1 and j
    let rates: Vec<Vec<Option<f64>>> = (0..7)
        .map(|i| {
            let series: Option<Vec<(usize, f64)>> = rows
                .iter()
                .map(|r| r.errors.map(|e| (r.dofs, e.as_array()[i])))
                .collect();
            let mut v = vec![None];
            if let Some(s) = series {
                v.extend(convergence_rate(&s));
            } else {
                v.resize(rows.len(), None);
            }
            v
        })
        .collect();
    for (j, r) in rows.iter().enumerate() {
        let _ = write!(out, "{},{},{}", r.dofs, format_sci(r.h), r.iterations);
        for (i, rate) in rates.iter().enumerate() {
            let e = r.errors.map(|e| e.as_array()[i]);
            let _ = write!(out, ",{},{}", opt(e), opt(rate.get(j).copied().flatten()));
        }
        let eff = |theta: f64| r.errors.and_then(|e| effectivity(e.total(), theta).ok());
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            format_sci(r.theta1),
            opt(eff(r.theta1)),
            format_sci(r.theta2_hat),
            opt(eff(r.theta2_hat))
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format() {
        assert_eq!(format_sci(0.110), "1.10000E-01");
        assert_eq!(format_sci(157610.0), "1.57610E+05");
        assert_eq!(format_sci(4.21), "4.21000E+00");
        assert_eq!(format_sci(-2.5e-120), "-2.50000E-120");
        assert_eq!(format_sci(0.0), "0.00000E+00");
        assert_eq!(format_sci(1.0 / 3.0), "3.33333E-01");
    }

    #[test]
    fn single_row_has_empty_rates() {
        let e = ErrorSet {
            sigma: 4.21,
            u: 0.891,
            p: 0.369,
            g: 0.734,
            omega: 0.382,
            shear: 1.36,
        };
        let row = RowData {
            dofs: 178,
            h: 0.373,
            iterations: 4,
            errors: Some(e),
            theta1: 5.45,
            theta2_hat: 4.75,
        };
        let table = csv_table(&[row]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), CSV_HEADER.split(',').count());
        assert_eq!(cells[0], "178");
        assert_eq!(cells[2], "4");
        for rate_col in [4, 6, 8, 10, 12, 14, 16] {
            assert_eq!(cells[rate_col], "");
        }
        // the printed e(σ⃗) and eff(Θ₁) of the coarsest Example 1 level
        assert_eq!(cells[15], "4.30325E+00");
        assert!(cells[18].starts_with("7.89"));
    }
}
