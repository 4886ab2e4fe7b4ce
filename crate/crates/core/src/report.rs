//! Verification records and their CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Gap tolerance for an equality verdict.
pub const EQUALITY_GAP_TOL: f64 = 1e-7;
/// Normalized chord-deviation tolerance for an equality verdict.
pub const EQUALITY_AFFINITY_TOL: f64 = 1e-6;

/// How a measured value was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    pub method: String,
    /// Sample count for Monte Carlo, 0 for deterministic paths.
    pub samples: u64,
    /// Quadrature tolerance, or the standard error of a Monte Carlo estimate.
    pub tolerance: f64,
    pub seed: Option<u64>,
}

impl Oracle {
    pub fn quadrature(method: &str, tolerance: f64) -> Self {
        Oracle {
            method: method.to_string(),
            samples: 0,
            tolerance,
            seed: None,
        }
    }

    pub fn monte_carlo(samples: u64, std_err: f64, seed: u64) -> Self {
        Oracle {
            method: "monte-carlo".to_string(),
            samples,
            tolerance: std_err,
            seed: Some(seed),
        }
    }

    pub fn is_monte_carlo(&self) -> bool {
        self.samples > 0
    }
}

/// One cut verification: `gap = measured - bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub body_id: String,
    pub class: String,
    pub n: usize,
    pub direction: Vec<f64>,
    pub offset: f64,
    /// Mass of the set being cut.
    pub total_mass: f64,
    pub measured: f64,
    /// Mass (or fraction, matching `measured`) on the lower side of the cut.
    pub lower: f64,
    /// Same for the upper side.
    pub upper: f64,
    pub bound: f64,
    pub gap: f64,
    pub equality: bool,
    /// Normalized deviation of the class profile from its chord.
    pub affinity: Option<f64>,
    pub oracle: Oracle,
    /// Set when Monte Carlo noise prevents a firm equality verdict.
    pub note: Option<String>,
}

impl CutReport {
    /// Builds a report and derives `gap` and the equality verdict.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        class: &str,
        n: usize,
        direction: Vec<f64>,
        offset: f64,
        total_mass: f64,
        measured: f64,
        bound: f64,
        affinity: Option<f64>,
        oracle: Oracle,
    ) -> Self {
        let gap = measured - bound;
        let mut report = CutReport {
            body_id: String::new(),
            class: class.to_string(),
            n,
            direction,
            offset,
            total_mass,
            measured,
            lower: measured,
            upper: f64::NAN,
            bound,
            gap,
            equality: false,
            affinity,
            oracle,
            note: None,
        };
        report.equality = report.equality_verdict();
        report
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.body_id = id.to_string();
        self
    }

    pub fn with_sides(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    fn equality_verdict(&self) -> bool {
        if self.oracle.is_monte_carlo() {
            return false;
        }
        self.gap.abs() <= EQUALITY_GAP_TOL
            && self.affinity.is_none_or(|a| a <= EQUALITY_AFFINITY_TOL)
    }

    /// Equality within `k` standard errors; only meaningful for Monte Carlo rows.
    pub fn within_noise(&self, k: f64) -> bool {
        self.gap.abs() <= k * self.oracle.tolerance.max(f64::MIN_POSITIVE)
    }

    /// A violation beyond `tol`, widened to 3 standard errors on Monte Carlo rows.
    pub fn violates(&self, tol: f64) -> bool {
        let slack = if self.oracle.is_monte_carlo() {
            tol.max(3.0 * self.oracle.tolerance)
        } else {
            tol
        };
        self.gap < -slack
    }
}

pub const CSV_HEADER: [&str; 16] = [
    "body_id", "class", "n", "u1", "u2", "u3", "u4", "t", "measured", "bound", "gap", "equality",
    "method", "samples", "seed", "offset",
];

/// Formats with 12 significant digits and no trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        let s = format!("{:.11e}", x);
        let (mant, e) = s.split_once('e').unwrap();
        return format!("{}e{}", trim_zeros(mant), e);
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x))
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

impl CutReport {
    pub fn csv_record(&self) -> Vec<String> {
        let mut rec = vec![self.body_id.clone(), self.class.clone(), self.n.to_string()];
        for i in 0..4 {
            rec.push(self.direction.get(i).map(|&v| fmt_sig(v)).unwrap_or_default());
        }
        rec.push(fmt_sig(self.total_mass));
        rec.push(fmt_sig(self.measured));
        rec.push(fmt_sig(self.bound));
        rec.push(fmt_sig(self.gap));
        rec.push(self.equality.to_string());
        rec.push(self.oracle.method.clone());
        rec.push(self.oracle.samples.to_string());
        rec.push(self.oracle.seed.map(|s| s.to_string()).unwrap_or_default());
        rec.push(fmt_sig(self.offset));
        rec
    }
}

/// Writes reports as CSV with the fixed header.
pub fn write_csv<W: Write>(out: W, reports: &[CutReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}
