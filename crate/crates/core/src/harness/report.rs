use std::io::Write;

use crate::error::{Error, Result};

/// One line of the error table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub eps: f64,
    pub h: f64,
    pub err1: f64,
    pub err2: f64,
    /// `max_m ‖u_ε − u₀‖_{L²}/‖u₀‖_{L²}`, informational.
    pub l2_relative: f64,
    pub runtime_secs: f64,
}

impl ErrorRow {
    /// Row with only the tabulated quantities (`h = ε/cellres`).
    pub fn from_errors(n: usize, cellres: usize, err1: f64, err2: f64) -> Self {
        let eps = 1.0 / n as f64;
        Self {
            n,
            eps,
            h: eps / cellres as f64,
            err1,
            err2,
            l2_relative: f64::NAN,
            runtime_secs: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary {
    /// Least-squares slope of `log₂ Err₂` against `log₂ ε`.
    pub rate: f64,
    /// `max Err₁ / min Err₁` over the rows.
    pub err1_ratio: f64,
    pub tol_r: f64,
    pub verdict: Verdict,
}

/// Maximum allowed spread of `Err₁` across `N`.
pub const ERR1_PLATEAU: f64 = 1.15;

/// Error table sorted by `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

/// Slope of the least-squares line through `(log₂ x, log₂ y)`.
pub fn fit_rate(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientRows {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Config("rate fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config(
            "rate fit needs at least two distinct ε".into(),
        ));
    }
    Ok(sxy / sxx)
}

impl ErrorReport {
    pub fn new(mut rows: Vec<ErrorRow>) -> Self {
        rows.sort_by_key(|r| r.n);
        Self { rows }
    }

    /// Fitted `Err₂` rate and the `Err₁` plateau check. PASS iff the rate lies
    /// in `[½ − tol_r, ½ + tol_r]` and `max/min Err₁ ≤ 1.15`.
    pub fn summarize(&self, tol_r: f64) -> Result<RateSummary> {
        if self.rows.len() < 2 {
            return Err(Error::InsufficientRows {
                needed: 2,
                got: self.rows.len(),
            });
        }
        let eps: Vec<f64> = self.rows.iter().map(|r| r.eps).collect();
        let err2: Vec<f64> = self.rows.iter().map(|r| r.err2).collect();
        let rate = fit_rate(&eps, &err2)?;
        let max1 = self
            .rows
            .iter()
            .map(|r| r.err1)
            .fold(f64::NEG_INFINITY, f64::max);
        let min1 = self
            .rows
            .iter()
            .map(|r| r.err1)
            .fold(f64::INFINITY, f64::min);
        let err1_ratio = if min1 > 0.0 {
            max1 / min1
        } else {
            f64::INFINITY
        };
        let pass = (rate - 0.5).abs() <= tol_r && err1_ratio <= ERR1_PLATEAU;
        Ok(RateSummary {
            rate,
            err1_ratio,
            tol_r,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        })
    }

    /// `N,eps,h,err1,err2` with five decimals.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "N,eps,h,err1,err2")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.5},{:.5},{:.5},{:.5}",
                r.n, r.eps, r.h, r.err1, r.err2
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

impl RateSummary {
    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "rate = {:.5}", self.rate)?;
        writeln!(out, "tol_r = {}", self.tol_r)?;
        writeln!(out, "err1_ratio = {:.5}", self.err1_ratio)?;
        writeln!(out, "verdict = {}", self.verdict.as_str())?;
        Ok(())
    }
}
