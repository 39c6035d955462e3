//! Plain-text reports: `key = value` lines with vectors written as CSV rows,
//! and CSV tables for grids and simulation summaries.
//!
//! Floats use Rust's shortest round-trip formatting, so a report parses back to
//! the exact values that produced it.

use std::fmt::Display;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::ImprovedFit;
use crate::select::CvReport;
use crate::sim::{PowerPoint, RhoCurvePoint, SimReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered `key = value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

fn join<T: Display>(values: impl IntoIterator<Item = T>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl Report {
    /// Starts a report with its kind, the crate version and the seed.
    pub fn new(kind: &str, seed: u64) -> Self {
        let mut r = Report::default();
        r.scalar("report", kind).scalar("version", VERSION).scalar("seed", seed);
        r
    }

    pub fn scalar(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn vector<'a>(&mut self, key: &str, values: impl IntoIterator<Item = &'a f64>) -> &mut Self {
        self.entries.push((key.to_string(), join(values)));
        self
    }

    /// Writes 0-based indices as 1-based.
    pub fn indices(&mut self, key: &str, indices: &[usize]) -> &mut Self {
        self.entries.push((key.to_string(), join(indices.iter().map(|i| i + 1))));
        self
    }

    /// Records resolved configuration under `config.<key>`.
    pub fn config<K: AsRef<str>, V: AsRef<str>>(&mut self, pairs: impl IntoIterator<Item = (K, V)>) -> &mut Self {
        for (k, v) in pairs {
            self.entries
                .push((format!("config.{}", k.as_ref()), v.as_ref().to_string()));
        }
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Report> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                path: "report".into(),
                line: i + 1,
                column: 1,
                message: "expected 'key = value'".into(),
            })?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Report { entries })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.render())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses a comma-separated vector value from a report.
pub fn parse_vector(value: &str) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("cannot parse '{s}' as a number")))
        })
        .collect()
}

/// Adds the fitted quantities of the improved estimator.
pub fn add_fit(report: &mut Report, fit: &ImprovedFit) {
    report
        .scalar("rho", fit.hyper.rho)
        .scalar("threshold", fit.hyper.threshold)
        .scalar("n_selected", fit.selected.len())
        .indices("selected", &fit.selected)
        .scalar("sigma2_hat", fit.sigma2_hat)
        .vector("theta_hat", fit.theta_hat.iter())
        .vector("gamma_hat", fit.gamma_hat.iter())
        .vector("tau_hat", fit.tau_hat.iter());
}

pub fn cv_csv(report: &CvReport) -> String {
    let mut out = String::from("rho,b,mean_error\n");
    for e in &report.entries {
        out.push_str(&format!("{},{},{}\n", e.rho, e.threshold, e.mean_error));
    }
    out
}

pub fn power_csv(points: &[PowerPoint]) -> String {
    let mut out = String::from("delta,rejection_rate\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.delta, p.rejection_rate));
    }
    out
}

pub fn rho_curve_csv(points: &[RhoCurvePoint]) -> String {
    let mut out = String::from("rho,ridge,threshold_ridge,debiased,debiased_threshold\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.rho, p.ridge, p.threshold_ridge, p.debiased, p.debiased_threshold
        ));
    }
    out
}

/// One CSV row per target with the case-level columns repeated.
pub fn sim_csv(report: &SimReport) -> String {
    let c = &report.case;
    let mut out = String::from(
        "case,target,law,n,p,p1,m_count,reps,replicates,alpha,seed,rho,b,rank,lambda_r,\
         misspecification,mean_sigma2_error,mean_max_gamma_error,coverage,coverage_se,\
         prediction_coverage,prediction_coverage_se,mean_confidence_radius,mean_prediction_radius,\
         k1,k2,k3,k4\n",
    );
    for t in &report.targets {
        let row = [
            c.label.clone(),
            t.target.name().to_string(),
            c.law.name().to_string(),
            c.n.to_string(),
            c.p.to_string(),
            c.p1.to_string(),
            c.m_count.to_string(),
            c.reps.to_string(),
            c.replicates.to_string(),
            c.alpha.to_string(),
            c.seed.to_string(),
            report.hyper.rho.to_string(),
            report.hyper.threshold.to_string(),
            report.rank.to_string(),
            report.lambda_r.to_string(),
            report.misspecification.to_string(),
            report.mean_sigma2_error.to_string(),
            t.mean_max_gamma_error.to_string(),
            t.coverage.to_string(),
            t.coverage_se.to_string(),
            t.prediction_coverage.to_string(),
            t.prediction_coverage_se.to_string(),
            report.mean_confidence_radius.to_string(),
            report.mean_prediction_radius.to_string(),
            t.k.k1.to_string(),
            t.k.k2.to_string(),
            t.k.k3.to_string(),
            t.k.k4.to_string(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Human-readable summary of a simulation report.
pub fn sim_summary(report: &SimReport) -> String {
    let c = &report.case;
    let mut out = format!(
        "{} ({} errors, n={}, p={}, p1={}, |M|={}, R={}, B={}, seed={})\n\
         rho={} b={} rank={} lambda_r={:.4}\n\
         misspecification={:.4} mean|sigma2_hat-sigma2|={:.4}\n",
        c.label,
        c.law.name(),
        c.n,
        c.p,
        c.p1,
        c.m_count,
        c.reps,
        c.replicates,
        c.seed,
        report.hyper.rho,
        report.hyper.threshold,
        report.rank,
        report.lambda_r,
        report.misspecification,
        report.mean_sigma2_error,
    );
    for t in &report.targets {
        out.push_str(&format!(
            "target={}: coverage={:.4} (se {:.4}) prediction={:.4} (se {:.4}) mean max|gamma error|={:.4} K=({:.3e}, {:.3e}, {:.3e}, {:.3e})\n",
            t.target.name(),
            t.coverage,
            t.coverage_se,
            t.prediction_coverage,
            t.prediction_coverage_se,
            t.mean_max_gamma_error,
            t.k.k1,
            t.k.k2,
            t.k.k3,
            t.k.k4,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = Report::new("fit", 42);
        r.vector("v", [0.1, -2.5e-17, 3.0].iter())
            .indices("sel", &[0, 4])
            .config([("rho", "1"), ("b", "0.5")]);
        let parsed = Report::parse(&r.render()).unwrap();
        assert_eq!(parsed, r);
        assert_eq!(parsed.get("seed"), Some("42"));
        assert_eq!(parsed.get("version"), Some(VERSION));
        assert_eq!(parsed.get("sel"), Some("1,5"));
        assert_eq!(parsed.get("config.b"), Some("0.5"));
        assert_eq!(parse_vector(parsed.get("v").unwrap()).unwrap(), vec![0.1, -2.5e-17, 3.0]);
    }

    #[test]
    fn empty_vector_parses() {
        assert!(parse_vector("").unwrap().is_empty());
        assert!(parse_vector("1,x").is_err());
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(Report::parse("a = 1\nnot a pair\n").is_err());
    }
}
