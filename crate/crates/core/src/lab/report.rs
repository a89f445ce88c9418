use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::{ChiSquareResult, KsResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// One gated quantity: the statistic, what it was compared with and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalResult {
    pub functional: String,
    pub n: usize,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub reference: Option<f64>,
    pub threshold: f64,
    pub rule: String,
    pub verdict: Verdict,
}

impl FunctionalResult {
    /// Passes when `p > threshold`.
    pub fn ks(name: impl Into<String>, n: usize, r: KsResult, threshold: f64) -> Self {
        FunctionalResult {
            functional: name.into(),
            n,
            statistic: r.statistic,
            p_value: Some(r.p_value),
            reference: None,
            threshold,
            rule: format!("ks p > {threshold:.3e}"),
            verdict: Verdict::from_bool(r.p_value > threshold),
        }
    }

    pub fn chi(name: impl Into<String>, n: usize, r: ChiSquareResult, threshold: f64) -> Self {
        FunctionalResult {
            functional: name.into(),
            n,
            statistic: r.statistic,
            p_value: Some(r.p_value),
            reference: Some(r.dof as f64),
            threshold,
            rule: format!("chi-square ({} dof) p > {threshold:.3e}", r.dof),
            verdict: Verdict::from_bool(r.p_value > threshold),
        }
    }

    /// Passes when `|estimate - reference| <= k se`.
    pub fn within_se(name: impl Into<String>, n: usize, estimate: f64, se: f64, reference: f64, k: f64) -> Self {
        FunctionalResult {
            functional: name.into(),
            n,
            statistic: estimate,
            p_value: None,
            reference: Some(reference),
            threshold: k * se,
            rule: format!("|estimate - reference| <= {k} SE (SE = {se:.3e})"),
            verdict: Verdict::from_bool((estimate - reference).abs() <= k * se),
        }
    }

    /// Passes when `statistic <= bound`.
    pub fn at_most(name: impl Into<String>, n: usize, statistic: f64, bound: f64, what: &str) -> Self {
        FunctionalResult {
            functional: name.into(),
            n,
            statistic,
            p_value: None,
            reference: None,
            threshold: bound,
            rule: format!("{what} <= {bound:.3e}"),
            verdict: Verdict::from_bool(statistic <= bound),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub experiment: String,
    pub seed: u64,
    pub replicas: usize,
    pub results: Vec<FunctionalResult>,
    pub notes: BTreeMap<String, String>,
}

impl TestReport {
    pub fn new(experiment: &str, seed: u64, replicas: usize) -> Self {
        TestReport {
            experiment: experiment.to_string(),
            seed,
            replicas,
            results: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, r: FunctionalResult) {
        self.results.push(r);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.insert(key.to_string(), value.to_string());
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_bool(self.results.iter().all(|r| r.verdict == Verdict::Pass))
    }

    pub fn passed(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    pub fn failures(&self) -> Vec<&FunctionalResult> {
        self.results.iter().filter(|r| r.verdict == Verdict::Fail).collect()
    }

    pub fn get(&self, functional: &str) -> Option<&FunctionalResult> {
        self.results.iter().find(|r| r.functional == functional)
    }

    /// Smallest p-value among the gated functionals.
    pub fn min_p(&self) -> Option<f64> {
        self.results.iter().filter_map(|r| r.p_value).reduce(f64::min)
    }

    pub fn merge(&mut self, other: TestReport, prefix: &str) {
        for mut r in other.results {
            r.functional = format!("{prefix}{}", r.functional);
            self.results.push(r);
        }
        for (k, v) in other.notes {
            self.notes.insert(format!("{prefix}{k}"), v);
        }
    }

    /// Columns: experiment, functional, n, statistic, p, reference, verdict.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["experiment", "functional", "n", "statistic", "p", "reference", "verdict"])?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_default();
        for r in &self.results {
            w.write_record([
                self.experiment.clone(),
                r.functional.clone(),
                r.n.to_string(),
                format!("{:.6e}", r.statistic),
                opt(r.p_value),
                opt(r.reference),
                r.verdict.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} [{}] seed={} replicas={}\n", self.experiment, self.verdict().as_str(), self.seed, self.replicas);
        for r in &self.results {
            let p = r.p_value.map(|p| format!(" p={p:.3e}")).unwrap_or_default();
            let re = r.reference.map(|x| format!(" ref={x:.5}")).unwrap_or_default();
            s.push_str(&format!(
                "  {:<5} {} n={} stat={:.5}{}{}  ({})\n",
                r.verdict.as_str(),
                r.functional,
                r.n,
                r.statistic,
                p,
                re,
                r.rule
            ));
        }
        for (k, v) in &self.notes {
            s.push_str(&format!("  note {k}: {v}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns() {
        let mut r = TestReport::new("x", 1, 100);
        r.push(FunctionalResult::within_se("mean", 100, 0.5, 0.1, 0.45, 3.0));
        let text = r.csv_string().unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "experiment,functional,n,statistic,p,reference,verdict");
        assert_eq!(lines.next().unwrap(), "x,mean,100,5.000000e-1,,4.500000e-1,pass");
        assert!(r.passed());
    }

    #[test]
    fn any_failure_fails_the_report() {
        let mut r = TestReport::new("x", 1, 100);
        r.push(FunctionalResult::at_most("tv", 100, 0.1, 0.01, "tv"));
        r.push(FunctionalResult::at_most("tv2", 100, 0.001, 0.01, "tv"));
        assert!(!r.passed());
        assert_eq!(r.failures().len(), 1);
    }
}
