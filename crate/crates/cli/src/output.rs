use std::io::Write;

use nv_detect::{Evaluation, Regime};
use serde::Serialize;

use crate::config::Variable;
use crate::failure::Failure;

pub const COLUMNS: [&str; 6] = ["p_error", "chi", "nu", "mu_abs", "mu_arg", "regime"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub value: f64,
    pub p_error: f64,
    /// None outside the measurement regime.
    pub chi: Option<f64>,
    pub nu: f64,
    pub mu_abs: f64,
    pub mu_arg: f64,
    #[serde(serialize_with = "regime_name")]
    pub regime: Regime,
}

fn regime_name<S: serde::Serializer>(r: &Regime, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(r.as_str())
}

impl Row {
    /// Row for `eval`, reporting `p_error` in place of the single-shot value.
    pub fn new(value: f64, eval: &Evaluation, p_error: f64) -> Self {
        Self {
            value,
            p_error,
            chi: eval.chi(),
            nu: eval.nu,
            mu_abs: eval.mu.norm(),
            mu_arg: eval.mu.arg(),
            regime: eval.regime(),
        }
    }
}

/// 17 significant digits, enough to recover every f64 exactly.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    pub variable: Variable,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn optimum(&self) -> Option<&Row> {
        self.rows.iter().fold(None, |best: Option<&Row>, r| match best {
            Some(b) if b.p_error <= r.p_error => Some(b),
            _ => Some(r),
        })
    }

    fn swept(&self, v: f64) -> String {
        if self.variable.is_integer() {
            format!("{}", v as u64)
        } else {
            float(v)
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.variable.column()];
        header.extend(COLUMNS);
        w.write_record(&header)?;
        for r in &self.rows {
            w.write_record([
                self.swept(r.value),
                float(r.p_error),
                float(r.chi.unwrap_or(f64::NAN)),
                float(r.nu),
                float(r.mu_abs),
                float(r.mu_arg),
                r.regime.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W, seed: Option<u64>, threads: Option<usize>) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Summary<'a> {
            command: &'a str,
            variable: &'a str,
            optimum: Option<&'a Row>,
            rows: &'a [Row],
            metadata: Metadata,
        }
        #[derive(Serialize)]
        struct Metadata {
            version: &'static str,
            n_rows: usize,
            seed: Option<u64>,
            threads: Option<usize>,
            parallel: bool,
        }
        let summary = Summary {
            command: self.command,
            variable: self.variable.column(),
            optimum: self.optimum(),
            rows: &self.rows,
            metadata: Metadata {
                version: env!("CARGO_PKG_VERSION"),
                n_rows: self.rows.len(),
                seed,
                threads,
                parallel: nv_detect::Execution::default().is_parallel(),
            },
        };
        serde_json::to_writer_pretty(&mut out, &summary)?;
        writeln!(out)?;
        Ok(())
    }
}
