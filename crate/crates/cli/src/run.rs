use std::io::Write;

use nv_detect::simulate::{closed_form_multicopy, simulate_multicopy};
use nv_detect::{optimize_pulses, optimize_time, Execution, Interrogation, Optimum, Protocol, Scenario};
use serde::Serialize;

use crate::config::{Config, SearchRange, Variable};
use crate::failure::Failure;
use crate::output::{float, Row, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Dc,
    Ac,
    Waveform,
    Multicopy,
    Efficiency,
    Optimize,
}

impl Sweep {
    fn name(self) -> &'static str {
        match self {
            Sweep::Dc => "dc",
            Sweep::Ac => "ac",
            Sweep::Waveform => "waveform",
            Sweep::Multicopy => "multicopy",
            Sweep::Efficiency => "efficiency",
            Sweep::Optimize => "optimize",
        }
    }

    fn variable(self) -> Option<Variable> {
        match self {
            Sweep::Dc | Sweep::Waveform => Some(Variable::T),
            Sweep::Ac => Some(Variable::N),
            Sweep::Multicopy => Some(Variable::M),
            Sweep::Efficiency => Some(Variable::Eta),
            Sweep::Optimize => None,
        }
    }
}

fn require_protocol(cmd: Sweep, scenario: &Scenario) -> Result<(), Failure> {
    let ok = match cmd {
        Sweep::Dc => matches!(scenario.protocol, Protocol::FreeEvolution),
        Sweep::Ac => matches!(scenario.protocol, Protocol::Cpmg { .. }),
        Sweep::Waveform => matches!(scenario.protocol, Protocol::NodeLocked),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Failure::Config(format!(
            "`{}` does not apply to protocol {:?}",
            cmd.name(),
            scenario.protocol
        )))
    }
}

fn time_variable(scenario: &Scenario) -> Variable {
    match scenario.protocol {
        Protocol::Cpmg { .. } => Variable::N,
        _ => Variable::T,
    }
}

pub fn optimize(scenario: &Scenario, range: SearchRange) -> Result<Optimum, Failure> {
    Ok(match scenario.protocol {
        Protocol::Cpmg { .. } => {
            let even = |x: f64, up: bool| {
                let n = if up { (x / 2.0).ceil() } else { (x / 2.0).floor() };
                (2.0 * n.max(1.0)) as u32
            };
            optimize_pulses(scenario, even(range.min, true), even(range.max, false))?
        }
        _ => optimize_time(scenario, range.min, range.max)?,
    })
}

/// The configured interrogation point, or the optimum.
fn point(config: &Config) -> Result<Interrogation, Failure> {
    match config.at {
        Some(p) => Ok(p),
        None => Ok(optimize(&config.scenario, config.search_range())?.point),
    }
}

fn at(scenario: &Scenario, v: f64) -> Interrogation {
    match time_variable(scenario) {
        Variable::N => Interrogation::Pulses(v as u32),
        _ => Interrogation::Time(v),
    }
}

fn rows<F>(values: &[f64], f: F) -> Result<Vec<Row>, Failure>
where
    F: Fn(f64) -> Result<Row, Failure> + Sync + Send,
{
    Execution::default()
        .map(values.len(), |i| f(values[i]))
        .into_iter()
        .collect()
}

pub fn sweep(cmd: Sweep, config: &Config) -> Result<Table, Failure> {
    let s = &config.scenario;
    require_protocol(cmd, s)?;
    let spec = match &config.sweep {
        Some(spec) if cmd != Sweep::Optimize || spec.variable == Variable::SigmaB => spec,
        other => {
            if cmd != Sweep::Optimize {
                return Err(Failure::Config(format!("`{}` needs a sweep", cmd.name())));
            }
            // A T or N sweep bounds the search unless a range is configured.
            let range = match (config.search, other) {
                (Some(r), _) => r,
                (None, Some(spec)) if spec.variable == time_variable(s) => SearchRange {
                    min: spec.start,
                    max: spec.stop,
                },
                (None, Some(spec)) => {
                    return Err(Failure::Config(format!(
                        "`optimize` sweeps sigma_b, not {}",
                        spec.variable.column()
                    )))
                }
                (None, None) => config.search_range(),
            };
            let opt = optimize(s, range)?;
            let eval = s.evaluate(opt.point)?;
            return Ok(Table {
                command: cmd.name(),
                variable: time_variable(s),
                rows: vec![Row::new(opt.point.value(), &eval, eval.p_error)],
            });
        }
    };
    if let Some(expected) = cmd.variable() {
        if spec.variable != expected {
            return Err(Failure::Config(format!(
                "`{}` sweeps {}, not {}",
                cmd.name(),
                expected.column(),
                spec.variable.column()
            )));
        }
    }
    let values = spec.values()?;
    let rows = match cmd {
        Sweep::Dc | Sweep::Ac | Sweep::Waveform => rows(&values, |v| {
            let e = s.evaluate(at(s, v))?;
            Ok(Row::new(v, &e, e.p_error))
        })?,
        Sweep::Multicopy => {
            let p = point(config)?;
            let e = s.evaluate(p)?;
            rows(&values, |v| Ok(Row::new(v, &e, closed_form_multicopy(s, p, v as u32)?)))?
        }
        Sweep::Efficiency => {
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Failure::Config("eta must lie in [0, 1]".into()));
            }
            let p = point(config)?;
            rows(&values, |v| {
                let e = s.clone().with_eta(v).evaluate(p)?;
                Ok(Row::new(v, &e, e.p_error))
            })?
        }
        Sweep::Optimize => {
            let range = config.search_range();
            // Each row is itself a parallel search, so rows run in order.
            values
                .iter()
                .map(|&v| {
                    let mut sv = s.clone();
                    sv.field = s.field.with_sigma_b(v)?;
                    let opt = optimize(&sv, range)?;
                    let e = sv.evaluate(opt.point)?;
                    Ok(Row::new(v, &e, e.p_error))
                })
                .collect::<Result<_, Failure>>()?
        }
    };
    Ok(Table {
        command: cmd.name(),
        variable: spec.variable,
        rows,
    })
}

/// Outcome of the `simulate` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub variable: &'static str,
    pub point: f64,
    pub copies: u32,
    pub shots: u64,
    pub seed: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub standard_error: f64,
    pub closed_form: f64,
    pub z_score: f64,
}

pub const DEFAULT_SHOTS: u64 = 100_000;

pub fn simulate(config: &Config, seed: u64) -> Result<SimulationReport, Failure> {
    let s = &config.scenario;
    let p = point(config)?;
    let copies = config.copies.unwrap_or(1);
    let shots = config.shots.unwrap_or(DEFAULT_SHOTS);
    let closed_form = closed_form_multicopy(s, p, copies)?;
    let r = simulate_multicopy(s, p, copies, shots, seed)?;
    Ok(SimulationReport {
        variable: time_variable(s).column(),
        point: p.value(),
        copies,
        shots,
        seed,
        errors: r.errors,
        error_rate: r.error_rate,
        standard_error: r.standard_error,
        closed_form,
        z_score: r.z_score(closed_form),
    })
}

impl SimulationReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            self.variable,
            "copies",
            "shots",
            "seed",
            "errors",
            "error_rate",
            "standard_error",
            "closed_form",
            "z_score",
        ])?;
        let point = if self.variable == "N" {
            format!("{}", self.point as u64)
        } else {
            float(self.point)
        };
        w.write_record([
            point,
            self.copies.to_string(),
            self.shots.to_string(),
            self.seed.to_string(),
            self.errors.to_string(),
            float(self.error_rate),
            float(self.standard_error),
            float(self.closed_form),
            float(self.z_score),
        ])?;
        w.flush()?;
        Ok(())
    }
}
