//! The `analyze`, `simulate` and `sweep` commands.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use decoy_core::protocol::abort_test;
use decoy_core::{
    assess_analytic, assess_empirical, estimate_yields, AdversarySpec, SecurityAssessment, Session,
    SessionConfig, SourceSpec, Verdict, YieldEstimate,
};
use serde::Serialize;

use crate::report::{Details, RunReport, Timing, Yields, POST_ABORT_NOTE};

fn exact_estimate(y: f64) -> YieldEstimate {
    YieldEstimate {
        y_hat: y,
        std_err: 0.0,
        sent: 0,
        detected: 0,
    }
}

fn details(assessment: &SecurityAssessment, abort: decoy_core::protocol::AbortTest) -> Details {
    Details {
        abort_test: abort,
        bounds: assessment.details.clone(),
        security_note: abort.aborted.then(|| POST_ABORT_NOTE.to_string()),
    }
}

/// Closed-form evaluation: yields from the adversary's yield vector, no random draws.
pub fn cmd_analyze(config: &SessionConfig) -> Result<RunReport> {
    let start = Instant::now();
    let session = Session::new(config.clone())?;
    let assessment = assess_analytic(session.signal(), session.decoy(), session.yields())?;
    let abort = abort_test(
        &exact_estimate(assessment.report.y_s),
        &exact_estimate(assessment.report.y_d),
        session.expected_ratio()?,
        config.abort_tolerance,
        config.confidence_z,
    );
    Ok(RunReport {
        config: config.clone(),
        tally: None,
        yields: None,
        aborted: abort.aborted,
        details: details(&assessment, abort),
        security: assessment.report,
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
            pulses_per_second: None,
        },
    })
}

/// Full Monte Carlo pipeline: session, yield estimates, abort test, and the
/// empirical security condition.
pub fn cmd_simulate(config: &SessionConfig) -> Result<RunReport> {
    let session = Session::new(config.clone())?;
    let expected_ratio = session.expected_ratio()?;
    let start = Instant::now();
    let tally = session.run();
    let elapsed = start.elapsed().as_secs_f64();
    let (signal, decoy) = estimate_yields(&tally).context("cannot estimate yields")?;
    let abort = abort_test(
        &signal,
        &decoy,
        expected_ratio,
        config.abort_tolerance,
        config.confidence_z,
    );
    let assessment = assess_empirical(
        session.signal(),
        session.decoy(),
        &signal,
        &decoy,
        config.confidence_z,
    )?;
    Ok(RunReport {
        config: config.clone(),
        tally: Some(tally),
        yields: Some(Yields { signal, decoy }),
        aborted: abort.aborted,
        details: details(&assessment, abort),
        security: assessment.report,
        timing: Timing {
            wall_seconds: elapsed,
            pulses_per_second: (elapsed > 0.0).then(|| config.pulses as f64 / elapsed),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    Mu,
    MuPrime,
    Epsilon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Mu => "mu",
            SweepParam::MuPrime => "mu_prime",
            SweepParam::Epsilon => "epsilon",
        }
    }

    /// Copy of `config` with this parameter set to `value`.
    pub fn apply(self, config: &SessionConfig, value: f64) -> Result<SessionConfig> {
        let mut c = config.clone();
        match (self, &mut c.adversary, &mut c.signal, &mut c.decoy) {
            (SweepParam::Eta, AdversarySpec::Passive { eta }, _, _) => *eta = value,
            (
                SweepParam::Eta,
                AdversarySpec::RateMatchingPns {
                    eta_mimic: Some(eta),
                    ..
                },
                _,
                _,
            ) => *eta = value,
            (SweepParam::Eta, _, _, _) => {
                bail!("eta sweeps need a passive or rate_matching_pns (eta_mimic) adversary")
            }
            (SweepParam::Mu, _, SourceSpec::Poisson { mu }, _) => *mu = value,
            (SweepParam::Mu, _, _, _) => bail!("mu sweeps need a poisson signal source"),
            (SweepParam::MuPrime, _, _, SourceSpec::Poisson { mu }) => *mu = value,
            (SweepParam::MuPrime, _, _, _) => bail!("mu_prime sweeps need a poisson decoy source"),
            (
                SweepParam::Epsilon,
                _,
                SourceSpec::NearSingleFactorial { epsilon } | SourceSpec::Spike { epsilon, .. },
                _,
            ) => *epsilon = value,
            (SweepParam::Epsilon, _, _, _) => {
                bail!("epsilon sweeps need a near_single_factorial or spike signal source")
            }
        }
        Ok(c)
    }
}

impl FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "eta" => SweepParam::Eta,
            "mu" => SweepParam::Mu,
            "mu_prime" => SweepParam::MuPrime,
            "epsilon" => SweepParam::Epsilon,
            other => bail!("unknown sweep parameter {other:?} (expected eta, mu, mu_prime or epsilon)"),
        })
    }
}

/// How sweep points are spaced between `start` and `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Step(f64),
    Linear(usize),
    Log(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let (start, stop) = (self.start, self.stop);
        if !(start.is_finite() && stop.is_finite()) || stop < start {
            bail!("sweep range must satisfy start <= stop, got [{start}, {stop}]");
        }
        let snap = |v: f64| if (v - stop).abs() <= 1e-12 * stop.abs().max(1.0) { stop } else { v };
        match self.spacing {
            Spacing::Step(step) => {
                if !(step > 0.0) {
                    bail!("sweep step must be positive, got {step}");
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| snap(start + i as f64 * step)).collect())
            }
            Spacing::Linear(points) | Spacing::Log(points) if points == 0 => {
                bail!("sweep needs at least one point")
            }
            Spacing::Linear(1) | Spacing::Log(1) => Ok(vec![start]),
            Spacing::Linear(points) => {
                let step = (stop - start) / (points - 1) as f64;
                Ok((0..points).map(|i| snap(start + i as f64 * step)).collect())
            }
            Spacing::Log(points) => {
                if !(start > 0.0) {
                    bail!("log-spaced sweeps need a positive start, got {start}");
                }
                let ratio = (stop / start).ln() / (points - 1) as f64;
                Ok((0..points)
                    .map(|i| snap(start * (ratio * i as f64).exp()))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: &'static str,
    pub value: f64,
    pub y_s: f64,
    pub y_d: f64,
    pub ratio_bound: f64,
    pub condition_lhs: f64,
    pub condition_rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "param",
    "value",
    "y_s",
    "y_d",
    "ratio_bound",
    "condition_lhs",
    "condition_rhs",
    "margin",
    "verdict",
];

/// Analytic evaluation at each sweep point, in parameter order.
pub fn cmd_sweep(config: &SessionConfig, sweep: &SweepSpec) -> Result<Vec<SweepRow>> {
    sweep
        .values()?
        .into_iter()
        .map(|value| {
            let point = sweep.param.apply(config, value)?;
            let report = cmd_analyze(&point)
                .with_context(|| format!("at {} = {value}", sweep.param.name()))?
                .security;
            Ok(SweepRow {
                param: sweep.param.name(),
                value,
                y_s: report.y_s,
                y_d: report.y_d,
                ratio_bound: report.ratio_bound,
                condition_lhs: report.condition_lhs,
                condition_rhs: report.condition_rhs,
                margin: report.margin,
                verdict: report.verdict,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
