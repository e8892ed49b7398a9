use decoy_core::protocol::AbortTest;
use decoy_core::{BoundDetails, SecurityReport, SessionConfig, Tally, YieldEstimate};
use serde::Serialize;

/// Machine-readable result of `analyze` or `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: SessionConfig,
    pub tally: Option<Tally>,
    pub yields: Option<Yields>,
    pub aborted: bool,
    pub security: SecurityReport,
    pub timing: Timing,
    pub details: Details,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Yields {
    pub signal: YieldEstimate,
    pub decoy: YieldEstimate,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub pulses_per_second: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Details {
    pub abort_test: AbortTest,
    pub bounds: BoundDetails,
    /// Set when the verdict was computed after an abort and is informational only.
    pub security_note: Option<String>,
}

pub const POST_ABORT_NOTE: &str = "post-abort, informational";

impl RunReport {
    /// 0 when secure and not aborted, 2 otherwise.
    pub fn exit_code(&self) -> u8 {
        if self.security.verdict.is_secure() && !self.aborted {
            0
        } else {
            2
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        if let Some(y) = &self.yields {
            out.push_str(&format!(
                "signal yield {:.6} ± {:.6} ({} / {}), decoy yield {:.6} ± {:.6} ({} / {})\n",
                y.signal.y_hat,
                y.signal.std_err,
                y.signal.detected,
                y.signal.sent,
                y.decoy.y_hat,
                y.decoy.std_err,
                y.decoy.detected,
                y.decoy.sent,
            ));
        }
        let s = &self.security;
        out.push_str(&format!(
            "{:?} check: Y_s = {:.6e} vs {:.6e} * Y_d = {:.6e} -> {} (margin {:.3e})\n",
            s.mode, s.condition_lhs, s.ratio_bound, s.condition_rhs, s.verdict, s.margin
        ));
        if let Some(m) = s.normal_op_margin {
            out.push_str(&format!("normal-operation margin {m:.6}\n"));
        }
        let a = &self.details.abort_test;
        out.push_str(&format!(
            "abort test: decoy lower {:.6e} vs ceiling {:.6e} -> {}\n",
            a.decoy_lower,
            a.ceiling,
            if self.aborted { "ABORT" } else { "continue" }
        ));
        if let Some(rate) = self.timing.pulses_per_second {
            out.push_str(&format!(
                "{} pulses in {:.3} s ({rate:.3e} pulses/s), seed {}\n",
                self.config.pulses, self.timing.wall_seconds, self.config.seed
            ));
        }
        out
    }
}
