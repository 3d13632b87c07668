//! Trajectory driver with diagnostics and the blow-up monitor.

use std::ops::Range;

use rayon::prelude::*;

use super::{SimState, Stepper};
use crate::diagnostics::{blowup_monitor, default_threshold, update_norms, DiagnosticsRecord, EnergyPartials, MonitorStatus};
use crate::error::{HydroError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub n_steps: u64,
    /// Record every `diag_cadence` steps (and after the last step).
    pub diag_cadence: u64,
    /// `None` uses [`default_threshold`] of the initial record.
    pub blowup_threshold: Option<f64>,
    /// Monitor horizon; records after it are never flagged.
    pub horizon: f64,
    /// Accumulate the temperature balance partial sums every step.
    pub energy_balance: bool,
}

impl RunOptions {
    pub fn new(n_steps: u64) -> Self {
        RunOptions { n_steps, diag_cadence: 1, blowup_threshold: None, horizon: f64::INFINITY, energy_balance: false }
    }

    pub fn with_cadence(mut self, c: u64) -> Self {
        self.diag_cadence = c;
        self
    }

    pub fn with_threshold(mut self, t: f64) -> Self {
        self.blowup_threshold = Some(t);
        self
    }

    pub fn with_horizon(mut self, h: f64) -> Self {
        self.horizon = h;
        self
    }

    pub fn with_energy_balance(mut self, on: bool) -> Self {
        self.energy_balance = on;
        self
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Last finite state reached.
    pub final_state: SimState,
    pub records: Vec<DiagnosticsRecord>,
    /// `(t, functional)` of the first flagged record.
    pub blowup: Option<(f64, f64)>,
}

impl RunOutput {
    pub fn flagged(&self) -> bool {
        self.blowup.is_some()
    }
}

/// Advance `ics` by up to `opts.n_steps` steps, recording diagnostics and
/// stopping at the first monitor flag or non-finite state. Other step
/// errors are returned with their step index.
pub fn run(
    stepper: &Stepper,
    ics: SimState,
    opts: &RunOptions,
    mut callback: impl FnMut(&SimState, &DiagnosticsRecord),
) -> Result<RunOutput> {
    if opts.diag_cadence == 0 {
        return Err(HydroError::InvalidConfig("diag_cadence must be at least 1".into()));
    }
    let alpha = stepper.coefficients().alpha;
    let dt = stepper.dt();
    let mut state = ics;
    let mut energy = EnergyPartials::start(&state.theta);
    let mut last = update_norms(&state, None, 0.0, alpha);
    let threshold = opts.blowup_threshold.unwrap_or_else(|| default_threshold(&last));
    let mut records = Vec::new();

    let flag = |rec: &mut DiagnosticsRecord| -> Option<(f64, f64)> {
        match blowup_monitor(rec, threshold, opts.horizon) {
            MonitorStatus::Continue => None,
            MonitorStatus::Flag { t, value } => {
                rec.blowup_flag = true;
                Some((t, value))
            }
        }
    };

    let mut blowup = flag(&mut last);
    callback(&state, &last);
    records.push(last);

    let mut k = 0;
    while blowup.is_none() && k < opts.n_steps {
        if opts.energy_balance {
            energy.accumulate(&state.theta, stepper.basis(), alpha, dt);
        }
        let next = match stepper.step(&state) {
            Ok(s) => s,
            Err(HydroError::NonFinite { step, t }) => {
                let rec = DiagnosticsRecord::non_finite(&last, step, t);
                blowup = Some((t, f64::INFINITY));
                callback(&state, &rec);
                records.push(rec);
                break;
            }
            Err(e) => return Err(e),
        };
        state = next;
        k += 1;
        if k % opts.diag_cadence == 0 || k == opts.n_steps {
            let mut rec = update_norms(&state, Some(&last), state.t - last.t, alpha);
            rec.energy = EnergyPartials { theta_sq: rec.energy.theta_sq, ..energy };
            blowup = flag(&mut rec);
            callback(&state, &rec);
            records.push(rec);
            last = rec;
        }
    }
    Ok(RunOutput { final_state: state, records, blowup })
}

/// Run `trajectories` in parallel; `ics(k)` builds the initial state of
/// trajectory `k`. Outputs are returned in trajectory order.
pub fn run_ensemble(
    stepper: &Stepper,
    ics: impl Fn(u64) -> Result<SimState> + Sync,
    trajectories: Range<u64>,
    opts: &RunOptions,
) -> Result<Vec<RunOutput>> {
    trajectories
        .into_par_iter()
        .map(|k| {
            let mut s = ics(k)?;
            s.trajectory_index = k;
            run(stepper, s, opts, |_, _| {})
        })
        .collect()
}
