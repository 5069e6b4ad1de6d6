//! Time-domain reference: fixed-step RK4 integration of the mean-field
//! equations with the probe switched on, followed by Fourier projection of the
//! settled signal onto the probe harmonics.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DriveParams, SystemParams};
use crate::response::harmonic_balance_solve;
use crate::steady::{steady_state, BranchPolicy};

/// Any state component above this magnitude counts as a blow-up.
pub const DIVERGENCE_NORM: f64 = 1e12;
/// Minimum number of steps per period of the fastest frequency in the system.
pub const STEPS_PER_PERIOD: f64 = 50.0;
/// Refinement of the automatic plan over that limit. At the limit itself the
/// RK4 phase error detunes a narrow mechanical resonance by a few percent of
/// its linewidth, which shows up directly in c₋ at a transparency dip.
const PLAN_REFINEMENT: f64 = 4.0;
/// Relative change of the dc component tolerated between two windows.
pub const SETTLE_TOLERANCE: f64 = 1e-6;
/// Default projection window length in probe periods.
pub const WINDOW_PERIODS: usize = 20;
/// Integrate until transients have decayed by this factor.
const TRANSIENT_DECAY: f64 = 1e7;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    q: f64,
    p: f64,
    c: Complex64,
    s: Complex64,
}

impl State {
    fn axpy(&self, h: f64, d: &State) -> State {
        State {
            q: self.q + h * d.q,
            p: self.p + h * d.p,
            c: self.c + h * d.c,
            s: self.s + h * d.s,
        }
    }

    fn max_norm(&self) -> f64 {
        self.q
            .abs()
            .max(self.p.abs())
            .max(self.c.norm())
            .max(self.s.norm())
    }
}

struct Rhs {
    mass: f64,
    omega_m2: f64,
    gamma_m: f64,
    g_mc: f64,
    cavity: Complex64,
    atom: Complex64,
    g_ac: f64,
    sigma_z: f64,
    pump: f64,
    eps_p: f64,
    delta: f64,
}

impl Rhs {
    fn new(p: &SystemParams, d: &DriveParams, delta: f64) -> Self {
        Self {
            mass: p.mirror_mass(),
            omega_m2: p.omega_m * p.omega_m,
            gamma_m: p.gamma_m,
            g_mc: p.g_mc,
            cavity: Complex64::new(p.kappa, p.delta_c),
            atom: Complex64::new(p.gamma_a, p.delta_a),
            g_ac: p.g_ac,
            sigma_z: p.sigma_z_ss,
            pump: d.omega_l_amp,
            eps_p: d.eps_p,
            delta,
        }
    }

    fn eval(&self, t: f64, x: &State) -> State {
        let probe = if self.eps_p == 0.0 {
            ZERO
        } else {
            self.eps_p * Complex64::from_polar(1.0, -self.delta * t)
        };
        State {
            q: x.p / self.mass,
            p: -self.mass * self.omega_m2 * x.q - self.gamma_m * x.p + self.g_mc * x.c.norm_sqr(),
            c: -self.cavity * x.c + I * (self.g_mc * x.q) * x.c - I * self.g_ac * x.s
                + self.pump
                + probe,
            s: -self.atom * x.s + I * (self.g_ac * self.sigma_z) * x.c,
        }
    }

    fn step(&self, t: f64, h: f64, x: &State) -> State {
        let k1 = self.eval(t, x);
        let k2 = self.eval(t + 0.5 * h, &x.axpy(0.5 * h, &k1));
        let k3 = self.eval(t + 0.5 * h, &x.axpy(0.5 * h, &k2));
        let k4 = self.eval(t + h, &x.axpy(h, &k3));
        State {
            q: x.q + h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
            p: x.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
            c: x.c + h / 6.0 * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c),
            s: x.s + h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s),
        }
    }
}

/// Uniformly sampled solution. Sample `i` is at time `(first_step + i)·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub first_step: u64,
    pub c: Vec<Complex64>,
    /// Atomic coherence ⟨σ₋⟩.
    pub sm: Vec<Complex64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        (self.first_step + i as u64) as f64 * self.dt
    }

    /// Writes `t,re_c,im_c,q,p,re_sm,im_sm` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,re_c,im_c,q,p,re_sm,im_sm")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
                self.time(i),
                self.c[i].re,
                self.c[i].im,
                self.q[i],
                self.p[i],
                self.sm[i].re,
                self.sm[i].im
            )?;
        }
        Ok(())
    }
}

/// Largest step allowed for the given parameters and probe detuning.
pub fn max_step(params: &SystemParams, delta: f64) -> f64 {
    let fastest = params
        .omega_m
        .max(delta.abs())
        .max(params.delta_c.abs())
        .max(params.delta_a.abs())
        .max(params.kappa);
    2.0 * std::f64::consts::PI / fastest / STEPS_PER_PERIOD
}

/// Integrates from vacuum to `t_final`, keeping samples with time ≥ `record_from`.
pub fn integrate_recording(
    params: &SystemParams,
    drive: &DriveParams,
    delta: f64,
    t_final: f64,
    dt: f64,
    record_from: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidPlan(format!(
            "time step must be > 0, got {dt}"
        )));
    }
    let limit = max_step(params, delta);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::InvalidPlan(format!(
            "time step {dt:.3e} s exceeds the stability limit {limit:.3e} s"
        )));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidPlan(format!(
            "final time must be finite and ≥ 0, got {t_final}"
        )));
    }
    let steps = (t_final / dt).round() as u64;
    // Snap to a whole step when `record_from` is one up to rounding.
    let r = record_from.max(0.0) / dt;
    let first = if (r - r.round()).abs() < 1e-9 * r.max(1.0) {
        r.round()
    } else {
        r.ceil()
    };
    let first = (first as u64).min(steps);

    let rhs = Rhs::new(params, drive, delta);
    let keep = (steps - first + 1) as usize;
    let mut traj = Trajectory {
        dt,
        first_step: first,
        c: Vec::with_capacity(keep),
        sm: Vec::with_capacity(keep),
        q: Vec::with_capacity(keep),
        p: Vec::with_capacity(keep),
    };
    let mut x = State {
        q: 0.0,
        p: 0.0,
        c: ZERO,
        s: ZERO,
    };
    for k in 0..=steps {
        if k >= first {
            traj.c.push(x.c);
            traj.sm.push(x.s);
            traj.q.push(x.q);
            traj.p.push(x.p);
        }
        if k == steps {
            break;
        }
        x = rhs.step(k as f64 * dt, dt, &x);
        let norm = x.max_norm();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Divergence {
                time: (k + 1) as f64 * dt,
            });
        }
    }
    Ok(traj)
}

/// Integrates from vacuum and keeps the full trajectory.
pub fn integrate(
    params: &SystemParams,
    drive: &DriveParams,
    delta: f64,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_recording(params, drive, delta, t_final, dt, 0.0)
}

/// Step size, duration and recording start for one projected run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationPlan {
    pub dt: f64,
    /// Steps per probe period (the period is an exact multiple of `dt`).
    pub steps_per_period: usize,
    pub window_periods: usize,
    pub settle_time: f64,
    pub t_final: f64,
    pub record_from: f64,
}

impl IntegrationPlan {
    /// Settle time `ln(1e7)` over the slowest decay rate among κ, γ_m/2 and
    /// (when coupled) γ_a, followed by two projection windows.
    pub fn auto(params: &SystemParams, delta: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(Error::InvalidPlan(format!(
                "probe detuning must be finite and non-zero, got {delta}"
            )));
        }
        let mut slowest = params.kappa;
        if params.g_mc > 0.0 {
            slowest = slowest.min(0.5 * params.gamma_m);
        }
        if params.g_ac > 0.0 {
            slowest = slowest.min(params.gamma_a);
        }
        if !(slowest > 0.0) {
            return Err(Error::InvalidPlan("an undamped mode never settles".into()));
        }
        let period = 2.0 * std::f64::consts::PI / delta.abs();
        let steps_per_period = (PLAN_REFINEMENT * period / max_step(params, delta)).ceil() as usize;
        let dt = period / steps_per_period as f64;
        let settle = TRANSIENT_DECAY.ln() / slowest;
        let settle_steps = (settle / dt).ceil();
        let window_steps = (WINDOW_PERIODS * steps_per_period) as f64;
        Ok(Self {
            dt,
            steps_per_period,
            window_periods: WINDOW_PERIODS,
            settle_time: settle_steps * dt,
            t_final: (settle_steps + 2.0 * window_steps) * dt,
            record_from: settle_steps * dt,
        })
    }

    pub fn run(
        &self,
        params: &SystemParams,
        drive: &DriveParams,
        delta: f64,
    ) -> Result<Trajectory> {
        integrate_recording(
            params,
            drive,
            delta,
            self.t_final,
            self.dt,
            self.record_from,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicDecomposition {
    pub dc: Complex64,
    /// Coefficient of e^{−iΔt}.
    pub minus: Complex64,
    /// Coefficient of e^{+iΔt}.
    pub plus: Complex64,
    /// Coefficient of e^{−2iΔt}.
    pub second_minus: Complex64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHarmonics {
    pub c: HarmonicDecomposition,
    pub sm: HarmonicDecomposition,
    /// For the real displacement `plus` is the conjugate of `minus`.
    pub q: HarmonicDecomposition,
}

/// `(1/N) Σ f_i e^{+ikΔt_i}` for k = 0, 1, −1, 2 over samples `range`.
fn project(
    samples: impl Iterator<Item = Complex64>,
    times: impl Iterator<Item = f64>,
    delta: f64,
) -> [Complex64; 4] {
    let mut acc = [ZERO; 4];
    let mut n = 0usize;
    for (f, t) in samples.zip(times) {
        let e = Complex64::from_polar(1.0, delta * t);
        let e2 = e * e;
        acc[0] += f;
        acc[1] += f * e;
        acc[2] += f * e.conj();
        acc[3] += f * e2;
        n += 1;
    }
    acc.map(|a| a / n as f64)
}

/// Projects `samples` (at `times`) onto the probe harmonics.
pub fn project_tone(samples: &[Complex64], times: &[f64], delta: f64) -> HarmonicDecomposition {
    let [dc, minus, plus, second_minus] =
        project(samples.iter().copied(), times.iter().copied(), delta);
    HarmonicDecomposition {
        dc,
        minus,
        plus,
        second_minus,
        window: (times[0], *times.last().unwrap()),
    }
}

/// Projects the last `n_periods` probe periods of `traj` onto the probe
/// harmonics after checking that the dc part of ⟨c⟩ has settled relative to
/// the preceding window of the same length.
pub fn project_harmonics(
    traj: &Trajectory,
    delta: f64,
    n_periods: usize,
) -> Result<TrajectoryHarmonics> {
    if delta == 0.0 || n_periods == 0 {
        return Err(Error::InvalidPlan(
            "projection needs Δ ≠ 0 and at least one period".into(),
        ));
    }
    let period = 2.0 * std::f64::consts::PI / delta.abs();
    let per = period / traj.dt;
    let steps_per_period = per.round() as usize;
    if steps_per_period == 0 || (per - steps_per_period as f64).abs() > 1e-6 * per {
        return Err(Error::InvalidPlan(format!(
            "the probe period is not a whole number of steps ({per:.6} steps)"
        )));
    }
    let window = n_periods * steps_per_period;
    if traj.len() < 2 * window + 1 {
        return Err(Error::InvalidPlan(format!(
            "trajectory has {} samples, need {} for two windows",
            traj.len(),
            2 * window + 1
        )));
    }
    // The window excludes its closing sample so it spans whole periods.
    let end = traj.len() - 1;
    let last = end - window..end;
    let prev = end - 2 * window..end - window;
    let times = |r: std::ops::Range<usize>| r.map(|i| traj.time(i));

    let c_last = project(
        traj.c[last.clone()].iter().copied(),
        times(last.clone()),
        delta,
    );
    let c_prev = project(
        traj.c[prev.clone()].iter().copied(),
        times(prev.clone()),
        delta,
    );
    let scale = c_prev[0].norm().max(c_prev[1].norm());
    let change = (c_last[0] - c_prev[0]).norm();
    if scale > 0.0 && change > SETTLE_TOLERANCE * scale {
        return Err(Error::NotSettled {
            relative_change: change / scale,
        });
    }

    let span = (traj.time(last.start), traj.time(last.end));
    let wrap = |[dc, minus, plus, second_minus]: [Complex64; 4]| HarmonicDecomposition {
        dc,
        minus,
        plus,
        second_minus,
        window: span,
    };
    let sm = project(
        traj.sm[last.clone()].iter().copied(),
        times(last.clone()),
        delta,
    );
    let q = project(
        traj.q[last.clone()].iter().map(|&v| Complex64::new(v, 0.0)),
        times(last.clone()),
        delta,
    );
    Ok(TrajectoryHarmonics {
        c: wrap(c_last),
        sm: wrap(sm),
        q: wrap(q),
    })
}

/// Runs the automatic plan at `delta` and projects the result.
pub fn oracle_harmonics(
    params: &SystemParams,
    drive: &DriveParams,
    delta: f64,
) -> Result<TrajectoryHarmonics> {
    let plan = IntegrationPlan::auto(params, delta)?;
    let traj = plan.run(params, drive, delta)?;
    project_harmonics(&traj, delta, plan.window_periods)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub delta: f64,
    pub delta_over_omega_m: f64,
    pub solver: Complex64,
    pub oracle: Complex64,
    pub relative_error: f64,
    /// Time-averaged ⟨c⟩ in the projection window.
    pub oracle_dc: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub points: Vec<OraclePoint>,
    pub max_relative_error: f64,
    /// Steady-state amplitude from the frequency-domain solver.
    pub c_s: Complex64,
    pub stable: bool,
}

/// Compares harmonic-balance c₋ with the oracle at each detuning. The
/// trajectories run first, in parallel, so that unstable parameters surface
/// as [`Error::Divergence`] even when no steady state exists; results keep
/// input order.
pub fn compare_with_solver(
    params: &SystemParams,
    drive: &DriveParams,
    deltas: &[f64],
    policy: BranchPolicy,
) -> Result<OracleComparison> {
    let at = |index: usize| {
        move |e: Error| Error::AtGridPoint {
            index,
            source: Box::new(e),
        }
    };
    let harmonics: Vec<TrajectoryHarmonics> = deltas
        .par_iter()
        .enumerate()
        .map(|(index, &delta)| oracle_harmonics(params, drive, delta).map_err(at(index)))
        .collect::<Result<_>>()?;
    let ss = steady_state(params, drive, policy)?;
    let points = deltas
        .iter()
        .zip(&harmonics)
        .enumerate()
        .map(|(index, (&delta, h))| {
            let solver = harmonic_balance_solve(params, &ss, delta, drive.eps_p)
                .map_err(at(index))?
                .c_minus;
            Ok(OraclePoint {
                delta,
                delta_over_omega_m: delta / params.omega_m,
                solver,
                oracle: h.c.minus,
                relative_error: (h.c.minus - solver).norm() / solver.norm(),
                oracle_dc: h.c.dc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative_error = points.iter().map(|p| p.relative_error).fold(0.0, f64::max);
    Ok(OracleComparison {
        points,
        max_relative_error,
        c_s: ss.c_s,
        stable: ss.stable,
    })
}
