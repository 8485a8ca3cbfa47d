//! Exact solver for the remaining-day lighting program.
//!
//! For steps `t = i..T` the controller picks LED electron transport `x_t` to
//!
//! ```text
//! minimize    Σ C_t [ (1/k) ln(a / (a - x_t - s̄_t)) - s_t ]
//! subject to  Σ (x_t + s̄_t) >= B,   0 <= x_t <= u_t
//! ```
//!
//! The bracket is the LED photon flux needed to lift the canopy from the
//! sun-only ETR `s̄_t` to `s̄_t + x_t`, so the objective is price-weighted LED
//! output. Every term is strictly convex and separable, so the KKT conditions
//! give a water-filling solution: with multiplier `λ`,
//!
//! ```text
//! x_t(λ) = clamp(a - s̄_t - C_t / (k λ), 0, u_t)
//! ```
//!
//! and `Σ x_t(λ)` is nondecreasing in `λ`. We bisect on the water level
//! `ν = 1/λ`, then snap to the exact root on the final active set.

use crate::error::{Error, Result};
use crate::light::PhotosynthesisParams;

/// LED photon efficacy used for cost accounting (µmol J⁻¹).
pub const DEFAULT_LED_EFFICACY: f64 = 2.8;

const MAX_BISECTIONS: usize = 200;

/// One instance of the remaining-horizon program.
#[derive(Debug, Clone)]
pub struct HorizonProblem {
    /// Index of the first step in the horizon (0-based within the photoperiod).
    pub start_step: usize,
    /// Electricity price per step, cent/kWh.
    pub prices: Vec<f64>,
    /// Sunlight ETR per step: measured at `start_step`, predicted afterwards.
    pub sun_etr: Vec<f64>,
    /// Sunlight PPFD per step, same provenance as `sun_etr`.
    pub sun_ppfd: Vec<f64>,
    pub params: PhotosynthesisParams,
    /// Largest LED electron transport per step.
    pub upper_bound: f64,
    /// Remaining requirement on `Σ (x_t + s̄_t)`.
    pub budget: f64,
    /// Safety margin keeping `a - x_t - s̄_t >= epsilon`.
    pub epsilon: f64,
}

impl HorizonProblem {
    /// Builds a problem with the default domain margin `1e-6 · a`.
    pub fn new(
        start_step: usize,
        prices: Vec<f64>,
        sun_etr: Vec<f64>,
        sun_ppfd: Vec<f64>,
        params: PhotosynthesisParams,
        upper_bound: f64,
        budget: f64,
    ) -> Self {
        Self {
            start_step,
            prices,
            sun_etr,
            sun_ppfd,
            epsilon: 1e-6 * params.a,
            params,
            upper_bound,
            budget,
        }
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = self.prices.len();
        if self.sun_etr.len() != n || self.sun_ppfd.len() != n {
            return Err(Error::Validation(format!(
                "horizon arrays differ in length: prices {n}, sun_etr {}, sun_ppfd {}",
                self.sun_etr.len(),
                self.sun_ppfd.len()
            )));
        }
        if let Some((t, c)) = self.prices.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Validation(format!("price at offset {t} must be > 0, got {c}")));
        }
        let a = self.params.a;
        if let Some((t, s)) = self.sun_etr.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s >= 0.0 && **s < a)) {
            return Err(Error::Validation(format!("sun ETR at offset {t} must lie in [0, {a}), got {s}")));
        }
        if let Some((t, s)) = self.sun_ppfd.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::Validation(format!("sun PPFD at offset {t} must be >= 0, got {s}")));
        }
        if !(self.upper_bound.is_finite() && self.upper_bound > 0.0) {
            return Err(Error::Validation(format!("LED upper bound must be > 0, got {}", self.upper_bound)));
        }
        if !self.budget.is_finite() {
            return Err(Error::Validation("budget must be finite".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0 && self.epsilon < a) {
            return Err(Error::Validation(format!("domain margin must lie in (0, a), got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Per-step upper bound `u_t = min(Ū, a - s̄_t - ε)`, floored at zero.
    pub fn step_upper(&self, t: usize) -> f64 {
        let room = self.params.a - self.sun_etr[t] - self.epsilon;
        self.upper_bound.min(room).max(0.0)
    }

    /// Price-weighted LED photon flux of a candidate schedule (the program's objective).
    pub fn objective(&self, led_etr: &[f64]) -> f64 {
        let PhotosynthesisParams { a, k } = self.params;
        led_etr
            .iter()
            .enumerate()
            .map(|(t, x)| {
                let total = x + self.sun_etr[t];
                self.prices[t] * ((a / (a - total)).ln() / k - self.sun_ppfd[t])
            })
            .sum()
    }

    /// `Σ (x_t + s̄_t) - B`; nonnegative when the requirement is met.
    pub fn constraint_slack(&self, led_etr: &[f64]) -> f64 {
        led_etr.iter().zip(&self.sun_etr).map(|(x, s)| x + s).sum::<f64>() - self.budget
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveDiagnostics {
    pub bisections: usize,
    /// Whether the closed-form root on the final active set was accepted.
    pub snapped: bool,
    /// Requirement left unmet by a full-power schedule (zero when feasible).
    pub shortfall: f64,
}

/// Optimal LED electron transport for every step of a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LightingSchedule {
    pub start_step: usize,
    pub led_etr: Vec<f64>,
    /// KKT multiplier of the requirement constraint.
    pub multiplier: f64,
    pub feasible: bool,
    pub diagnostics: SolveDiagnostics,
}

/// Right-hand side of the requirement: `D̄/m - Σ history`, in µmol m⁻² s⁻¹ summed over steps.
///
/// `dpi_target` is in mol m⁻² d⁻¹, `step_seconds` is `m`, and `history` holds
/// the realized `x_t + s̄_t` of completed steps. May be negative.
pub fn remaining_budget(dpi_target: f64, step_seconds: f64, history: &[f64]) -> f64 {
    dpi_target * 1e6 / step_seconds - history.iter().sum::<f64>()
}

/// Converts price-weighted LED PPFD (cent kWh⁻¹ µmol m⁻² s⁻¹) to cent m⁻² for one step.
pub fn cost_conversion_factor(step_seconds: f64, led_efficacy: f64) -> f64 {
    (step_seconds / 3600.0) / (led_efficacy * 1e3)
}

pub fn solve_horizon(problem: &HorizonProblem) -> Result<LightingSchedule> {
    problem.validate()?;
    let n = problem.len();
    let PhotosynthesisParams { a, k } = problem.params;
    let upper: Vec<f64> = (0..n).map(|t| problem.step_upper(t)).collect();
    let need = problem.budget - problem.sun_etr.iter().sum::<f64>();

    let zero_schedule = |diagnostics| LightingSchedule {
        start_step: problem.start_step,
        led_etr: vec![0.0; n],
        multiplier: 0.0,
        feasible: true,
        diagnostics,
    };
    if need <= 0.0 {
        return Ok(zero_schedule(SolveDiagnostics::default()));
    }

    let capacity: f64 = upper.iter().sum();
    if capacity < need {
        // Saturation multiplier: the smallest λ at which every step sits at its bound.
        let multiplier = (0..n)
            .map(|t| problem.prices[t] / (k * (a - problem.sun_etr[t] - upper[t])))
            .fold(0.0, f64::max);
        return Ok(LightingSchedule {
            start_step: problem.start_step,
            led_etr: upper,
            multiplier,
            feasible: false,
            diagnostics: SolveDiagnostics {
                shortfall: need - capacity,
                ..Default::default()
            },
        });
    }

    let fill = |level: f64, out: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for t in 0..n {
            let x = (a - problem.sun_etr[t] - problem.prices[t] * level / k).clamp(0.0, upper[t]);
            out[t] = x;
            total += x;
        }
        total
    };

    let mut x = vec![0.0; n];
    // Σx(ν) is nonincreasing in ν; at ν = 0 every step is at its bound (Σ = capacity >= need),
    // beyond `hi` every step is dark.
    let mut lo = 0.0;
    let mut hi = (0..n)
        .map(|t| k * (a - problem.sun_etr[t]) / problem.prices[t])
        .fold(0.0, f64::max);
    let tol = 1e-8 * problem.budget.abs().max(1.0);
    let mut bisections = 0;
    while bisections < MAX_BISECTIONS {
        bisections += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let total = fill(mid, &mut x);
        if total >= need {
            lo = mid;
            if total - need <= tol {
                break;
            }
        } else {
            hi = mid;
        }
    }

    // On the active set at `lo`, Σx is affine in ν; solve it exactly.
    fill(lo, &mut x);
    let mut level = lo;
    let mut snapped = false;
    let (mut fixed, mut free_intercept, mut free_slope) = (0.0, 0.0, 0.0);
    for t in 0..n {
        if x[t] <= 0.0 {
            continue;
        }
        if x[t] >= upper[t] {
            fixed += upper[t];
        } else {
            free_intercept += a - problem.sun_etr[t];
            free_slope += problem.prices[t] / k;
        }
    }
    if free_slope > 0.0 {
        let exact = (fixed + free_intercept - need) / free_slope;
        if exact.is_finite() && exact >= lo && exact <= hi {
            let mut trial = vec![0.0; n];
            if fill(exact, &mut trial) >= need - 1e-12 * need.max(1.0) {
                level = exact;
                x = trial;
                snapped = true;
            }
        }
    }
    if !snapped {
        fill(level, &mut x);
    }

    Ok(LightingSchedule {
        start_step: problem.start_step,
        led_etr: x,
        multiplier: if level > 0.0 { 1.0 / level } else { f64::INFINITY },
        feasible: true,
        diagnostics: SolveDiagnostics {
            bisections,
            snapped,
            shortfall: 0.0,
        },
    })
}

/// LED photon flux needed to raise canopy ETR from `sun_etr` to `sun_etr + led_etr`.
///
/// Returns zero for `led_etr <= 0`.
pub fn led_ppfd(led_etr: f64, sun_etr: f64, sun_ppfd: f64, params: &PhotosynthesisParams) -> Result<f64> {
    if led_etr <= 0.0 {
        return Ok(0.0);
    }
    let room = params.a - led_etr - sun_etr;
    if room.is_nan() || room <= 0.0 {
        return Err(Error::Domain(format!(
            "LED ETR {led_etr} + sun ETR {sun_etr} reaches the asymptote a = {}",
            params.a
        )));
    }
    Ok(((params.a / room).ln() / params.k - sun_ppfd).max(0.0))
}

/// Electricity cost of a schedule in cent m⁻², with `l` from [`cost_conversion_factor`].
pub fn schedule_cost(schedule: &LightingSchedule, problem: &HorizonProblem, l: f64) -> Result<f64> {
    if schedule.led_etr.len() != problem.len() {
        return Err(Error::Validation(format!(
            "schedule has {} steps but the problem has {}",
            schedule.led_etr.len(),
            problem.len()
        )));
    }
    let mut cost = 0.0;
    for (t, &x) in schedule.led_etr.iter().enumerate() {
        let flux = led_ppfd(x, problem.sun_etr[t], problem.sun_ppfd[t], &problem.params)?;
        cost += problem.prices[t] * flux * l;
    }
    Ok(cost)
}
