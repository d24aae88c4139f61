//! Langevin sampling of `exp(-Σ_l |X_l|²/var_l - Φ(X))` restricted to
//! `‖X_l‖ ≤ R`.
//!
//! The proposal is the preconditioned Crank-Nicolson Langevin step, which
//! leaves the Gaussian part invariant exactly:
//!
//! `Y = a X - b σ² ∇Φ(X) + c σ ξ` with `a = (2-h)/(2+h)`, `b = 2h/(2+h)`,
//! `c = √(8h)/(2+h)` and `σ² = var/2` per real component.
//!
//! It is then accepted with the usual Metropolis-Hastings ratio, computed
//! from the full energy and the Gaussian proposal densities. At `Φ = 0`
//! every in-bounds proposal is accepted.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::eval::{LetterSystem, Potential};
use crate::rmt::matrix::ZMat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", default)]
pub struct SamplerConfig {
    /// Langevin step `h`, in `(0, 2]`.
    pub step_size: f64,
    pub burn_in: usize,
    pub thinning: usize,
    /// Steps after burn-in.
    pub steps: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            burn_in: 200,
            thinning: 5,
            steps: 500,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size <= 2.0) {
            return Err(Error::validation("step_size must lie in (0, 2]"));
        }
        if self.thinning == 0 || self.steps == 0 {
            return Err(Error::validation("steps and thinning must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChainStats {
    pub proposed: usize,
    pub accepted: usize,
    /// Rejections due to the norm cutoff.
    pub out_of_bounds: usize,
}

impl ChainStats {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposed as f64
    }
}

struct State {
    mats: Vec<ZMat>,
    energy: f64,
    grad: Vec<ZMat>,
}

fn state(sys: &LetterSystem, phi: &Potential, mats: Vec<ZMat>) -> State {
    let gauss: f64 = mats
        .iter()
        .zip(&sys.variance)
        .map(|(m, v)| m.norm_squared() / v)
        .sum();
    let energy = gauss + phi.value(sys, &mats);
    let grad = phi.gradient(sys, &mats);
    State { mats, energy, grad }
}

fn within(mats: &[ZMat], cutoff: Option<f64>) -> bool {
    match cutoff {
        None => true,
        Some(r) => mats.iter().all(|m| m.op_norm_at_most(r)),
    }
}

/// Mean of the proposal from `s`.
fn drift(sys: &LetterSystem, s: &State, h: f64) -> Vec<ZMat> {
    let a = (2.0 - h) / (2.0 + h);
    let b = 2.0 * h / (2.0 + h);
    s.mats
        .iter()
        .zip(&s.grad)
        .zip(&sys.variance)
        .map(|((x, g), var)| {
            let mut m = x.scale(a);
            m.add_scaled(-b * var / 2.0, g);
            m
        })
        .collect()
}

/// `log q(to | from)` up to a constant shared by both directions.
fn log_proposal(sys: &LetterSystem, mean: &[ZMat], to: &[ZMat], h: f64) -> f64 {
    let c2 = 8.0 * h / ((2.0 + h) * (2.0 + h));
    mean.iter()
        .zip(to)
        .zip(&sys.variance)
        .map(|((m, y), var)| {
            let mut d = y.clone();
            d.add_scaled(-1.0, m);
            -d.norm_squared() / (2.0 * c2 * var / 2.0)
        })
        .sum()
}

/// Runs one chain from a Gaussian start, calling `visit` on every kept
/// state after burn-in.
pub fn run_chain<R: Rng + ?Sized>(
    sys: &LetterSystem,
    phi: &Potential,
    cutoff: Option<f64>,
    cfg: &SamplerConfig,
    rng: &mut R,
    mut visit: impl FnMut(&[ZMat]),
) -> Result<ChainStats> {
    cfg.validate()?;
    let mut start = sys.sample_gaussian(rng);
    let mut tries = 1;
    while !within(&start, cutoff) {
        if tries >= 100 {
            return Err(Error::validation(
                "no Gaussian starting point satisfies the cutoff; increase R",
            ));
        }
        start = sys.sample_gaussian(rng);
        tries += 1;
    }
    let h = cfg.step_size;
    let c = (8.0 * h).sqrt() / (2.0 + h);
    let mut cur = state(sys, phi, start);
    let mut cur_mean = drift(sys, &cur, h);
    let mut stats = ChainStats::default();
    let mut burn = ChainStats::default();
    for step in 0..cfg.burn_in + cfg.steps {
        let proposal: Vec<ZMat> = cur_mean
            .iter()
            .zip(&sys.variance)
            .map(|(m, var)| {
                let mut y = ZMat::gaussian(m.nrows(), m.ncols(), *var, rng);
                y = y.scale(c);
                y.add_scaled(1.0, m);
                y
            })
            .collect();
        let tally = if step < cfg.burn_in { &mut burn } else { &mut stats };
        tally.proposed += 1;
        // the uniform is drawn unconditionally to keep streams aligned
        let u: f64 = rng.random();
        if within(&proposal, cutoff) {
            let next = state(sys, phi, proposal);
            let next_mean = drift(sys, &next, h);
            let log_ratio = cur.energy - next.energy + log_proposal(sys, &next_mean, &cur.mats, h)
                - log_proposal(sys, &cur_mean, &next.mats, h);
            if u.ln() < log_ratio {
                cur = next;
                cur_mean = next_mean;
                tally.accepted += 1;
            }
        } else {
            tally.out_of_bounds += 1;
        }
        if step >= cfg.burn_in && (step - cfg.burn_in) % cfg.thinning == 0 {
            visit(&cur.mats);
        }
    }
    let rate = stats.acceptance();
    if !(0.1..=0.9).contains(&rate) {
        let suggestion = if rate < 0.1 { h / 4.0 } else { (h * 2.0).min(2.0) };
        if rate < 0.1 || h < 2.0 {
            log::warn!(
                "acceptance rate {rate:.3} outside [0.1, 0.9]; try step_size {suggestion:.4}"
            );
        }
    }
    Ok(stats)
}
