//! Multi-objective training losses over spike trains.
//!
//! The family combines a spike-count term (crystal-wise mean squared error
//! of spike counts) with a timing term (squared distance from each
//! predicted spike to its nearest label spike, optionally symmetrized into
//! a Chamfer distance), weighted `a` and `b`.
//!
//! Losses are defined on per-crystal spike index sets, so the core entry
//! points take plain index rows; [`SpikeTrain`] wrappers layer the usual
//! config checks on top. Gradients are taken with respect to spike values
//! at fixed positions: each output cell (c, t) receives the count residual
//! plus the timing distance profile at t, which is exactly the derivative
//! of [`soft_combined_loss`].

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::SpikeTrain;

/// Which timing term [`combined_loss`] adds to the count term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingKind {
    None,
    Mse,
    Chamfer,
}

/// Weights of the combined loss: `count_weight * count + timing_weight * timing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub count_weight: f64,
    pub timing_weight: f64,
    pub timing: TimingKind,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            count_weight: 1.0,
            timing_weight: 0.1,
            timing: TimingKind::Mse,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count_weight < 0.0 || self.timing_weight < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "loss weights must be non-negative, got count {} timing {}",
                self.count_weight, self.timing_weight
            )));
        }
        if self.count_weight == 0.0 && self.timing_weight == 0.0 {
            return Err(Error::InvalidConfig(
                "loss weights must not both be zero".into(),
            ));
        }
        Ok(())
    }
}

/// Time indices of the active cells in a dense binary row.
pub fn spike_indices(row: &[f64]) -> Vec<u32> {
    row.iter()
        .enumerate()
        .filter(|(_, &v)| v == 1.0)
        .map(|(t, _)| t as u32)
        .collect()
}

/// Per-crystal spike index rows of a dense binary matrix.
pub fn spike_rows(dense: &Array2<f64>) -> Vec<Vec<u32>> {
    dense
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v == 1.0)
                .map(|(t, _)| t as u32)
                .collect()
        })
        .collect()
}

fn check_rows(s: &[Vec<u32>], y: &[Vec<u32>]) -> Result<()> {
    if s.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: y.len(),
        });
    }
    Ok(())
}

fn sq(a: u32, b: u32) -> f64 {
    let d = f64::from(a) - f64::from(b);
    d * d
}

/// Sum over `from` of the squared distance to the nearest time in `to`;
/// each spike pays `t_len`² when `to` is empty. Both lists ascending.
fn sum_min_sq(from: &[u32], to: &[u32], t_len: u32) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    if to.is_empty() {
        return f64::from(t_len) * f64::from(t_len) * from.len() as f64;
    }
    debug_assert!(from.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(to.windows(2).all(|w| w[0] < w[1]));
    let mut j = 0;
    let mut total = 0.0;
    for &s in from {
        while j + 1 < to.len() && to[j + 1] <= s {
            j += 1;
        }
        let mut best = sq(s, to[j]);
        if j + 1 < to.len() {
            best = best.min(sq(s, to[j + 1]));
        }
        total += best;
    }
    total
}

/// Squared distance from every time step to the nearest spike in `times`,
/// or `t_len`² everywhere when `times` is empty.
fn distance_profile(times: &[u32], t_len: usize) -> Vec<f64> {
    if times.is_empty() {
        let penalty = (t_len as f64) * (t_len as f64);
        return vec![penalty; t_len];
    }
    let mut j = 0;
    (0..t_len as u32)
        .map(|t| {
            while j + 1 < times.len() && times[j + 1] <= t {
                j += 1;
            }
            let mut best = sq(t, times[j]);
            if j + 1 < times.len() {
                best = best.min(sq(t, times[j + 1]));
            }
            best
        })
        .collect()
}

/// Mean over crystals of the squared spike-count difference.
pub fn count_loss_rows(s: &[Vec<u32>], y: &[Vec<u32>]) -> Result<f64> {
    check_rows(s, y)?;
    let total: f64 = s
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a.len() as f64 - b.len() as f64;
            d * d
        })
        .sum();
    Ok(total / s.len() as f64)
}

/// Squared distance from each predicted spike to the nearest label spike on
/// its crystal; `t_len`² per spike on crystals with no label spikes.
pub fn timing_loss_mse_rows(s: &[Vec<u32>], y: &[Vec<u32>], t_len: u32) -> Result<f64> {
    check_rows(s, y)?;
    Ok(s
        .iter()
        .zip(y)
        .map(|(a, b)| sum_min_sq(a, b, t_len))
        .sum())
}

/// Symmetrized timing loss: forward term plus the same sum with the roles
/// of prediction and label swapped.
pub fn timing_loss_chamfer_rows(s: &[Vec<u32>], y: &[Vec<u32>], t_len: u32) -> Result<f64> {
    check_rows(s, y)?;
    Ok(s
        .iter()
        .zip(y)
        .map(|(a, b)| sum_min_sq(a, b, t_len) + sum_min_sq(b, a, t_len))
        .sum())
}

/// Weighted combination per `cfg`; `TimingKind::None` selects count only.
pub fn combined_loss_rows(
    s: &[Vec<u32>],
    y: &[Vec<u32>],
    t_len: u32,
    cfg: &LossConfig,
) -> Result<f64> {
    cfg.validate()?;
    let count = count_loss_rows(s, y)?;
    let timing = match cfg.timing {
        TimingKind::None => 0.0,
        TimingKind::Mse => timing_loss_mse_rows(s, y, t_len)?,
        TimingKind::Chamfer => timing_loss_chamfer_rows(s, y, t_len)?,
    };
    Ok(cfg.count_weight * count + cfg.timing_weight * timing)
}

fn check_trains(s: &SpikeTrain, y: &SpikeTrain) -> Result<()> {
    if s.config() != y.config() {
        return Err(Error::ConfigMismatch(format!(
            "prediction is {}x{}, label is {}x{}",
            s.config().num_crystals(),
            s.config().num_timesteps(),
            y.config().num_crystals(),
            y.config().num_timesteps()
        )));
    }
    Ok(())
}

pub fn count_loss(s: &SpikeTrain, y: &SpikeTrain) -> Result<f64> {
    check_trains(s, y)?;
    count_loss_rows(&s.times_by_crystal(), &y.times_by_crystal())
}

pub fn timing_loss_mse(s: &SpikeTrain, y: &SpikeTrain) -> Result<f64> {
    check_trains(s, y)?;
    timing_loss_mse_rows(
        &s.times_by_crystal(),
        &y.times_by_crystal(),
        s.config().num_timesteps(),
    )
}

pub fn timing_loss_chamfer(s: &SpikeTrain, y: &SpikeTrain) -> Result<f64> {
    check_trains(s, y)?;
    timing_loss_chamfer_rows(
        &s.times_by_crystal(),
        &y.times_by_crystal(),
        s.config().num_timesteps(),
    )
}

pub fn combined_loss(s: &SpikeTrain, y: &SpikeTrain, cfg: &LossConfig) -> Result<f64> {
    check_trains(s, y)?;
    combined_loss_rows(
        &s.times_by_crystal(),
        &y.times_by_crystal(),
        s.config().num_timesteps(),
        cfg,
    )
}

/// Gradient of the combined loss with respect to spike values at fixed
/// spike positions.
///
/// Cell (c, t) receives `count_weight * (2/C) * (sum_t s[c] - |y_c|)` plus
/// `timing_weight * d_c(t)`, where `d_c` is the squared distance to the
/// nearest label spike (or `T`² on unlabeled crystals). For binary `s` the
/// row sum is the spike count; real-valued rows (relaxed forward) make this
/// the exact derivative of [`soft_combined_loss`]. The Chamfer reverse term
/// is constant in spike values, so `Mse` and `Chamfer` share one gradient.
pub fn loss_gradient(s: &Array2<f64>, y_rows: &[Vec<u32>], cfg: &LossConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    if s.nrows() != y_rows.len() {
        return Err(Error::LengthMismatch {
            left: s.nrows(),
            right: y_rows.len(),
        });
    }
    let crystals = s.nrows();
    let t_len = s.ncols();
    let mut grad = Array2::zeros((crystals, t_len));
    for (c, y_times) in y_rows.iter().enumerate() {
        let residual = s.row(c).sum() - y_times.len() as f64;
        let count_term = cfg.count_weight * 2.0 / crystals as f64 * residual;
        match cfg.timing {
            TimingKind::None => {
                grad.row_mut(c).fill(count_term);
            }
            TimingKind::Mse | TimingKind::Chamfer => {
                let profile = distance_profile(y_times, t_len);
                for (t, d) in profile.iter().enumerate() {
                    grad[(c, t)] = count_term + cfg.timing_weight * d;
                }
            }
        }
    }
    Ok(grad)
}

/// Differentiable loss over real-valued spike outputs.
///
/// `count_weight / C * Σ_c (Σ_t s[c,t] - |y_c|)²` plus
/// `timing_weight * Σ_c Σ_t s[c,t] * d_c(t)`. On binary inputs the count
/// term equals [`count_loss_rows`] and the timing term equals
/// [`timing_loss_mse_rows`]. [`loss_gradient`] is its exact derivative;
/// accordingly `Chamfer` is treated as `Mse` here (the reverse term has no
/// value-gradient).
pub fn soft_combined_loss(s: &Array2<f64>, y_rows: &[Vec<u32>], cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    if s.nrows() != y_rows.len() {
        return Err(Error::LengthMismatch {
            left: s.nrows(),
            right: y_rows.len(),
        });
    }
    let crystals = s.nrows();
    let t_len = s.ncols();
    let mut count = 0.0;
    let mut timing = 0.0;
    for (c, y_times) in y_rows.iter().enumerate() {
        let residual = s.row(c).sum() - y_times.len() as f64;
        count += residual * residual;
        if cfg.timing != TimingKind::None {
            let profile = distance_profile(y_times, t_len);
            timing += s
                .row(c)
                .iter()
                .zip(&profile)
                .map(|(v, d)| v * d)
                .sum::<f64>();
        }
    }
    Ok(cfg.count_weight * count / crystals as f64 + cfg.timing_weight * timing)
}
