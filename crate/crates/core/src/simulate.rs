//! Monte Carlo estimates of policy values and two-sided exit functionals.
//!
//! With `sigma = 0` the path law is exact: the surplus falls linearly between
//! jumps, ruin times are solved in closed form and discounting is applied at
//! the event times. With `sigma > 0` the Brownian part uses Euler steps of
//! size `dt`, with jump epochs inserted exactly.
//!
//! Path `i` draws from stream `i` of a ChaCha8 generator keyed by the seed, so
//! results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LevyModel, PhaseTypeDist};
use crate::par::{map_indexed, pairwise_sum, Execution};
use crate::policy::Policy;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub paths: usize,
    pub seed: u64,
    /// Euler step, used only when `sigma > 0`.
    pub dt: f64,
    /// Paths stop once `e^{-qt}` falls below this.
    pub discount_floor: f64,
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            seed: 0,
            dt: 1e-3,
            discount_floor: 1e-8,
            execution: Execution::Parallel,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.discount_floor > 0.0 && self.discount_floor < 1.0) {
            return Err(Error::Config(format!(
                "discount floor {} must lie in (0, 1)",
                self.discount_floor
            )));
        }
        Ok(())
    }

    fn horizon(&self, q: f64) -> f64 {
        -self.discount_floor.ln() / q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
    /// Share of paths stopped by the discount floor rather than by ruin.
    pub truncated_fraction: f64,
}

impl SimResult {
    fn from_samples(samples: &[(f64, bool)], seed: u64) -> Self {
        let n = samples.len();
        let vals: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let mean = pairwise_sum(&vals) / n as f64;
        let sq: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
        let truncated = samples.iter().filter(|s| s.1).count();
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            paths: n,
            seed,
            truncated_fraction: truncated as f64 / n as f64,
        }
    }

    /// `|mean - target| <= k * std_error`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Exact sampler for a phase-type law via its absorbing Markov chain.
#[derive(Debug, Clone)]
pub struct PhaseTypeSampler {
    /// Cumulative initial probabilities; the remainder is an atom at zero.
    start: Vec<f64>,
    rates: Vec<f64>,
    /// Per phase: cumulative jump probabilities to phases `0..m`, then absorption.
    moves: Vec<Vec<f64>>,
}

impl PhaseTypeSampler {
    pub fn new(dist: &PhaseTypeDist) -> Self {
        let m = dist.phases();
        let t = dist.sub_generator();
        let cumulative = |v: Vec<f64>| {
            v.into_iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect::<Vec<f64>>()
        };
        let start = cumulative(dist.alpha().iter().copied().collect());
        let rates: Vec<f64> = (0..m).map(|i| -t[(i, i)]).collect();
        let moves = (0..m)
            .map(|i| {
                let mut row: Vec<f64> =
                    (0..m).map(|j| if i == j { 0.0 } else { t[(i, j)] / rates[i] }).collect();
                row.push(dist.exit()[i] / rates[i]);
                cumulative(row)
            })
            .collect();
        Self { start, rates, moves }
    }

    fn pick(cum: &[f64], u: f64) -> usize {
        cum.iter().position(|&c| u < c).unwrap_or(cum.len())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.rates.len();
        let mut phase = Self::pick(&self.start, rng.random::<f64>());
        let mut time = 0.0;
        while phase < m {
            let e: f64 = Exp1.sample(rng);
            time += e / self.rates[phase];
            let row = &self.moves[phase];
            // rounding can leave the last cumulative entry just below one
            phase = Self::pick(row, rng.random::<f64>() * row[m]);
        }
        time
    }
}

/// One draw from `dist`; builds a sampler per call, so prefer
/// [`PhaseTypeSampler`] in loops.
pub fn sample_phase_type<R: Rng + ?Sized>(rng: &mut R, dist: &PhaseTypeDist) -> f64 {
    PhaseTypeSampler::new(dist).sample(rng)
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

struct Path<'a> {
    model: &'a LevyModel,
    jumps: &'a PhaseTypeSampler,
    rng: ChaCha8Rng,
    horizon: f64,
    dt: f64,
}

/// Outcome of advancing the free (uncontrolled) process.
enum Event {
    /// A jump at time `t` lifted the surplus to `u`.
    Jump { t: f64, u: f64 },
    /// Surplus crossed above the level `b` at time `t` (`sigma > 0` only).
    Above { t: f64, u: f64 },
    Ruin { t: f64 },
    Horizon,
}

impl Path<'_> {
    fn exp(&mut self, rate: f64) -> f64 {
        let e: f64 = Exp1.sample(&mut self.rng);
        e / rate
    }

    /// Advances from `(t, u)` to the next jump, ruin, upward crossing of
    /// `above` or the horizon, whichever comes first.
    fn advance(&mut self, t: f64, u: f64, above: f64) -> Event {
        let d = self.model.drift_d();
        let sigma = self.model.sigma();
        let wait = self.exp(self.model.lambda());
        if sigma == 0.0 {
            let to_ruin = u / d;
            if wait >= to_ruin {
                let tr = t + to_ruin;
                return if tr > self.horizon { Event::Horizon } else { Event::Ruin { t: tr } };
            }
            let tj = t + wait;
            if tj > self.horizon {
                return Event::Horizon;
            }
            return Event::Jump { t: tj, u: u - d * wait + self.jumps.sample(&mut self.rng) };
        }
        let tj = t + wait;
        let (mut s, mut x) = (t, u);
        while s < tj {
            if s > self.horizon {
                return Event::Horizon;
            }
            let h = self.dt.min(tj - s);
            let z: f64 = StandardNormal.sample(&mut self.rng);
            x += -d * h + sigma * h.sqrt() * z;
            s = if h < self.dt { tj } else { s + h };
            if x < 0.0 {
                return Event::Ruin { t: s };
            }
            if x > above && s < tj {
                return Event::Above { t: s, u: x };
            }
        }
        Event::Jump { t: tj, u: x + self.jumps.sample(&mut self.rng) }
    }

    /// Discounted dividends net of costs under `policy`, and whether the path
    /// hit the horizon.
    fn value(&mut self, policy: Policy, beta: f64, x: f64) -> (f64, bool) {
        let q = self.model.q();
        let (c1, c2) = (policy.c1, policy.c2);
        let (mut t, mut u, mut total) = (0.0, x, 0.0);
        if u >= c2 {
            total += u - c1 - beta;
            u = c1;
        }
        loop {
            match self.advance(t, u, c2) {
                Event::Jump { t: s, u: v } | Event::Above { t: s, u: v } => {
                    t = s;
                    u = v;
                    if u >= c2 {
                        total += (-q * t).exp() * (u - c1 - beta);
                        u = c1;
                    }
                }
                Event::Ruin { .. } => return (total, false),
                Event::Horizon => return (total, true),
            }
        }
    }

    /// `(e^{-q tau_b^+} 1{up first}, e^{-q tau_0^-} 1{down first})` and the
    /// horizon flag.
    fn exit(&mut self, x: f64, b: f64) -> ((f64, f64), bool) {
        let q = self.model.q();
        let (mut t, mut u) = (0.0, x);
        loop {
            match self.advance(t, u, b) {
                Event::Jump { t: s, u: v } | Event::Above { t: s, u: v } => {
                    t = s;
                    u = v;
                    if u > b {
                        return (((-q * t).exp(), 0.0), false);
                    }
                }
                Event::Ruin { t } => return ((0.0, (-q * t).exp()), false),
                Event::Horizon => return ((0.0, 0.0), true),
            }
        }
    }
}

/// Monte Carlo estimate of the value of `policy` started at `x`.
pub fn simulate_value(model: &LevyModel, policy: Policy, beta: f64, x: f64, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    Policy::new(policy.c1, policy.c2)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("initial surplus x = {x} must be nonnegative")));
    }
    let sampler = PhaseTypeSampler::new(model.jumps());
    let horizon = cfg.horizon(model.q());
    let samples = map_indexed(cfg.execution, cfg.paths, |i| {
        Path { model, jumps: &sampler, rng: path_rng(cfg.seed, i), horizon, dt: cfg.dt }.value(policy, beta, x)
    });
    Ok(SimResult::from_samples(&samples, cfg.seed))
}

/// Monte Carlo estimates of the upward and downward two-sided exit transforms.
pub fn simulate_exit(model: &LevyModel, x: f64, b: f64, cfg: &SimConfig) -> Result<(SimResult, SimResult)> {
    cfg.validate()?;
    if !(x >= 0.0 && x <= b) || !b.is_finite() {
        return Err(Error::Domain(format!("need 0 <= x <= b (x = {x}, b = {b})")));
    }
    let sampler = PhaseTypeSampler::new(model.jumps());
    let horizon = cfg.horizon(model.q());
    let samples = map_indexed(cfg.execution, cfg.paths, |i| {
        Path { model, jumps: &sampler, rng: path_rng(cfg.seed, i), horizon, dt: cfg.dt }.exit(x, b)
    });
    let up: Vec<(f64, bool)> = samples.iter().map(|s| (s.0 .0, s.1)).collect();
    let down: Vec<(f64, bool)> = samples.iter().map(|s| (s.0 .1, s.1)).collect();
    Ok((SimResult::from_samples(&up, cfg.seed), SimResult::from_samples(&down, cfg.seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::policy::vbar;
    use crate::scale::ScaleBasis;
    use nalgebra::DVector;

    fn draws(dist: &PhaseTypeDist, n: usize, seed: u64) -> Vec<f64> {
        let s = PhaseTypeSampler::new(dist);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| s.sample(&mut rng)).collect()
    }

    #[test]
    fn exponential_sample_mean() {
        let dist = PhaseTypeDist::exponential(2.0).unwrap();
        let xs = draws(&dist, 1_000_000, 1);
        let mean = pairwise_sum(&xs) / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    #[test]
    fn weibull_distribution_mean_and_cdf() {
        let dist = weibull_ph();
        let mut xs = draws(&dist, 1_000_000, 2);
        let mean = pairwise_sum(&xs) / xs.len() as f64;
        assert!((mean - dist.mean()).abs() < 0.01 * dist.mean(), "{mean} vs {}", dist.mean());

        xs.sort_by(f64::total_cmp);
        let ones = DVector::from_element(6, 1.0);
        for x in [0.4, 0.9, 1.5] {
            let tail = (dist.alpha().transpose() * (dist.sub_generator() * x).exp() * &ones)[(0, 0)];
            let cdf = 1.0 - tail;
            let emp = xs.partition_point(|&v| v <= x) as f64 / xs.len() as f64;
            assert!((emp - cdf).abs() < 0.01 * cdf, "x={x}: {emp} vs {cdf}");
        }
    }

    #[test]
    fn mass_deficit_is_an_atom_at_zero() {
        let dist = PhaseTypeDist::new(vec![0.4], nalgebra::DMatrix::from_element(1, 1, -1.0)).unwrap();
        let xs = draws(&dist, 200_000, 3);
        let zeros = xs.iter().filter(|&&v| v == 0.0).count() as f64 / xs.len() as f64;
        assert!((zeros - 0.6).abs() < 0.005, "{zeros}");
    }

    #[test]
    fn config_is_validated() {
        let m = exp_jump_model();
        let pol = Policy::new(0.0, 1.0).unwrap();
        for cfg in [
            SimConfig { paths: 0, ..Default::default() },
            SimConfig { dt: 0.0, ..Default::default() },
            SimConfig { discount_floor: 1.0, ..Default::default() },
        ] {
            assert!(matches!(simulate_value(&m, pol, 1.0, 0.5, &cfg), Err(Error::Config(_))));
        }
        let cfg = SimConfig { paths: 10, ..Default::default() };
        assert!(matches!(simulate_value(&m, pol, 1.0, -1.0, &cfg), Err(Error::Domain(_))));
        assert!(matches!(simulate_exit(&m, 3.0, 2.0, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn untriggered_policy_pays_nothing() {
        let m = weibull_model(2.0, 0.0, 3.0);
        let pol = Policy::new(0.0, 1e9).unwrap();
        let r = simulate_value(&m, pol, 4.0, 1.0, &SimConfig { paths: 2000, ..Default::default() }).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn value_at_reset_level_matches_vbar() {
        let m = exp_jump_model();
        let b = ScaleBasis::find_roots(&m).unwrap();
        let (c1, c2, beta) = (1.0, 4.0, 0.5);
        let target = vbar(&b, beta, c1, c2).unwrap();
        let cfg = SimConfig { paths: 100_000, seed: 7, ..Default::default() };
        let r = simulate_value(&m, Policy::new(c1, c2).unwrap(), beta, c1, &cfg).unwrap();
        assert!(r.agrees_with(target, 3.0), "{r:?} vs {target}");
        assert!(r.std_error > 0.0);
    }

    #[test]
    fn exit_from_zero_is_immediate_ruin() {
        let m = exp_jump_model();
        let (up, down) = simulate_exit(&m, 0.0, 2.0, &SimConfig { paths: 1000, ..Default::default() }).unwrap();
        assert_eq!(up.mean, 0.0);
        assert_eq!(down.mean, 1.0);
    }

    #[test]
    fn exit_estimates_match_scale_identities() {
        let m = exp_jump_model();
        let b = ScaleBasis::find_roots(&m).unwrap();
        let cfg = SimConfig { paths: 100_000, seed: 11, ..Default::default() };
        let (up, down) = simulate_exit(&m, 1.0, 2.0, &cfg).unwrap();
        let (eu, ed) = (b.exit_up(1.0, 2.0).unwrap(), b.exit_down(1.0, 2.0).unwrap());
        assert!(up.agrees_with(eu, 3.0), "{up:?} vs {eu}");
        assert!(down.agrees_with(ed, 3.0), "{down:?} vs {ed}");
        assert!(up.mean > 0.0 && up.mean < 1.0 && down.mean > 0.0 && down.mean < 1.0);
        assert!(up.mean + down.mean <= 1.0 + 3.0 * (up.std_error + down.std_error));
    }

    #[test]
    fn diffusive_exit_is_close_for_small_steps() {
        let m = weibull_model(2.0, 1.0, 3.0);
        let b = ScaleBasis::find_roots(&m).unwrap();
        let cfg = SimConfig { paths: 20_000, seed: 5, dt: 1e-3, ..Default::default() };
        let (up, down) = simulate_exit(&m, 1.0, 2.0, &cfg).unwrap();
        // discrete monitoring misses crossings, an O(sqrt(dt)) bias
        assert!((up.mean - b.exit_up(1.0, 2.0).unwrap()).abs() < 0.05, "{up:?}");
        assert!((down.mean - b.exit_down(1.0, 2.0).unwrap()).abs() < 0.05, "{down:?}");
    }

    #[test]
    fn reproducible_across_execution_modes() {
        let m = weibull_model(2.0, 0.0, 3.0);
        let pol = Policy::new(2.0, 12.0).unwrap();
        let cfg = SimConfig { paths: 5000, seed: 42, ..Default::default() };
        let a = simulate_value(&m, pol, 4.0, 5.0, &cfg).unwrap();
        let b = simulate_value(&m, pol, 4.0, 5.0, &cfg).unwrap();
        let c = simulate_value(&m, pol, 4.0, 5.0, &SimConfig { execution: Execution::Sequential, ..cfg.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean.to_bits(), c.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), c.std_error.to_bits());
        let d = simulate_value(&m, pol, 4.0, 5.0, &SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.mean, d.mean);
    }

    #[test]
    fn trigger_above_start_pays_immediately() {
        let m = exp_jump_model();
        let pol = Policy::new(0.0, 1.0).unwrap();
        let r = simulate_value(&m, pol, 0.5, 3.0, &SimConfig { paths: 100, ..Default::default() }).unwrap();
        // pays 3 - 0 - 0.5 at once, then is ruined from zero
        assert_eq!(r.mean, 2.5);
    }
}
