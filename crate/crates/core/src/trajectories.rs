//! Quantum-jump Monte Carlo unraveling with channel-resolved photon counts.
//!
//! Each trajectory carries an unnormalized pure state evolved under
//! `H_eff = H − (i/2) Γ σ⁺σ⁻`. A jump happens when the squared norm falls to
//! a uniform threshold drawn after the previous jump (waiting-time method);
//! the crossing is located by bisection inside the step and the emitting
//! channel is drawn proportionally to the channel rates. All channels share
//! the jump operator `σ⁻`, so the post-jump state is always `|g⟩`.
//!
//! Once the drive is off for the rest of the window the norm decay is
//! `|c_g|² + |c_e|² e^{−Γs}`, and the remaining (at most one) jump is
//! resolved in closed form.
//!
//! Seeding: trajectory `i` uses `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(i)`, so results do not depend on how trajectories are split
//! across threads.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::counting::PhotonStats;
use crate::error::{Error, Result};
use crate::liouville::{DriveSpec, Operator2};

/// Upper bound on the trajectory step.
pub const MAX_STEP: f64 = 0.005;
/// Target bound on `rate · step`.
pub const RATE_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-9;
const BISECTION_ITERS: usize = 60;

/// Histogram of monitored-channel counts over `n_traj` trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub n_traj: u64,
    /// `counts[n]`: trajectories with exactly `n` monitored jumps.
    pub counts: Vec<u64>,
    /// Total jumps per channel, monitored channel first.
    pub channel_jumps: Vec<u64>,
    pub seed: u64,
}

impl TrajectoryResult {
    pub fn p_hat(&self, n: usize) -> f64 {
        self.counts.get(n).copied().unwrap_or(0) as f64 / self.n_traj as f64
    }

    /// Binomial standard error of `p_hat(n)`.
    pub fn stderr(&self, n: usize) -> f64 {
        let p = self.p_hat(n);
        (p * (1.0 - p) / self.n_traj as f64).sqrt()
    }

    /// Mean jumps per trajectory for every channel.
    pub fn per_channel_totals(&self) -> Vec<f64> {
        self.channel_jumps.iter().map(|&c| c as f64 / self.n_traj as f64).collect()
    }

    pub fn mean_monitored(&self) -> f64 {
        self.per_channel_totals()[0]
    }

    /// Standard error of the mean monitored count.
    pub fn mean_stderr(&self) -> f64 {
        let mean = self.mean_monitored();
        let second =
            self.counts.iter().enumerate().map(|(n, &c)| (n * n) as f64 * c as f64).sum::<f64>() / self.n_traj as f64;
        ((second - mean * mean).max(0.0) / self.n_traj as f64).sqrt()
    }

    /// z-score of bin `n` against model probability `p`.
    pub fn z_score(&self, n: usize, p: f64) -> f64 {
        binomial_z(self.counts.get(n).copied().unwrap_or(0), self.n_traj, p)
    }

    /// Per-bin z-scores against a master-equation distribution, over the union of bins.
    pub fn compare(&self, stats: &PhotonStats<f64>) -> Vec<f64> {
        let bins = self.counts.len().max(stats.probabilities.len());
        (0..bins).map(|n| self.z_score(n, stats.p(n))).collect()
    }
}

/// `(count/n − p) / σ` with `σ² = max(p(1−p), 1/n) / n`.
pub fn binomial_z(count: u64, n_traj: u64, p: f64) -> f64 {
    let n = n_traj as f64;
    let p = p.clamp(0.0, 1.0);
    let var = (p * (1.0 - p)).max(1.0 / n) / n;
    (count as f64 / n - p) / var.sqrt()
}

#[derive(Clone, Debug)]
struct Step {
    h: f64,
    /// `−i H_eff`
    gen: Operator2<f64>,
    /// `exp(−i H_eff h)`
    prop: Operator2<f64>,
}

#[derive(Clone, Debug)]
struct Schedule {
    steps: Vec<Step>,
    tail: f64,
    decay: f64,
    channel_rates: Vec<f64>,
    initial: [Complex<f64>; 2],
}

/// Trajectory step `min(0.005, 0.1 / max rate)`, where the maximum rate is the
/// largest of the decay rate, the peak Rabi frequency and the detuning.
pub fn trajectory_step(spec: &DriveSpec<f64>) -> Result<f64> {
    let topo = &spec.topology;
    let rabi = 2.0 * topo.drive_coupling(spec.envelope.max_flux());
    let rate = topo.total_decay().max(rabi).max(topo.detuning().abs());
    let h = MAX_STEP.min(RATE_STEP / rate);
    if !(h >= MIN_STEP) {
        return Err(Error::StepUnderflow { step: h, rate });
    }
    Ok(h)
}

fn schedule(spec: &DriveSpec<f64>) -> Result<Schedule> {
    spec.validate()?;
    let h = trajectory_step(spec)?;
    let decay = spec.topology.total_decay();
    let t_end = spec.t_end();
    let pulse_end = spec.envelope.pulse_end().min(t_end);
    let damping = Operator2::proj_excited().scale(Complex::new(0.0, -0.5 * decay));
    let mut steps = Vec::new();
    let mut cuts: Vec<f64> = spec.breakpoints().into_iter().filter(|&t| t < pulse_end).collect();
    cuts.push(pulse_end);
    cuts.dedup();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        let hs = (b - a) / n as f64;
        let mut cached: Option<Step> = None;
        for s in 0..n {
            let mid = a + (s as f64 + 0.5) * hs;
            let flux = spec.envelope.flux_on_segment(a, b, mid).max(0.0);
            let heff = spec.hamiltonian(flux) + damping;
            let gen = heff.scale(Complex::new(0.0, -1.0));
            let step = match &cached {
                Some(c) if c.gen == gen => c.clone(),
                _ => Step { h: hs, gen, prop: gen.scale(Complex::new(hs, 0.0)).exp() },
            };
            cached = Some(step.clone());
            steps.push(step);
        }
    }
    let channel_rates = spec.topology.channels().into_iter().map(|(r, _)| r).collect();
    Ok(Schedule { steps, tail: t_end - pulse_end, decay, channel_rates, initial: spec.initial.amplitudes() })
}

#[inline]
fn norm_sqr(psi: &[Complex<f64>; 2]) -> f64 {
    psi[0].norm_sqr() + psi[1].norm_sqr()
}

fn pick_channel(rng: &mut ChaCha8Rng, rates: &[f64]) -> usize {
    let total: f64 = rates.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &r) in rates.iter().enumerate() {
        acc += r;
        if u < acc {
            return i;
        }
    }
    rates.len() - 1
}

/// Jumps per channel for one trajectory.
fn run_one(sched: &Schedule, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut jumps = vec![0u32; sched.channel_rates.len()];
    let ground = [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
    let mut psi = sched.initial;
    let mut threshold: f64 = rng.gen();
    for step in &sched.steps {
        let mut remaining = step.h;
        loop {
            let next = if remaining == step.h {
                step.prop.apply(psi)
            } else {
                step.gen.scale(Complex::new(remaining, 0.0)).exp().apply(psi)
            };
            if norm_sqr(&next) > threshold {
                psi = next;
                break;
            }
            let (mut lo, mut hi) = (0.0, remaining);
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (lo + hi);
                let trial = step.gen.scale(Complex::new(mid, 0.0)).exp().apply(psi);
                if norm_sqr(&trial) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * step.h {
                    break;
                }
            }
            jumps[pick_channel(rng, &sched.channel_rates)] += 1;
            psi = ground;
            threshold = rng.gen();
            remaining -= hi;
            if remaining <= 0.0 {
                break;
            }
        }
    }
    // Undriven tail: at most one more emission.
    let pg = psi[0].norm_sqr();
    let pe = psi[1].norm_sqr();
    if pe > 0.0 && pg + pe * (-sched.decay * sched.tail).exp() <= threshold {
        jumps[pick_channel(rng, &sched.channel_rates)] += 1;
    }
    jumps
}

/// Runs `n_traj` trajectories with per-trajectory streams derived from `seed`.
/// Uses the current rayon pool; the result is independent of its size.
pub fn sample_trajectories(spec: &DriveSpec<f64>, n_traj: u64, seed: u64) -> Result<TrajectoryResult> {
    if n_traj == 0 {
        return Err(Error::InvalidSpec("n_traj must be >= 1".into()));
    }
    let sched = schedule(spec)?;
    let channels = sched.channel_rates.len();
    let merge = |mut a: (Vec<u64>, Vec<u64>), b: (Vec<u64>, Vec<u64>)| {
        if a.0.len() < b.0.len() {
            a.0.resize(b.0.len(), 0);
        }
        for (x, y) in a.0.iter_mut().zip(&b.0) {
            *x += y;
        }
        for (x, y) in a.1.iter_mut().zip(&b.1) {
            *x += y;
        }
        a
    };
    let (counts, channel_jumps) = (0..n_traj)
        .into_par_iter()
        .fold(
            || (Vec::new(), vec![0u64; channels]),
            |mut acc: (Vec<u64>, Vec<u64>), i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                let jumps = run_one(&sched, &mut rng);
                let n = jumps[0] as usize;
                if acc.0.len() <= n {
                    acc.0.resize(n + 1, 0);
                }
                acc.0[n] += 1;
                for (t, j) in acc.1.iter_mut().zip(&jumps) {
                    *t += *j as u64;
                }
                acc
            },
        )
        .reduce(|| (Vec::new(), vec![0u64; channels]), merge);
    Ok(TrajectoryResult { n_traj, counts, channel_jumps, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{InitialState, Topology};

    fn undriven_excited() -> DriveSpec<f64> {
        DriveSpec::<f64>::square(Topology::single(), 0.1, 0.0)
            .unwrap()
            .with_window_end(20.0)
            .unwrap()
            .with_initial(InitialState::Excited)
    }

    #[test]
    fn fair_coin_emission() {
        let r = sample_trajectories(&undriven_excited(), 100_000, 7).unwrap();
        assert_eq!(r.counts.iter().sum::<u64>(), 100_000);
        let sigma = (0.25f64 / 1e5).sqrt();
        assert!((r.p_hat(0) - 0.5).abs() < 3.0 * sigma);
        assert!((r.p_hat(1) - 0.5).abs() < 3.0 * sigma);
        assert_eq!(r.counts.len(), 2);
        // every trajectory emits exactly once in total
        assert_eq!(r.channel_jumps.iter().sum::<u64>(), 100_000);
    }

    #[test]
    fn vacuum_never_clicks() {
        let spec = DriveSpec::<f64>::square(Topology::two_line(0.3), 0.5, 0.0).unwrap();
        let r = sample_trajectories(&spec, 1000, 1).unwrap();
        assert_eq!(r.counts, vec![1000]);
        assert_eq!(r.channel_jumps, vec![0, 0]);
    }

    #[test]
    fn reproducible_for_any_pool_size() {
        let spec = DriveSpec::<f64>::square(Topology::single(), 0.5, 20.0).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_trajectories(&spec, 5000, 42).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a, run(8));
        assert_ne!(a, sample_trajectories(&spec, 5000, 43).unwrap());
    }

    #[test]
    fn z_score_floor() {
        assert_eq!(binomial_z(50, 100, 0.5), 0.0);
        assert!((binomial_z(1, 100_000, 1e-7) - 0.99).abs() < 1e-9);
        assert!(binomial_z(0, 100, 0.0) == 0.0);
    }

    #[test]
    fn step_underflow_is_reported() {
        let spec = DriveSpec::<f64>::square(Topology::single(), 1e-12, 1e12).unwrap();
        assert!(matches!(sample_trajectories(&spec, 1, 0), Err(Error::StepUnderflow { .. })));
    }
}
