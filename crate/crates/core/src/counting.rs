//! Photon-number statistics of the monitored output channel.
//!
//! Two independent routes to `P_n`:
//!
//! * **moment inversion**: binomial moments `N_m` (ordered-simplex integrals
//!   of the time-ordered correlators `G⁽ᵐ⁾`) from the auxiliary hierarchy
//!   `μ̇_m = L μ_m + n̂ μ_{m−1}`, `N_m = tr μ_m(t_end)`, then
//!   `P_n = Σ_{m≥n} (−1)^{m−n} C(m, n) N_m`;
//! * **jump counting**: `ρ̇_n = (L − n̂) ρ_n + n̂ ρ_{n−1}`, `P_n = tr ρ_n(t_end)`.
//!
//! Both hierarchies are block lower-triangular Toeplitz systems. On segments
//! with a constant generator they are propagated exactly with one block
//! exponential per run of identical segments.

use num_complex::Complex;
use num_traits::Num;

use crate::error::{Error, Result};
use crate::linalg::{expm, BlockToeplitz, CMatrix};
use crate::liouville::liouvillian_at_flux;
use crate::liouville::{jump_superop, vec_trace, vectorize, DriveSpec, SuperOp};
use crate::propagator::{default_step, rk4_step, segment_propagators, PropagatorGrid, SegmentGenerator};
use crate::scalar::{cz, Real};

/// Negative probabilities down to this value are treated as roundoff and clamped.
pub const CLAMP_TOL: f64 = 1e-9;
/// Allowed deficit of `Σ P_n` below one.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Step-halving tolerance for hierarchies on time-dependent segments.
pub const HIERARCHY_TOL: f64 = 1e-8;

/// Which route produced a [`PhotonStats`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    MomentInversion,
    JumpCounting,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MomentInversion => "moments",
            Method::JumpCounting => "counting",
        }
    }
}

/// Photon-number distribution of the monitored channel over the counting window.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonStats<T> {
    /// `N_1..N_k`
    pub moments: Vec<T>,
    /// `P_0..P_k`
    pub probabilities: Vec<T>,
    pub cutoff_k: usize,
    /// `C(k, ⌊k/2⌋) N_k` for moment inversion, which bounds both the mass
    /// beyond `k` and the effect of higher moments on each `P_n`;
    /// `1 − Σ P_n` for jump counting.
    pub tail_bound: T,
    pub method: Method,
}

impl<T: Real> PhotonStats<T> {
    pub fn p(&self, n: usize) -> T {
        self.probabilities.get(n).copied().unwrap_or(T::zero())
    }

    /// `N_m` with `N_0 = 1`; zero beyond the cutoff.
    pub fn n(&self, m: usize) -> T {
        if m == 0 {
            T::one()
        } else {
            self.moments.get(m - 1).copied().unwrap_or(T::zero())
        }
    }

    pub fn total(&self) -> T {
        self.probabilities.iter().fold(T::zero(), |a, &p| a + p)
    }

    /// Largest `|Σ_n C(n, m) P_n − N_m|` over `m = 1..k`.
    pub fn moment_round_trip_error(&self) -> T {
        let recomputed = binomial_moments_of(&self.probabilities);
        self.moments.iter().zip(recomputed.iter().skip(1)).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
    }
}

/// Cutoff policy: start at `start`, raise by `step` up to `max` until the
/// tail estimate drops below `threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffPolicy {
    pub start: usize,
    pub step: usize,
    pub max: usize,
    pub threshold: f64,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self { start: 4, step: 4, max: 24, threshold: 1e-8 }
    }
}

impl CutoffPolicy {
    /// Fixed cutoff with no tail requirement.
    pub fn fixed(k: usize) -> Self {
        Self { start: k, step: 1, max: k, threshold: f64::INFINITY }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Hierarchy {
    Moments,
    Counting,
}

fn block_generator<T: Real>(l: &SuperOp<T>, jump: &SuperOp<T>, levels: usize, kind: Hierarchy) -> BlockToeplitz<T> {
    let diag = match kind {
        Hierarchy::Moments => l.matrix().clone(),
        Hierarchy::Counting => l.matrix().sub(jump.matrix()),
    };
    let mut blocks = vec![CMatrix::zeros(4); levels];
    blocks[0] = diag;
    if levels > 1 {
        blocks[1] = jump.matrix().clone();
    }
    BlockToeplitz::new(blocks)
}

/// Final hierarchy state `[x_0, …, x_{levels−1}](t_end)`; RK4 substeps on
/// time-dependent segments are multiplied by `refine`.
fn run_hierarchy<T: Real>(
    grid: &PropagatorGrid<T>,
    jump: &SuperOp<T>,
    levels: usize,
    kind: Hierarchy,
    refine: usize,
) -> Vec<Vec<Complex<T>>> {
    let mut x = vec![vec![cz(); 4]; levels];
    x[0] = vectorize(grid.states()[0].as_op()).to_vec();
    let times = grid.times();
    let gens = grid.generators();
    let spec = grid.spec();
    let mut j = 0;
    while j < gens.len() {
        match &gens[j] {
            SegmentGenerator::Constant(l) => {
                let mut end = j + 1;
                while end < gens.len() && matches!(&gens[end], SegmentGenerator::Constant(m) if m == l) {
                    end += 1;
                }
                let len = times[end] - times[j];
                let mut gen = block_generator(l, jump, levels, kind);
                crate::linalg::MatrixAlgebra::scale(&mut gen, len);
                x = expm(&gen).apply(&x);
                j = end;
            }
            SegmentGenerator::Varying { substeps } => {
                let (a, b) = (times[j], times[j + 1]);
                let n = substeps * refine;
                let h = (b - a) / T::from_usize_lossy(n);
                let jm = jump.matrix();
                let mut flat: Vec<Complex<T>> = x.concat();
                for s in 0..n {
                    let t = a + h * T::from_usize_lossy(s);
                    rk4_step(&mut flat, t, h, |tt, y, dy| {
                        let l = liouvillian_at_flux(spec, spec.envelope.flux_on_segment(a, b, tt).max(T::zero()));
                        let lm = l.matrix();
                        for lev in 0..levels {
                            for i in 0..4 {
                                let mut acc = cz();
                                for k in 0..4 {
                                    acc = acc + lm[(i, k)] * y[lev * 4 + k];
                                    if kind == Hierarchy::Counting {
                                        acc = acc - jm[(i, k)] * y[lev * 4 + k];
                                    }
                                    if lev > 0 {
                                        acc = acc + jm[(i, k)] * y[(lev - 1) * 4 + k];
                                    }
                                }
                                dy[lev * 4 + i] = acc;
                            }
                        }
                    });
                }
                x = flat.chunks(4).map(|c| c.to_vec()).collect();
                j += 1;
            }
        }
    }
    x
}

fn hierarchy_traces<T: Real>(
    grid: &PropagatorGrid<T>,
    jump: &SuperOp<T>,
    levels: usize,
    kind: Hierarchy,
) -> Result<Vec<T>> {
    let traces = |refine| -> Vec<T> {
        run_hierarchy(grid, jump, levels, kind, refine).iter().map(|v| vec_trace(v).re).collect()
    };
    let varying = grid.generators().iter().any(|g| matches!(g, SegmentGenerator::Varying { .. }));
    let mut result = traces(1);
    if varying {
        let mut refine = 1;
        loop {
            let finer = traces(2 * refine);
            let diff = result.iter().zip(&finer).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
            result = finer;
            refine *= 2;
            if diff <= T::lit(HIERARCHY_TOL) {
                break;
            }
            if refine > 64 {
                return Err(Error::NotConverged(format!("hierarchy change {diff} under step halving")));
            }
        }
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("hierarchy trace".into()));
    }
    Ok(result)
}

/// Binomial moments `N_1..N_k` of the channel monitored by `jump`.
pub fn binomial_moments<T: Real>(grid: &PropagatorGrid<T>, jump: &SuperOp<T>, k: usize) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::InvalidSpec("moment cutoff k must be >= 1".into()));
    }
    let tr = hierarchy_traces(grid, jump, k + 1, Hierarchy::Moments)?;
    Ok(tr[1..].to_vec())
}

/// `P_0..P_{n_max}` from the jump-resolved counting hierarchy.
pub fn counting_distribution<T: Real>(grid: &PropagatorGrid<T>, jump: &SuperOp<T>, n_max: usize) -> Result<Vec<T>> {
    if n_max == 0 {
        return Err(Error::InvalidSpec("counting cutoff n_max must be >= 1".into()));
    }
    let mut p = hierarchy_traces(grid, jump, n_max + 1, Hierarchy::Counting)?;
    let total = p.iter().fold(T::zero(), |a, &x| a + x);
    if total < T::one() - T::lit(NORMALIZATION_TOL) {
        return Err(Error::CutoffInsufficient {
            k: n_max,
            detail: format!("counted probability {total} below 1 - {NORMALIZATION_TOL:e}"),
        });
    }
    clamp_probabilities(&mut p)?;
    Ok(p)
}

/// Time-ordered correlator `G⁽ᵐ⁾(t_1, …, t_m) = tr[n̂ P(t_m,t_{m−1}) ⋯ n̂ P(t_2,t_1) n̂ ρ(t_1)]`.
pub fn correlator<T: Real>(grid: &PropagatorGrid<T>, jump: &SuperOp<T>, times: &[T]) -> Result<T> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("correlator needs at least one time".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidTimes("correlator times must be non-decreasing".into()));
    }
    let rho = grid.state_at(times[0])?;
    let mut x = jump.apply_vec(&vectorize(rho.as_op()));
    for w in times.windows(2) {
        x = jump.apply_vec(&grid.propagate_vec(x, w[0], w[1])?);
    }
    Ok(vec_trace(&x).re)
}

/// `N_1` and `N_2` by literal trapezoidal quadrature of `G⁽¹⁾` and `G⁽²⁾`
/// over the grid, nested over `t_1 ≤ t_2`. Independent of the hierarchy;
/// accurate to `O(h²)`.
pub fn simplex_quadrature<T: Real>(grid: &PropagatorGrid<T>, jump: &SuperOp<T>) -> (T, T) {
    let times = grid.times();
    let m = times.len();
    let half = T::lit(0.5);
    let trapezoid = |vals: &[T], offset: usize| -> T {
        vals.windows(2)
            .enumerate()
            .fold(T::zero(), |acc, (i, w)| acc + (w[0] + w[1]) * half * (times[offset + i + 1] - times[offset + i]))
    };
    let g1: Vec<T> = grid.states().iter().map(|r| vec_trace(&jump.apply_vec(&vectorize(r.as_op()))).re).collect();
    let n1 = trapezoid(&g1, 0);
    let mut inner = vec![T::zero(); m];
    for i in 0..m {
        let mut x = jump.apply_vec(&vectorize(grid.states()[i].as_op()));
        let mut vals = Vec::with_capacity(m - i);
        vals.push(vec_trace(&jump.apply_vec(&x)).re);
        for seg in &grid.segments()[i..] {
            x = seg.apply_vec(&x);
            vals.push(vec_trace(&jump.apply_vec(&x)).re);
        }
        inner[i] = trapezoid(&vals, i);
    }
    (n1, trapezoid(&inner, 0))
}

/// Exact inclusion–exclusion `P_n = Σ_{m=n}^{k} (−1)^{m−n} C(m, n) N_m`,
/// `N_0 = 1`, for any numeric type (floats or rationals).
pub fn invert_binomial_moments<R: Num + Clone>(moments: &[R]) -> Vec<R> {
    let k = moments.len();
    let n_m = |m: usize| if m == 0 { R::one() } else { moments[m - 1].clone() };
    let binom = pascal::<R>(k);
    (0..=k)
        .map(|n| {
            let mut acc = R::zero();
            for m in n..=k {
                let term = binom[m][n].clone() * n_m(m);
                if (m - n) % 2 == 0 {
                    acc = acc + term;
                } else {
                    acc = acc - term;
                }
            }
            acc
        })
        .collect()
}

/// `Σ_{n ≥ m} C(n, m) P_n` for `m = 0..=k`.
pub fn binomial_moments_of<R: Num + Clone>(probabilities: &[R]) -> Vec<R> {
    let k = probabilities.len().saturating_sub(1);
    let binom = pascal::<R>(k);
    (0..=k).map(|m| (m..=k).fold(R::zero(), |acc, n| acc + binom[n][m].clone() * probabilities[n].clone())).collect()
}

fn pascal<R: Num + Clone>(k: usize) -> Vec<Vec<R>> {
    let mut rows: Vec<Vec<R>> = Vec::with_capacity(k + 1);
    for m in 0..=k {
        let mut row = vec![R::one(); m + 1];
        for n in 1..m {
            row[n] = rows[m - 1][n - 1].clone() + rows[m - 1][n].clone();
        }
        rows.push(row);
    }
    rows
}

fn clamp_probabilities<T: Real>(p: &mut [T]) -> Result<()> {
    for (n, v) in p.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("P_{n}")));
        }
        if *v < T::zero() {
            if *v < -T::lit(CLAMP_TOL) {
                return Err(Error::NegativeProbability { n, value: v.to_f64_lossy() });
            }
            *v = T::zero();
        }
    }
    Ok(())
}

fn central_binomial(k: usize) -> f64 {
    (1..=k / 2).fold(1.0, |acc, i| acc * (k + 1 - i) as f64 / i as f64)
}

/// Floating-point inversion with clamping of roundoff-level negatives.
pub fn invert_moments<T: Real>(moments: &[T]) -> Result<Vec<T>> {
    let mut p = invert_binomial_moments(moments);
    clamp_probabilities(&mut p)?;
    Ok(p)
}

/// Moment-inversion statistics on a prepared grid under a cutoff policy.
///
/// A cutoff is accepted once `C(k, ⌊k/2⌋) N_k`, which bounds the effect of the
/// first omitted moments on every `P_n`, is below the threshold and the
/// inversion yields no negative probability beyond [`CLAMP_TOL`]; otherwise
/// `k` is raised.
pub fn moment_stats<T: Real>(
    grid: &PropagatorGrid<T>,
    jump: &SuperOp<T>,
    policy: CutoffPolicy,
) -> Result<PhotonStats<T>> {
    let mut k = policy.start.max(1);
    loop {
        let moments = binomial_moments(grid, jump, k)?;
        let tail = moments[k - 1].abs();
        let spread = tail.to_f64_lossy() * central_binomial(k);
        let last = k >= policy.max;
        let small_tail = spread < policy.threshold;
        if small_tail || last {
            if !small_tail {
                return Err(Error::CutoffInsufficient {
                    k,
                    detail: format!("C({k}, {}) N_{k} = {spread:e} not below {:e}", k / 2, policy.threshold),
                });
            }
            match invert_moments(&moments) {
                Ok(probabilities) => {
                    let stats = PhotonStats {
                        moments,
                        probabilities,
                        cutoff_k: k,
                        tail_bound: T::lit(spread),
                        method: Method::MomentInversion,
                    };
                    let total = stats.total();
                    if (total - T::one()).abs() > T::lit(NORMALIZATION_TOL) {
                        return Err(Error::CutoffInsufficient { k, detail: format!("sum of P_n = {total}") });
                    }
                    return Ok(stats);
                }
                Err(e @ Error::NegativeProbability { .. }) if last => return Err(e),
                Err(Error::NegativeProbability { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        k = (k + policy.step.max(1)).min(policy.max);
    }
}

/// Jump-counting statistics on a prepared grid under a cutoff policy.
pub fn counting_stats<T: Real>(
    grid: &PropagatorGrid<T>,
    jump: &SuperOp<T>,
    policy: CutoffPolicy,
) -> Result<PhotonStats<T>> {
    let mut k = policy.start.max(1);
    loop {
        let raw = hierarchy_traces(grid, jump, k + 1, Hierarchy::Counting)?;
        let total = raw.iter().fold(T::zero(), |a, &x| a + x);
        let tail = (T::one() - total).max(T::zero());
        if tail.to_f64_lossy() < policy.threshold || k >= policy.max {
            let mut probabilities = raw;
            if tail > T::lit(NORMALIZATION_TOL) {
                return Err(Error::CutoffInsufficient {
                    k,
                    detail: format!("counted probability {total} below 1 - {NORMALIZATION_TOL:e}"),
                });
            }
            clamp_probabilities(&mut probabilities)?;
            let moments = binomial_moments_of(&probabilities)[1..].to_vec();
            return Ok(PhotonStats {
                moments,
                probabilities,
                cutoff_k: k,
                tail_bound: tail,
                method: Method::JumpCounting,
            });
        }
        k = (k + policy.step.max(1)).min(policy.max);
    }
}

/// Builds the default grid for `spec` and evaluates the requested method.
pub fn photon_stats<T: Real>(spec: &DriveSpec<T>, method: Method, policy: CutoffPolicy) -> Result<PhotonStats<T>> {
    let grid = segment_propagators(spec, default_step(spec))?;
    let jump = jump_superop(spec);
    match method {
        Method::MomentInversion => moment_stats(&grid, &jump, policy),
        Method::JumpCounting => counting_stats(&grid, &jump, policy),
    }
}

/// Both methods on one shared grid.
pub fn dual_stats<T: Real>(spec: &DriveSpec<T>, policy: CutoffPolicy) -> Result<(PhotonStats<T>, PhotonStats<T>)> {
    let grid = segment_propagators(spec, default_step(spec))?;
    let jump = jump_superop(spec);
    let moments = moment_stats(&grid, &jump, policy)?;
    let counting = counting_stats(&grid, &jump, CutoffPolicy::fixed(moments.cutoff_k))?;
    Ok((moments, counting))
}
