//! Time evolution of the master equation and segment propagators on a grid.
//!
//! Square pulses have a generator that is constant between breakpoints, so
//! each segment propagator is an exact matrix exponential. Sampled envelopes
//! are integrated with classical RK4 on the vectorized equation with a
//! step-halving check.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::liouville::{liouvillian_at_flux, vectorize, DensityMatrix, DriveSpec, SuperOp};
use crate::scalar::{cz, Real};

/// Target bound on `‖L‖·h` for RK4 substeps.
pub const RK4_NORM_STEP: f64 = 0.1;
/// Step-halving tolerance for RK4 segment propagators.
pub const RK4_TOL: f64 = 1e-9;
const RK4_MAX_DOUBLINGS: u32 = 16;

/// Default grid spacing `min(0.01, T/20)`.
pub fn default_step<T: Real>(spec: &DriveSpec<T>) -> T {
    let t_pulse = spec.envelope.pulse_end();
    let fine = if t_pulse > T::zero() { t_pulse / T::lit(20.0) } else { T::lit(0.01) };
    T::lit(0.01).min(fine)
}

/// How the generator behaves on one grid segment.
#[derive(Clone, Debug, PartialEq)]
pub enum SegmentGenerator<T> {
    /// `L` is constant on the segment and the propagator is `exp(L h)`.
    Constant(SuperOp<T>),
    /// Time-dependent `L`, integrated with this many RK4 substeps.
    Varying { substeps: usize },
}

/// Segment propagators `P(t_{j+1}, t_j)` and states `ρ(t_j)` on a time grid.
#[derive(Clone, Debug)]
pub struct PropagatorGrid<T> {
    spec: DriveSpec<T>,
    times: Vec<T>,
    generators: Vec<SegmentGenerator<T>>,
    segments: Vec<SuperOp<T>>,
    states: Vec<DensityMatrix<T>>,
}

/// Uniform subdivision of every breakpoint interval with spacing at most `step`.
pub fn grid_times<T: Real>(spec: &DriveSpec<T>, step: T) -> Result<Vec<T>> {
    if !(step > T::zero() && step.is_finite()) {
        return Err(Error::InvalidSpec(format!("grid step {step} must be > 0")));
    }
    let bps = spec.breakpoints();
    let mut times = vec![bps[0]];
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let n = (len / step - T::lit(1e-9)).ceil().max(T::one());
        let n = n.to_usize().ok_or_else(|| Error::InvalidSpec("grid too fine".into()))?;
        for i in 1..n {
            times.push(a + len * T::from_usize_lossy(i) / T::from_usize_lossy(n));
        }
        times.push(b);
    }
    Ok(times)
}

/// Builds the grid with spacing `step`, starting from `spec.initial`.
pub fn segment_propagators<T: Real>(spec: &DriveSpec<T>, step: T) -> Result<PropagatorGrid<T>> {
    spec.validate()?;
    let times = grid_times(spec, step)?;
    PropagatorGrid::on_times(spec, times)
}

impl<T: Real> PropagatorGrid<T> {
    /// Builds on caller-supplied times, which must run from 0 to `t_end` and
    /// contain every envelope breakpoint.
    pub fn on_times(spec: &DriveSpec<T>, times: Vec<T>) -> Result<Self> {
        spec.validate()?;
        check_times(spec, &times)?;
        let m = times.len() - 1;
        let mut generators = Vec::with_capacity(m);
        let mut segments: Vec<SuperOp<T>> = Vec::with_capacity(m);
        let constant = spec.envelope.is_piecewise_constant();
        let mut cache: Option<(SuperOp<T>, T, SuperOp<T>)> = None;
        for j in 0..m {
            let (a, b) = (times[j], times[j + 1]);
            let h = b - a;
            if constant {
                let l = generator_at(spec, (a + b) / T::lit(2.0))?;
                let seg = match &cache {
                    Some((cl, ch, cs)) if *cl == l && (*ch - h).abs() <= T::epsilon() * T::lit(8.0) * h => cs.clone(),
                    _ => l.exp_scaled(h),
                };
                cache = Some((l.clone(), h, seg.clone()));
                generators.push(SegmentGenerator::Constant(l));
                segments.push(seg);
            } else {
                let (seg, substeps) = rk4_adaptive(spec, a, b)?;
                generators.push(SegmentGenerator::Varying { substeps });
                segments.push(seg);
            }
        }
        let mut states = Vec::with_capacity(m + 1);
        let mut rho = spec.initial.density::<T>();
        states.push(rho);
        for seg in &segments {
            rho = DensityMatrix::restore(seg.apply(rho.as_op()));
            states.push(rho);
        }
        Ok(Self { spec: spec.clone(), times, generators, segments, states })
    }

    pub fn spec(&self) -> &DriveSpec<T> {
        &self.spec
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn segments(&self) -> &[SuperOp<T>] {
        &self.segments
    }

    pub fn generators(&self) -> &[SegmentGenerator<T>] {
        &self.generators
    }

    pub fn states(&self) -> &[DensityMatrix<T>] {
        &self.states
    }

    pub fn t_end(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// Index of the segment containing `t` (the last one for `t = t_end`).
    fn segment_index(&self, t: T) -> usize {
        let idx = self.times.partition_point(|&x| x <= t);
        idx.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// Propagator over a sub-interval of segment `j`.
    fn partial(&self, j: usize, from: T, to: T) -> Result<SuperOp<T>> {
        let h = to - from;
        if h <= T::zero() {
            return Ok(SuperOp::identity());
        }
        if from == self.times[j] && to == self.times[j + 1] {
            return Ok(self.segments[j].clone());
        }
        match &self.generators[j] {
            SegmentGenerator::Constant(l) => Ok(l.exp_scaled(h)),
            SegmentGenerator::Varying { substeps } => {
                let full = self.times[j + 1] - self.times[j];
                let n = (T::from_usize_lossy(*substeps) * h / full).ceil().max(T::one());
                Ok(rk4_superop(&self.spec, from, to, n.to_usize().unwrap_or(1)))
            }
        }
    }

    fn check_in_window(&self, t: T) -> Result<()> {
        if !(t >= T::zero() && t <= self.t_end()) {
            return Err(Error::InvalidTimes(format!("time {t} outside window [0, {}]", self.t_end())));
        }
        Ok(())
    }

    /// `P(t_b, t_a)` applied to a vectorized matrix.
    pub fn propagate_vec(&self, x: [Complex<T>; 4], t_a: T, t_b: T) -> Result<[Complex<T>; 4]> {
        self.check_in_window(t_a)?;
        self.check_in_window(t_b)?;
        if t_b < t_a {
            return Err(Error::InvalidTimes(format!("propagation backwards from {t_a} to {t_b}")));
        }
        let mut x = x;
        let mut t = t_a;
        while t < t_b {
            let j = self.segment_index(t);
            let end = self.times[j + 1].min(t_b);
            x = self.partial(j, t, end)?.apply_vec(&x);
            t = end;
        }
        Ok(x)
    }

    /// `P(t_b, t_a)` as a superoperator.
    pub fn propagator(&self, t_a: T, t_b: T) -> Result<SuperOp<T>> {
        let mut cols = Vec::with_capacity(4);
        for k in 0..4 {
            let mut e = [cz(); 4];
            e[k] = Complex::new(T::one(), T::zero());
            cols.push(self.propagate_vec(e, t_a, t_b)?);
        }
        Ok(SuperOp::from_matrix(CMatrix::from_fn(4, |i, j| cols[j][i])))
    }

    /// `ρ(t)` at an arbitrary time inside the window.
    pub fn state_at(&self, t: T) -> Result<DensityMatrix<T>> {
        self.check_in_window(t)?;
        let j = self.segment_index(t);
        let x = self.partial(j, self.times[j], t)?.apply_vec(&vectorize(self.states[j].as_op()));
        Ok(DensityMatrix::restore(crate::liouville::devectorize(&x)))
    }
}

fn check_times<T: Real>(spec: &DriveSpec<T>, times: &[T]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidTimes("grid needs at least two times".into()));
    }
    let t_end = spec.t_end();
    if times[0] != T::zero() {
        return Err(Error::InvalidTimes("grid must start at t = 0".into()));
    }
    let last = times[times.len() - 1];
    if (last - t_end).abs() > T::lit(1e-12) * t_end.max(T::one()) {
        return Err(Error::InvalidTimes(format!("grid ends at {last}, window ends at {t_end}")));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidTimes("grid times must be strictly increasing".into()));
        }
    }
    let slack = T::lit(1e-12) * t_end.max(T::one());
    for edge in spec.breakpoints() {
        let idx = times.partition_point(|&x| x <= edge);
        if idx == 0 || idx >= times.len() {
            continue;
        }
        let (a, b) = (times[idx - 1], times[idx]);
        if edge - a > slack && b - edge > slack {
            return Err(Error::GridMisaligned {
                edge: edge.to_f64_lossy(),
                start: a.to_f64_lossy(),
                end: b.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

fn generator_at<T: Real>(spec: &DriveSpec<T>, t: T) -> Result<SuperOp<T>> {
    crate::liouville::build_liouvillian(spec, t)
}

/// One RK4 step of `ẋ = f(t, x)` for a flat complex state.
pub(crate) fn rk4_step<T: Real, F>(x: &mut [Complex<T>], t: T, h: T, mut f: F)
where
    F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
{
    let n = x.len();
    let two = T::lit(2.0);
    let half = h / two;
    let mut k1 = vec![cz(); n];
    let mut k2 = vec![cz(); n];
    let mut k3 = vec![cz(); n];
    let mut k4 = vec![cz(); n];
    let mut tmp = vec![cz(); n];
    f(t, x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + k1[i] * half;
    }
    f(t + half, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + k2[i] * half;
    }
    f(t + half, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + k3[i] * h;
    }
    f(t + h, &tmp, &mut k4);
    let sixth = h / T::lit(6.0);
    for i in 0..n {
        x[i] = x[i] + (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * sixth;
    }
}

/// RK4 for `Ṗ = L(t) P` on `[a, b]` with `n` equal substeps, `P(a) = 1`.
pub(crate) fn rk4_superop<T: Real>(spec: &DriveSpec<T>, a: T, b: T, n: usize) -> SuperOp<T> {
    let h = (b - a) / T::from_usize_lossy(n);
    let mut p: Vec<Complex<T>> = CMatrix::<T>::identity(4).as_slice().to_vec();
    for s in 0..n {
        let t = a + h * T::from_usize_lossy(s);
        rk4_step(&mut p, t, h, |tt, x, dx| {
            let l = liouvillian_at_flux(spec, spec.envelope.flux_on_segment(a, b, tt).max(T::zero()));
            let lm = l.matrix();
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = cz();
                    for k in 0..4 {
                        acc = acc + lm[(i, k)] * x[k * 4 + j];
                    }
                    dx[i * 4 + j] = acc;
                }
            }
        });
    }
    SuperOp::from_matrix(CMatrix::from_fn(4, |i, j| p[i * 4 + j]))
}

/// Initial substep count with `‖L‖·h ≤ 0.1` on `[a, b]`.
pub(crate) fn initial_substeps<T: Real>(spec: &DriveSpec<T>, a: T, b: T) -> usize {
    let env = &spec.envelope;
    let flux = env.flux_on_segment(a, b, a).max(env.flux_on_segment(a, b, b));
    let norm = liouvillian_at_flux(spec, flux.max(T::zero())).norm1();
    let n = (norm * (b - a) / T::lit(RK4_NORM_STEP)).ceil().max(T::one());
    n.to_usize().unwrap_or(1)
}

/// RK4 propagator with step halving until successive results agree to [`RK4_TOL`].
fn rk4_adaptive<T: Real>(spec: &DriveSpec<T>, a: T, b: T) -> Result<(SuperOp<T>, usize)> {
    let mut n = initial_substeps(spec, a, b);
    let mut coarse = rk4_superop(spec, a, b, n);
    for _ in 0..RK4_MAX_DOUBLINGS {
        let fine = rk4_superop(spec, a, b, 2 * n);
        if fine.max_abs_diff(&coarse) <= T::lit(RK4_TOL) {
            return Ok((fine, 2 * n));
        }
        n *= 2;
        coarse = fine;
    }
    Err(Error::NotConverged(format!("segment [{a}, {b}] after {n} RK4 substeps")))
}

/// `P(t1, t0)` computed directly from breakpoint to breakpoint.
pub fn propagator_between<T: Real>(spec: &DriveSpec<T>, t0: T, t1: T) -> Result<SuperOp<T>> {
    if t1 < t0 {
        return Err(Error::InvalidTimes(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let mut cuts: Vec<T> = spec.envelope.breakpoints().into_iter().filter(|&t| t > t0 && t < t1).collect();
    cuts.insert(0, t0);
    cuts.push(t1);
    let mut p = SuperOp::identity();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let piece = if spec.envelope.is_piecewise_constant() {
            generator_at(spec, (a + b) / T::lit(2.0))?.exp_scaled(b - a)
        } else {
            rk4_adaptive(spec, a, b)?.0
        };
        p = piece.compose(&p);
    }
    Ok(p)
}

/// `ρ(t1)` from `ρ(t0) = rho0`, re-Hermitized and normalized.
pub fn evolve_state<T: Real>(spec: &DriveSpec<T>, rho0: &DensityMatrix<T>, t0: T, t1: T) -> Result<DensityMatrix<T>> {
    spec.validate()?;
    if t1 < t0 {
        return Err(Error::InvalidTimes(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    if t0 < T::zero() || t1 > spec.t_end() {
        return Err(Error::InvalidTimes(format!("[{t0}, {t1}] not inside [0, {}]", spec.t_end())));
    }
    let p = propagator_between(spec, t0, t1)?;
    Ok(DensityMatrix::restore(p.apply(rho0.as_op())))
}
