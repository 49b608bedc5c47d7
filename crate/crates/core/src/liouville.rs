//! Operators, superoperators and the master-equation generator for a
//! coherently driven two-level emitter in one or two transmission lines.
//!
//! Conventions used throughout the crate:
//!
//! * basis ordering `{|g⟩, |e⟩}`, so index 0 is the ground state;
//! * `σz = diag(−1, +1)`, `σ⁻ = |g⟩⟨e|` (entry `(0, 1)`), `σx = σ⁺ + σ⁻`;
//! * superoperators act on the column-stacked vectorization
//!   `vec(ρ) = (ρ₀₀, ρ₁₀, ρ₀₁, ρ₁₁)`, so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
//!
//! Time is measured in relaxation times: `1/γ` for a single line, and the
//! inverse decay rate into the strongly coupled line for the two-line setup.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{expm, CMatrix, MatrixAlgebra};
use crate::scalar::{c, cz, re, Real};

/// 2×2 complex matrix in the `{|g⟩, |e⟩}` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator2<T> {
    pub entries: [[Complex<T>; 2]; 2],
}

impl<T: Real> Operator2<T> {
    pub fn new(entries: [[Complex<T>; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn from_real(m: [[T; 2]; 2]) -> Self {
        Self::new([[re(m[0][0]), re(m[0][1])], [re(m[1][0]), re(m[1][1])]])
    }

    pub fn zero() -> Self {
        Self::new([[cz(); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::from_real([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    /// `σ⁻ = |g⟩⟨e|`
    pub fn sigma_minus() -> Self {
        Self::from_real([[T::zero(), T::one()], [T::zero(), T::zero()]])
    }

    /// `σ⁺ = |e⟩⟨g|`
    pub fn sigma_plus() -> Self {
        Self::from_real([[T::zero(), T::zero()], [T::one(), T::zero()]])
    }

    pub fn sigma_x() -> Self {
        Self::from_real([[T::zero(), T::one()], [T::one(), T::zero()]])
    }

    pub fn sigma_z() -> Self {
        Self::from_real([[-T::one(), T::zero()], [T::zero(), T::one()]])
    }

    /// `|g⟩⟨g|`
    pub fn proj_ground() -> Self {
        Self::from_real([[T::one(), T::zero()], [T::zero(), T::zero()]])
    }

    /// `|e⟩⟨e|`
    pub fn proj_excited() -> Self {
        Self::from_real([[T::zero(), T::zero()], [T::zero(), T::one()]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i][j]
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Self::new([[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex<T> {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let e = &self.entries;
        Self::new([[e[0][0] * s, e[0][1] * s], [e[1][0] * s, e[1][1] * s]])
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        *self * *rhs - *rhs * *self
    }

    #[inline]
    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        let e = &self.entries;
        [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]]
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        let mut m = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.entries[i][j] - rhs.entries[i][j]).norm());
            }
        }
        m
    }

    pub fn to_cmatrix(&self) -> CMatrix<T> {
        CMatrix::from_fn(2, |i, j| self.entries[i][j])
    }

    /// Closed-form exponential: with `A = τI + B`, `tr B = 0`, `B² = s²I`,
    /// `exp A = e^τ (cosh s · I + sinh(s)/s · B)`.
    pub fn exp(&self) -> Self {
        let two = T::lit(2.0);
        let tau = self.trace() / re(two);
        let b = *self - Self::identity().scale(tau);
        let s2 = b.entries[0][0] * b.entries[0][0] + b.entries[0][1] * b.entries[1][0];
        let s = s2.sqrt();
        let cosh = s.cosh();
        let sinhc = if s.norm() < T::lit(1e-4) {
            re(T::one()) + s2 / re(T::lit(6.0)) + s2 * s2 / re(T::lit(120.0))
        } else {
            s.sinh() / s
        };
        (Self::identity().scale(cosh) + b.scale(sinhc)).scale(tau.exp())
    }
}

impl<T: Real> Mul for Operator2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        Self::new([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl<T: Real> Add for Operator2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        Self::new([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl<T: Real> Sub for Operator2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(re(-T::one()))
    }
}

/// Column-stacked vectorization `(m₀₀, m₁₀, m₀₁, m₁₁)`.
pub fn vectorize<T: Real>(m: &Operator2<T>) -> [Complex<T>; 4] {
    let e = &m.entries;
    [e[0][0], e[1][0], e[0][1], e[1][1]]
}

/// Inverse of [`vectorize`].
pub fn devectorize<T: Real>(v: &[Complex<T>]) -> Operator2<T> {
    assert_eq!(v.len(), 4, "vectorized 2x2 matrix has four entries");
    Operator2::new([[v[0], v[2]], [v[1], v[3]]])
}

/// Tolerances for [`DensityMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const EIGEN_TOL: f64 = 1e-9;

/// Hermitian, unit-trace, positive semidefinite 2×2 state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<T>(Operator2<T>);

impl<T: Real> DensityMatrix<T> {
    pub fn new(m: Operator2<T>) -> Result<Self> {
        if m.max_abs_diff(&m.adjoint()) > T::lit(HERMITIAN_TOL) {
            return Err(Error::InvalidSpec("density matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr - re(T::one())).norm() > T::lit(TRACE_TOL) {
            return Err(Error::InvalidSpec(format!("density matrix trace {tr} differs from 1")));
        }
        let rho = Self(m);
        if rho.eigenvalues()[0] < -T::lit(EIGEN_TOL) {
            return Err(Error::InvalidSpec("density matrix has a negative eigenvalue".into()));
        }
        Ok(rho)
    }

    pub fn ground() -> Self {
        Self(Operator2::proj_ground())
    }

    pub fn excited() -> Self {
        Self(Operator2::proj_excited())
    }

    pub fn as_op(&self) -> &Operator2<T> {
        &self.0
    }

    pub fn excited_population(&self) -> T {
        self.0.entries[1][1].re
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> [T; 2] {
        let e = &self.0.entries;
        let a = e[0][0].re;
        let d = e[1][1].re;
        let b = (e[0][1] + e[1][0].conj()) / re(T::lit(2.0));
        let mean = (a + d) / T::lit(2.0);
        let half = (a - d) / T::lit(2.0);
        let r = (half * half + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// Re-Hermitizes as `(ρ + ρ†)/2` and renormalizes the trace when it has
    /// drifted from one by more than `1e-12`.
    pub fn restore(m: Operator2<T>) -> Self {
        let h = (m + m.adjoint()).scale(re(T::lit(0.5)));
        let tr = h.trace().re;
        let h = if (tr - T::one()).abs() > T::lit(1e-12) && tr > T::zero() { h.scale(re(T::one() / tr)) } else { h };
        Self(h)
    }
}

/// Initial condition of the emitter at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitialState {
    #[default]
    Ground,
    Excited,
}

impl InitialState {
    pub fn density<T: Real>(self) -> DensityMatrix<T> {
        match self {
            InitialState::Ground => DensityMatrix::ground(),
            InitialState::Excited => DensityMatrix::excited(),
        }
    }

    pub fn amplitudes<T: Real>(self) -> [Complex<T>; 2] {
        match self {
            InitialState::Ground => [re(T::one()), cz()],
            InitialState::Excited => [cz(), re(T::one())],
        }
    }
}

/// 4×4 superoperator on column-stacked vectorized 2×2 matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp<T>(CMatrix<T>);

impl<T: Real> SuperOp<T> {
    /// Panics if `m` is not 4×4.
    pub fn from_matrix(m: CMatrix<T>) -> Self {
        assert_eq!(m.dim(), 4, "superoperators are 4x4");
        Self(m)
    }

    pub fn zero() -> Self {
        Self(CMatrix::zeros(4))
    }

    pub fn identity() -> Self {
        Self(CMatrix::identity(4))
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }

    /// `ρ ↦ A ρ B`
    pub fn sandwich(a: &Operator2<T>, b: &Operator2<T>) -> Self {
        Self(b.to_cmatrix().transpose().kron(&a.to_cmatrix()))
    }

    /// `ρ ↦ A ρ`
    pub fn left(a: &Operator2<T>) -> Self {
        Self::sandwich(a, &Operator2::identity())
    }

    /// `ρ ↦ ρ B`
    pub fn right(b: &Operator2<T>) -> Self {
        Self::sandwich(&Operator2::identity(), b)
    }

    /// `ρ ↦ [A, ρ]`
    pub fn commutator(a: &Operator2<T>) -> Self {
        Self::left(a) - Self::right(a)
    }

    pub fn apply_vec(&self, v: &[Complex<T>]) -> [Complex<T>; 4] {
        let out = self.0.mul_vec(v);
        [out[0], out[1], out[2], out[3]]
    }

    pub fn apply(&self, m: &Operator2<T>) -> Operator2<T> {
        devectorize(&self.apply_vec(&vectorize(m)))
    }

    /// `self ∘ rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self(self.0.mul(&rhs.0))
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self(self.0.scaled(s))
    }

    /// `exp(self · h)`
    pub fn exp_scaled(&self, h: T) -> Self {
        Self(expm(&self.0.scaled(re(h))))
    }

    /// Row vector `vec(I)ᵀ · self`; vanishes for trace-preserving generators.
    pub fn trace_row(&self) -> [Complex<T>; 4] {
        let m = &self.0;
        let mut row = [cz(); 4];
        for (j, r) in row.iter_mut().enumerate() {
            *r = m[(0, j)] + m[(3, j)];
        }
        row
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        self.0.max_abs_diff(&rhs.0)
    }

    pub fn norm1(&self) -> T {
        self.0.norm1()
    }
}

impl<T: Real> Add for SuperOp<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0.add(&rhs.0))
    }
}

impl<T: Real> Sub for SuperOp<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0.sub(&rhs.0))
    }
}

/// Trace of a vectorized 2×2 matrix.
#[inline]
pub fn vec_trace<T: Real>(v: &[Complex<T>]) -> Complex<T> {
    v[0] + v[3]
}

/// Lindblad dissipator `ρ ↦ cρc† − ½(c†cρ + ρc†c)`.
pub fn dissipator<T: Real>(c_op: &Operator2<T>) -> SuperOp<T> {
    let cd = c_op.adjoint();
    let cdc = cd * *c_op;
    let half = re(T::lit(0.5));
    SuperOp::sandwich(c_op, &cd) - (SuperOp::left(&cdc) + SuperOp::right(&cdc)).scaled(half)
}

/// Pulse envelope `N_in(t)` in photons per relaxation time.
#[derive(Clone, Debug, PartialEq)]
pub enum Envelope<T> {
    /// `N_in = photons / width` on `[0, width)`, zero elsewhere.
    Square { width: T, photons: T },
    /// Piecewise-linear through `(t, N_in)` samples, zero outside the sampled range.
    Sampled { samples: Vec<(T, T)> },
}

impl<T: Real> Envelope<T> {
    pub fn square(width: T, photons: T) -> Self {
        Envelope::Square { width, photons }
    }

    pub fn flux(&self, t: T) -> T {
        match self {
            Envelope::Square { width, photons } => {
                if t >= T::zero() && t < *width {
                    *photons / *width
                } else {
                    T::zero()
                }
            }
            Envelope::Sampled { samples } => {
                let first = samples[0].0;
                let last = samples[samples.len() - 1].0;
                if t < first || t > last {
                    return T::zero();
                }
                let idx = samples.partition_point(|s| s.0 <= t);
                if idx >= samples.len() {
                    return samples[samples.len() - 1].1;
                }
                let (t0, y0) = samples[idx - 1];
                let (t1, y1) = samples[idx];
                y0 + (y1 - y0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Flux at `t` using the smooth piece that covers the segment `[a, b]`,
    /// so that values at the segment ends are one-sided limits from inside.
    pub fn flux_on_segment(&self, a: T, b: T, t: T) -> T {
        match self {
            Envelope::Square { .. } => self.flux((a + b) / T::lit(2.0)),
            Envelope::Sampled { samples } => {
                let mid = (a + b) / T::lit(2.0);
                let first = samples[0].0;
                let last = samples[samples.len() - 1].0;
                if mid < first || mid > last {
                    return T::zero();
                }
                let idx = samples.partition_point(|s| s.0 <= mid).clamp(1, samples.len() - 1);
                let (t0, y0) = samples[idx - 1];
                let (t1, y1) = samples[idx];
                y0 + (y1 - y0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Times where the envelope is not smooth; grids must contain them.
    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            Envelope::Square { width, .. } => vec![T::zero(), *width],
            Envelope::Sampled { samples } => samples.iter().map(|s| s.0).collect(),
        }
    }

    /// Last time with a possibly nonzero drive.
    pub fn pulse_end(&self) -> T {
        match self {
            Envelope::Square { width, .. } => *width,
            Envelope::Sampled { samples } => samples[samples.len() - 1].0.max(T::zero()),
        }
    }

    /// Upper bound of `N_in` over all time.
    pub fn max_flux(&self) -> T {
        match self {
            Envelope::Square { width, photons } => *photons / *width,
            Envelope::Sampled { samples } => samples.iter().map(|s| s.1).fold(T::zero(), T::max),
        }
    }

    /// True when the generator is constant between consecutive breakpoints.
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, Envelope::Square { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Envelope::Square { width, photons } => {
                if !(width.is_finite() && *width > T::zero()) {
                    return Err(Error::InvalidSpec(format!("pulse width T = {width} must be > 0")));
                }
                if !(photons.is_finite() && *photons >= T::zero()) {
                    return Err(Error::InvalidSpec(format!("photon number N = {photons} must be >= 0")));
                }
            }
            Envelope::Sampled { samples } => {
                if samples.len() < 2 {
                    return Err(Error::InvalidSpec("sampled envelope needs at least two samples".into()));
                }
                if samples[0].0 < T::zero() {
                    return Err(Error::InvalidSpec("sampled envelope starts before t = 0".into()));
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidSpec("sample times must be strictly increasing".into()));
                    }
                }
                for &(t, y) in samples {
                    if !(t.is_finite() && y.is_finite()) {
                        return Err(Error::InvalidSpec("non-finite envelope sample".into()));
                    }
                    if y < T::zero() {
                        return Err(Error::NegativeDrive { t: t.to_f64_lossy(), value: y.to_f64_lossy() });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Waveguide geometry around the emitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Topology<T> {
    /// Infinite line driven from the left; the reflected (left-going) field is monitored.
    SingleLine { detuning: T },
    /// Weakly coupled drive line (ratio `a = ratio`) and a strongly coupled
    /// output line, which is monitored.
    TwoLine { ratio: T, detuning: T },
}

impl<T: Real> Topology<T> {
    pub fn single() -> Self {
        Topology::SingleLine { detuning: T::zero() }
    }

    pub fn two_line(ratio: T) -> Self {
        Topology::TwoLine { ratio, detuning: T::zero() }
    }

    pub fn detuning(&self) -> T {
        match *self {
            Topology::SingleLine { detuning } | Topology::TwoLine { detuning, .. } => detuning,
        }
    }

    /// Total decay rate of the excited state.
    pub fn total_decay(&self) -> T {
        match *self {
            Topology::SingleLine { .. } => T::one(),
            Topology::TwoLine { ratio, .. } => T::one() + ratio,
        }
    }

    /// Coefficient `g` of the drive term `−i g [σx, ρ]`.
    pub fn drive_coupling(&self, flux: T) -> T {
        match *self {
            Topology::SingleLine { .. } => (flux / T::lit(2.0)).sqrt(),
            Topology::TwoLine { ratio, .. } => (ratio * flux).sqrt(),
        }
    }

    /// Decay channels as `(rate, monitored)`; every channel has jump operator `σ⁻`.
    /// The monitored channel comes first.
    pub fn channels(&self) -> Vec<(T, bool)> {
        match *self {
            Topology::SingleLine { .. } => vec![(T::lit(0.5), true), (T::lit(0.5), false)],
            Topology::TwoLine { ratio, .. } => vec![(T::one(), true), (ratio, false)],
        }
    }

    /// Weight of the monitored channel, `V⁺ = √w σ⁻`.
    pub fn monitored_weight(&self) -> T {
        self.channels()[0].0
    }

    fn validate(&self) -> Result<()> {
        if !self.detuning().is_finite() {
            return Err(Error::InvalidSpec("detuning must be finite".into()));
        }
        if let Topology::TwoLine { ratio, .. } = *self {
            if !(ratio > T::zero() && ratio <= T::one()) {
                return Err(Error::InvalidSpec(format!("coupling ratio a = {ratio} violates 0 < a <= 1")));
            }
        }
        Ok(())
    }
}

/// Default length of the undriven tail appended after the pulse, in decay times.
pub const TAIL_DECAY_TIMES: f64 = 12.0;

/// Drive, geometry, counting window and initial emitter state.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveSpec<T> {
    pub envelope: Envelope<T>,
    pub topology: Topology<T>,
    /// End of the counting window; `None` selects the default tail policy.
    pub window_end: Option<T>,
    pub initial: InitialState,
}

impl<T: Real> DriveSpec<T> {
    pub fn new(envelope: Envelope<T>, topology: Topology<T>) -> Result<Self> {
        let spec = Self { envelope, topology, window_end: None, initial: InitialState::Ground };
        spec.validate()?;
        Ok(spec)
    }

    pub fn square(topology: Topology<T>, width: T, photons: T) -> Result<Self> {
        Self::new(Envelope::square(width, photons), topology)
    }

    pub fn with_window_end(mut self, t_end: T) -> Result<Self> {
        self.window_end = Some(t_end);
        self.validate()?;
        Ok(self)
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    /// Same geometry and window policy with a different square-pulse photon number.
    pub fn with_photons(&self, photons: T) -> Result<Self> {
        let width = match self.envelope {
            Envelope::Square { width, .. } => width,
            Envelope::Sampled { .. } => {
                return Err(Error::InvalidSpec("photon number can only be set on square envelopes".into()))
            }
        };
        let spec = Self { envelope: Envelope::square(width, photons), ..self.clone() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.envelope.validate()?;
        self.topology.validate()?;
        if let Some(t_end) = self.window_end {
            let t_pulse = self.envelope.pulse_end();
            if !(t_end.is_finite() && t_end >= t_pulse && t_end > T::zero()) {
                return Err(Error::InvalidSpec(format!(
                    "window end t_end = {t_end} must be positive and not before the pulse end {t_pulse}"
                )));
            }
        }
        Ok(())
    }

    /// End of the counting window: explicit, or pulse end plus
    /// [`TAIL_DECAY_TIMES`] excited-state lifetimes.
    pub fn t_end(&self) -> T {
        self.window_end
            .unwrap_or_else(|| self.envelope.pulse_end() + T::lit(TAIL_DECAY_TIMES) / self.topology.total_decay())
    }

    /// Breakpoints inside `[0, t_end]`, including both ends, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<T> {
        let t_end = self.t_end();
        let mut pts: Vec<T> = self.envelope.breakpoints().into_iter().filter(|&t| t > T::zero() && t < t_end).collect();
        pts.push(T::zero());
        pts.push(t_end);
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup();
        pts
    }

    /// System Hamiltonian `−(Δ/2)σz + g σx` for a given flux.
    pub fn hamiltonian(&self, flux: T) -> Operator2<T> {
        let delta = self.topology.detuning();
        let g = self.topology.drive_coupling(flux);
        Operator2::sigma_z().scale(re(-delta / T::lit(2.0))) + Operator2::sigma_x().scale(re(g))
    }
}

/// Liouvillian for a given drive flux, without validating the sign.
pub(crate) fn liouvillian_at_flux<T: Real>(spec: &DriveSpec<T>, flux: T) -> SuperOp<T> {
    let h = spec.hamiltonian(flux);
    let rate = spec.topology.total_decay();
    let minus_i = c(T::zero(), -T::one());
    SuperOp::commutator(&h).scaled(minus_i) + dissipator(&Operator2::sigma_minus()).scaled(re(rate))
}

/// `L(t)`: single line `i(Δ/2)[σz,ρ] + D(σ⁻)ρ − i√(N_in/2)[σx,ρ]`;
/// two lines `i(Δ/2)[σz,ρ] + (1+a)D(σ⁻)ρ − i√(a N_in)[σx,ρ]`.
pub fn build_liouvillian<T: Real>(spec: &DriveSpec<T>, t: T) -> Result<SuperOp<T>> {
    let flux = spec.envelope.flux(t);
    if !(flux >= T::zero()) {
        return Err(Error::NegativeDrive { t: t.to_f64_lossy(), value: flux.to_f64_lossy() });
    }
    Ok(liouvillian_at_flux(spec, flux))
}

/// Monitored-channel jump superoperator `n̂ρ = V⁺ρV⁻` with `V⁺ = √w σ⁻`:
/// `w = ½` for the reflected field of a single line, `w = 1` for the strong line.
pub fn jump_superop<T: Real>(spec: &DriveSpec<T>) -> SuperOp<T> {
    let w = spec.topology.monitored_weight();
    SuperOp::sandwich(&Operator2::sigma_minus(), &Operator2::sigma_plus()).scaled(re(w))
}
