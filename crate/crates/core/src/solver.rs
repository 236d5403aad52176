//! Generator assembly, steady states, transients and the shifted rewriting
//! of the cavity dissipator.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator_super, dissipator_super, fock_annihilation, unvectorize, vec_index, vectorize, DensityMatrix, Operator, SuperOperator,
};
use crate::models::{
    build_channels, build_hamiltonian_rotating, channel_dissipator_with_occupation, intra_thermo_hamiltonian,
    BathChannel, ChannelKind, ModelSpec,
};
use crate::C64;

/// Default cap on the Hilbert-space dimension accepted by [`assemble`].
pub const DEFAULT_DIM_CAP: usize = 1024;

/// Default relative residual for steady states.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest Hilbert dimension solved with a dense LU in [`SteadyStateMethod::Auto`].
pub const DENSE_DIM_LIMIT: usize = 32;

/// Generator `𝓛ρ = −i[H, ρ] + Σ_p 𝓛_p ρ`, resolved by bath.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub dim: usize,
    pub hamiltonian: Operator,
    pub total: SuperOperator,
    pub hamiltonian_part: SuperOperator,
    pub channel_parts: Vec<(BathChannel, SuperOperator)>,
}

impl Liouvillian {
    pub fn from_parts(hamiltonian: Operator, channel_parts: Vec<(BathChannel, SuperOperator)>) -> Result<Self> {
        let dim = hamiltonian.dim();
        for (c, p) in &channel_parts {
            if p.dim() != dim {
                log::debug!("channel `{}` has dimension {}", c.label, p.dim());
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        let hamiltonian_part = commutator_super(&hamiltonian)?;
        let total = SuperOperator::sum(
            dim,
            std::iter::once(&hamiltonian_part).chain(channel_parts.iter().map(|(_, p)| p)),
        );
        Ok(Self { dim, hamiltonian, total, hamiltonian_part, channel_parts })
    }

    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        self.total.apply(rho)
    }

    pub fn part(&self, label: &str) -> Option<&SuperOperator> {
        self.channel_parts.iter().find(|(c, _)| c.label == label).map(|(_, p)| p)
    }

    /// Frobenius norm of the total generator, the scale of steady-state residuals.
    pub fn norm(&self) -> f64 {
        self.total.frobenius_norm()
    }

    /// `‖𝓛ρ‖₂ / ‖𝓛‖`.
    pub fn relative_residual(&self, rho: &Operator) -> Result<f64> {
        Ok(self.apply(rho)?.frobenius_norm() / self.norm())
    }
}

pub fn assemble(model: &ModelSpec) -> Result<Liouvillian> {
    assemble_with_cap(model, DEFAULT_DIM_CAP)
}

/// Like [`assemble`] but refuses Hilbert dimensions above `cap`.
pub fn assemble_with_cap(model: &ModelSpec, cap: usize) -> Result<Liouvillian> {
    model.validate()?;
    let dim = model.dim();
    if dim > cap {
        return Err(Error::DimensionOverflow { dim, cap, entries: dim * dim });
    }
    let liouvillian = Liouvillian::from_parts(build_hamiltonian_rotating(model)?, build_channels(model)?)?;
    let defect = liouvillian.total.trace_defect();
    if defect > 1e-10 * liouvillian.total.inf_norm().max(1.0) {
        return Err(Error::InternalConsistency { what: "generator trace preservation".into(), a: defect, b: 0.0 });
    }
    Ok(liouvillian)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SteadyStateMethod {
    /// Dense LU for small systems, sparse LU otherwise, time evolution if
    /// the direct solve misses the tolerance.
    #[default]
    Auto,
    DenseNull,
    SparseDirect,
    EvolveToStationary,
}

impl std::str::FromStr for SteadyStateMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "dense-null" => Ok(Self::DenseNull),
            "sparse-direct" => Ok(Self::SparseDirect),
            "evolve" | "evolve-to-stationary" => Ok(Self::EvolveToStationary),
            other => Err(Error::Precondition(format!("unknown steady-state method `{other}`"))),
        }
    }
}

/// Unique stationary state of `l`, with `‖𝓛ρ‖₂ ≤ tol·‖𝓛‖`.
///
/// Direct methods solve the vectorized generator with its first row
/// (the `ρ₀₀` equation, redundant by trace preservation) replaced by the
/// trace constraint, followed by iterative refinement.
pub fn steady_state(l: &Liouvillian, method: SteadyStateMethod, tol: f64) -> Result<DensityMatrix> {
    let rho = match method {
        SteadyStateMethod::DenseNull => solve_bordered(l, true)?,
        SteadyStateMethod::SparseDirect => solve_bordered(l, false)?,
        SteadyStateMethod::EvolveToStationary => return evolve_to_stationary(l, tol),
        SteadyStateMethod::Auto => match solve_bordered(l, l.dim <= DENSE_DIM_LIMIT) {
            Ok(rho) => rho,
            Err(e @ Error::AmbiguousSteadyState { .. }) => return Err(e),
            Err(e) => {
                log::warn!("direct steady-state solve failed ({e}); evolving instead");
                return evolve_to_stationary(l, tol);
            }
        },
    };
    let residual = l.relative_residual(&rho)?;
    if residual > tol {
        if method == SteadyStateMethod::Auto {
            log::warn!("direct residual {residual:.3e} above {tol:.1e}; evolving instead");
            return evolve_to_stationary(l, tol);
        }
        return Err(Error::ConvergenceFailure { residual });
    }
    DensityMatrix::from_unnormalized(&rho)
}

enum Factor {
    Dense(faer::linalg::solvers::PartialPivLu<C64>),
    Sparse(faer::sparse::linalg::solvers::Lu<usize, C64>),
}

impl Factor {
    fn solve(&self, rhs: &Mat<C64>) -> Mat<C64> {
        match self {
            Factor::Dense(lu) => lu.solve(rhs),
            Factor::Sparse(lu) => lu.solve(rhs),
        }
    }
}

fn bordered_triplets(l: &Liouvillian) -> Vec<(usize, usize, C64)> {
    let d = l.dim;
    let one = C64::new(1.0, 0.0);
    l.total
        .triplets()
        .filter(|&(r, _, _)| r != 0)
        .chain((0..d).map(|i| (0, vec_index(d, i, i), one)))
        .collect()
}

fn solve_bordered(l: &Liouvillian, dense: bool) -> Result<Operator> {
    let d = l.dim;
    let n = d * d;
    let triplets = bordered_triplets(l);
    let apply = |x: &Mat<C64>| -> Mat<C64> {
        let mut y = Mat::<C64>::zeros(n, 1);
        for &(r, c, v) in &triplets {
            y[(r, 0)] += v * x[(c, 0)];
        }
        y
    };
    let factor = if dense {
        let mut m = Mat::<C64>::zeros(n, n);
        for &(r, c, v) in &triplets {
            m[(r, c)] += v;
        }
        Factor::Dense(m.partial_piv_lu())
    } else {
        let entries: Vec<Triplet<usize, usize, C64>> =
            triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let m = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &entries)
            .map_err(|e| Error::NumericalFailure(format!("sparse assembly: {e:?}")))?;
        Factor::Sparse(m.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { .. } => ambiguous(l),
            other => Error::NumericalFailure(format!("sparse LU: {other:?}")),
        })?)
    };
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(0, 0)] = C64::new(1.0, 0.0);
    let mut x = factor.solve(&rhs);
    if !solution_is_sane(&x) {
        return Err(ambiguous(l));
    }
    for _ in 0..3 {
        let r = &rhs - apply(&x);
        let dx = factor.solve(&r);
        x += dx;
    }
    if !solution_is_sane(&x) {
        return Err(ambiguous(l));
    }
    let v: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    Ok(unvectorize(d, &v)?.hermitian_part())
}

/// A singular bordered system shows up as non-finite or exploding entries.
fn solution_is_sane(x: &Mat<C64>) -> bool {
    (0..x.nrows()).all(|i| {
        let v = x[(i, 0)];
        v.re.is_finite() && v.im.is_finite() && v.norm() < 1e6
    })
}

fn ambiguous(l: &Liouvillian) -> Error {
    let null_dim = match null_space_dimension(l) {
        Some(k) => k.to_string(),
        None => "≥ 2".to_string(),
    };
    Error::AmbiguousSteadyState { null_dim }
}

/// Number of singular values of the generator below `1e-10·σ_max`; only
/// computed for small systems.
pub fn null_space_dimension(l: &Liouvillian) -> Option<usize> {
    if l.dim > DENSE_DIM_LIMIT {
        return None;
    }
    let sv = l.total.to_dense().singular_values().ok()?;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    Some(sv.iter().filter(|&&s| s <= 1e-10 * max.max(1e-300)).count())
}

/// Largest real part of the generator spectrum (small systems only).
pub fn spectral_abscissa(l: &Liouvillian) -> Result<f64> {
    if l.dim > DENSE_DIM_LIMIT {
        return Err(Error::Precondition(format!(
            "spectral abscissa needs a dense eigensolve; dimension {} above {}",
            l.dim, DENSE_DIM_LIMIT
        )));
    }
    let ev = l
        .total
        .to_dense()
        .eigenvalues()
        .map_err(|e| Error::NumericalFailure(format!("eigenvalues: {e:?}")))?;
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Options for [`evolve_with`].
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Upper bound on the RK4 step; defaults to `2.5/‖𝓛‖∞`.
    pub max_step: Option<f64>,
    /// Total RK4 steps allowed before giving up.
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { max_step: None, max_steps: 20_000_000 }
    }
}

/// States at each time of `t_grid` (the first entry is `rho0` at `t_grid[0]`).
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    evolve_with(l, rho0, t_grid, EvolveOptions::default())
}

pub fn evolve_with(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<DensityMatrix>> {
    if rho0.dim() != l.dim {
        return Err(Error::DimensionMismatch { expected: l.dim, got: rho0.dim() });
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Precondition("time grid must be finite and strictly increasing".into()));
    }
    let h_max = opts.max_step.unwrap_or(2.5 / l.total.inf_norm().max(1e-300));
    let mut x = vectorize(rho0.operator());
    let mut out = Vec::with_capacity(t_grid.len());
    let mut steps = 0usize;
    let mut scratch = Rk4::new(x.len());
    for (k, &t) in t_grid.iter().enumerate() {
        if k > 0 {
            let span = t - t_grid[k - 1];
            let n = (span / h_max).ceil().max(1.0);
            if !n.is_finite() || steps as f64 + n > opts.max_steps as f64 {
                return Err(Error::Stiffness(format!(
                    "interval {span:.3e} needs {n:.3e} steps of at most {h_max:.3e}"
                )));
            }
            let h = span / n;
            for _ in 0..n as usize {
                scratch.step(&l.total, &mut x, h);
            }
            steps += n as usize;
        }
        let op = unvectorize(l.dim, &x)?;
        let tr = op.trace().re;
        if (tr - 1.0).abs() > 1e-9 * (1.0 + t - t_grid[0]) {
            return Err(Error::NumericalFailure(format!("trace drifted to {tr} at t = {t}")));
        }
        out.push(DensityMatrix::from_unnormalized(&op.hermitian_part())?);
    }
    Ok(out)
}

/// `steps` equal RK4 steps from `rho0` to `t_end`, without normalization;
/// used to measure the integrator's order.
pub fn evolve_fixed(l: &Liouvillian, rho0: &Operator, t_end: f64, steps: usize) -> Result<Operator> {
    let mut x = vectorize(rho0);
    let mut scratch = Rk4::new(x.len());
    let h = t_end / steps as f64;
    for _ in 0..steps {
        scratch.step(&l.total, &mut x, h);
    }
    unvectorize(l.dim, &x)
}

struct Rk4 {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self { k: [z.clone(), z.clone(), z.clone(), z.clone()], tmp: z }
    }

    fn step(&mut self, l: &SuperOperator, x: &mut [C64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        l.apply_vec(x, k1);
        axpy(&mut self.tmp, x, k1, 0.5 * h);
        l.apply_vec(&self.tmp, k2);
        axpy(&mut self.tmp, x, k2, 0.5 * h);
        l.apply_vec(&self.tmp, k3);
        axpy(&mut self.tmp, x, k3, h);
        l.apply_vec(&self.tmp, k4);
        for i in 0..x.len() {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

fn axpy(out: &mut [C64], x: &[C64], k: &[C64], h: f64) {
    for ((o, &xi), &ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + ki * h;
    }
}

fn evolve_to_stationary(l: &Liouvillian, tol: f64) -> Result<DensityMatrix> {
    let d = l.dim;
    let h = 2.5 / l.total.inf_norm().max(1e-300);
    let mut x = vectorize(DensityMatrix::maximally_mixed(d).operator());
    let mut scratch = Rk4::new(x.len());
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    let norm = l.norm();
    let mut residual = f64::INFINITY;
    for _ in 0..20_000 {
        for _ in 0..100 {
            scratch.step(&l.total, &mut x, h);
        }
        l.total.apply_vec(&x, &mut y);
        residual = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / norm;
        if residual <= tol {
            return DensityMatrix::from_unnormalized(&unvectorize(d, &x)?.hermitian_part());
        }
    }
    Err(Error::ConvergenceFailure { residual })
}

/// Cavity dissipators rewritten around the coherent amplitude α:
/// `𝓛_s = κ n_c 𝓓[a† − α*] + κ(n_c+1) 𝓓[a − α]` for every accessible
/// channel, with `H_s = H + (i/2) Σ_j κ_j (α* a − α a†)` compensating so
/// the total generator is unchanged.
#[derive(Clone, Debug)]
pub struct ShiftedForm {
    pub alpha: C64,
    pub hamiltonian: Operator,
    pub hamiltonian_part: SuperOperator,
    /// Shifted parts for accessible channels, original parts for the rest,
    /// in channel order.
    pub parts: Vec<(BathChannel, SuperOperator)>,
}

impl ShiftedForm {
    pub fn total(&self) -> SuperOperator {
        SuperOperator::sum(
            self.hamiltonian.dim(),
            std::iter::once(&self.hamiltonian_part).chain(self.parts.iter().map(|(_, p)| p)),
        )
    }
}

pub fn shifted_form(l: &Liouvillian, model: &ModelSpec, rho: &DensityMatrix) -> Result<ShiftedForm> {
    let a = model.annihilation()?;
    let alpha = a.trace_product(rho.operator());
    shifted_form_at(l, model, alpha)
}

/// [`shifted_form`] with an explicit shift amplitude.
pub fn shifted_form_at(l: &Liouvillian, model: &ModelSpec, alpha: C64) -> Result<ShiftedForm> {
    let a = model.annihilation()?;
    let ident = Operator::identity(l.dim);
    let shifted_lowering = &a - &ident.scaled(alpha);
    let x = &a.scaled(alpha.conj()) - &a.adjoint().scaled(alpha);
    let mut kappa_sum = 0.0;
    let mut parts = Vec::with_capacity(l.channel_parts.len());
    for (c, p) in &l.channel_parts {
        if c.kind == ChannelKind::CavityAccessible {
            kappa_sum += c.rate;
            let mut s = dissipator_super(&shifted_lowering).scaled(c.rate * (c.occupation + 1.0));
            if c.occupation > 0.0 {
                s = s.add(&dissipator_super(&shifted_lowering.adjoint()).scaled(c.rate * c.occupation));
            }
            parts.push((c.clone(), s));
        } else {
            parts.push((c.clone(), p.clone()));
        }
    }
    let correction = x.scaled(C64::new(0.0, 0.5 * kappa_sum));
    let hamiltonian = (&l.hamiltonian + &correction).hermitian_part().into_hermitian()?;
    let hamiltonian_part = commutator_super(&hamiltonian)?;
    Ok(ShiftedForm { alpha, hamiltonian, hamiltonian_part, parts })
}

/// Reference state `σ ∝ e^{−h/T}` of one bath, kept with its generator so
/// that `ln σ = −h/T − ln Z` is available in closed form.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub label: String,
    /// Energy operator on the full space.
    pub generator: Operator,
    /// Zero means the bath is at absolute zero.
    pub temperature: f64,
    /// Set for the displaced thermal state of a shifted cavity port.
    pub displaced: Option<DisplacedCavity>,
}

/// Parameters of a shifted cavity dissipator and its displaced thermal state.
///
/// On a truncated Fock space `a − α` no longer obeys the canonical
/// commutator at the top level, so the displaced state is only approximately
/// stationary there. Its fixed-point residual is therefore evaluated on an
/// enlarged cavity space large enough to hold the displaced distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisplacedCavity {
    pub alpha: C64,
    pub rate: f64,
    pub occupation: f64,
    pub omega_d: f64,
    pub n_max: usize,
}

/// Upper limit on the enlarged Fock space used for displaced references.
pub const DISPLACED_LEVEL_CAP: usize = 1000;

impl DisplacedCavity {
    /// Fock levels holding all but ~1e-13 of the displaced thermal state.
    pub fn enlarged_levels(&self) -> usize {
        let q = self.occupation / (self.occupation + 1.0);
        let spread = if q > 0.0 { 1e-13f64.ln() / q.ln() } else { 0.0 };
        let r = self.alpha.norm();
        let n = (r * r + 8.0 * r + spread).ceil() as usize + 20;
        n.clamp(self.n_max, DISPLACED_LEVEL_CAP)
    }

    /// `‖𝓛_s σ_s‖₂` on the enlarged cavity space.
    pub fn residual(&self, temperature: f64) -> Result<f64> {
        let n = self.enlarged_levels();
        let b = &fock_annihilation(n)? - &Operator::identity(n).scaled(self.alpha);
        let mut part = dissipator_super(&b).scaled(self.rate * (self.occupation + 1.0));
        if self.occupation > 0.0 {
            part = part.add(&dissipator_super(&b.adjoint()).scaled(self.rate * self.occupation));
        }
        let h = (&b.adjoint() * &b).scaled_real(self.omega_d).hermitian_part();
        GibbsState::new("displaced", h, temperature).residual(&part)
    }
}

impl GibbsState {
    pub fn new(label: &str, generator: Operator, temperature: f64) -> Self {
        Self { label: label.to_string(), generator, temperature, displaced: None }
    }

    /// Normalized `e^{−h/T}`; at `T = 0` the projector onto the ground space.
    pub fn state(&self) -> Result<DensityMatrix> {
        let (values, _) = self.generator.eigh()?;
        let e0 = values.first().copied().unwrap_or(0.0);
        let t = self.temperature;
        let op = self.generator.hermitian_fn(|e| {
            if t > 0.0 {
                (-(e - e0) / t).exp()
            } else if (e - e0).abs() <= 1e-9 * e0.abs().max(1.0) {
                1.0
            } else {
                0.0
            }
        })?;
        DensityMatrix::from_unnormalized(&op)
    }

    /// `ln σ` up to an additive constant, which trace-preserving maps ignore.
    pub fn log_up_to_constant(&self) -> Option<Operator> {
        (self.temperature > 0.0).then(|| self.generator.scaled_real(-1.0 / self.temperature))
    }

    /// `‖𝓛_p σ‖₂`; for displaced references, on the enlarged space.
    pub fn residual(&self, part: &SuperOperator) -> Result<f64> {
        match self.displaced {
            Some(d) => d.residual(self.temperature),
            None => Ok(part.apply(self.state()?.operator())?.frobenius_norm()),
        }
    }
}

/// Reference state of each conventional bath: `e^{−ω_d a†a/T_c}` for cavity
/// channels and `e^{−H'_TD/T}` for intra channels, in channel order.
pub fn conventional_fixed_points(model: &ModelSpec) -> Result<Vec<GibbsState>> {
    let cavity_energy = model.number()?.scaled_real(model.omega_d());
    let intra_energy = intra_thermo_hamiltonian(model)?;
    model
        .channels
        .iter()
        .map(|c| {
            let h = if c.kind.is_cavity() { cavity_energy.clone() } else { intra_energy.clone() };
            Ok(GibbsState::new(&c.label, h, model.temperature(c)?))
        })
        .collect()
}

/// Reference states for the shifted split: accessible cavity channels use
/// the displaced thermal state built from `ω_d (a−α)†(a−α)`.
pub fn shifted_fixed_points(model: &ModelSpec, alpha: C64) -> Result<Vec<GibbsState>> {
    let a = model.annihilation()?;
    let b = &a - &Operator::identity(model.dim()).scaled(alpha);
    let displaced = (&b.adjoint() * &b).scaled_real(model.omega_d()).hermitian_part();
    let mut out = conventional_fixed_points(model)?;
    for (g, c) in out.iter_mut().zip(&model.channels) {
        if c.kind == ChannelKind::CavityAccessible {
            g.generator = displaced.clone();
            g.displaced = Some(DisplacedCavity {
                alpha,
                rate: c.rate,
                occupation: c.occupation,
                omega_d: model.omega_d(),
                n_max: model.n_max,
            });
        }
    }
    Ok(out)
}

/// Dissipator of `channel` evaluated with a different occupation, leaving
/// its temperature label untouched; used to inject inconsistent baths.
pub fn mismatched_channel(model: &ModelSpec, channel: &BathChannel, occupation: f64) -> Result<SuperOperator> {
    channel_dissipator_with_occupation(model, channel, occupation)
}

/// Population in the top tenth of the Fock ladder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationReport {
    pub tail_mass: f64,
    pub levels: usize,
}

pub const TRUNCATION_WARN: f64 = 1e-6;
pub const TRUNCATION_ERROR: f64 = 1e-3;

pub fn truncation_report(rho: &DensityMatrix, model: &ModelSpec) -> Result<TruncationReport> {
    let report = tail_mass(rho, model)?;
    if report.tail_mass > TRUNCATION_ERROR {
        return Err(Error::Truncation { tail: report.tail_mass, levels: report.levels });
    }
    if report.tail_mass > TRUNCATION_WARN {
        log::warn!("tail mass {:.3e} in top {} Fock levels", report.tail_mass, report.levels);
    }
    Ok(report)
}

/// [`truncation_report`] without the thresholds.
pub fn tail_mass(rho: &DensityMatrix, model: &ModelSpec) -> Result<TruncationReport> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: rho.dim() });
    }
    let n = model.n_max;
    let di = model.intra_dim();
    let levels = n.div_ceil(10).max(1);
    let op = rho.operator();
    let tail = ((n - levels)..n).flat_map(|k| (0..di).map(move |s| k * di + s)).map(|i| op.get(i, i).re).sum::<f64>();
    Ok(TruncationReport { tail_mass: tail.max(0.0), levels })
}
