//! Loop-closure constraints, tangent cones, closure algebras and mobility.
//!
//! A loop is a serial chain whose last link coincides with the ground, so
//! the velocity constraint is `V_n = 𝖲_n = 0` and the constraint of order
//! `i` is `H^(i) = D^(i−1) 𝖲_n = 0`. `H^(i)` is linear in `q^(i)` with
//! coefficient `J(q)`; all lower-order derivatives enter polynomially.
//!
//! Tangent-cone membership of a velocity `x` at order `i` asks whether
//! `q^(2..=i)` exist with `H^(1..=i) = 0`. Through order 3 the residual is
//! affine in those unknowns, so least squares certifies both outcomes.
//! Beyond that a Gauss–Newton search certifies membership only; failures
//! are reported as [`Verdict::Undecided`].

use crate::chain::{jacobian_spatial, joint_screws_spatial, Chain, DerivativeStack};
use crate::derivatives::ScrewJet;
use crate::error::{Error, Result};
use crate::linalg::{self, lstsq, nullspace, pinv, range, rank, rank_with_gap};
use crate::minors::{all_minor_differentials, all_minor_time_derivatives, MinorIndex};
use crate::multiindex::K_MAX;
use crate::parallel::{map, Execution};
use crate::poly::{homogeneous_coefficients, PolySystem, Polynomial, COEFF_TOL};
use crate::screw::{bracket, ScrewVec};
use crate::taylor::{cspace_poly_system, require_closure};
use nalgebra::{DMatrix, DVector};

/// Constraint maps `[H^(1), …, H^(k)]` of a loop. Needs a stack of order `k`.
pub fn loop_constraint_map(chain: &Chain, state: &DerivativeStack, k: usize) -> Result<Vec<ScrewVec>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > K_MAX + 1 {
        return Err(Error::OrderTooHigh { requested: k, max: K_MAX + 1 });
    }
    state.require(k)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let jet = ScrewJet::full(&s, &state.derivs[..k], k - 1);
    Ok(jet.sums[chain.n() - 1].clone())
}

/// One loop of a [`LoopSystem`]: the chain and, for each of its joints,
/// the one-based global variable and a traversal sign.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSpec {
    pub chain: Chain,
    pub indices: Vec<usize>,
    pub signs: Vec<f64>,
}

/// Several loops sharing one vector of joint variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSystem {
    pub loops: Vec<LoopSpec>,
    pub n_global: usize,
}

impl LoopSystem {
    /// A single loop using all variables in order.
    pub fn single(chain: Chain) -> Self {
        let n = chain.n();
        Self {
            loops: vec![LoopSpec { chain, indices: (1..=n).collect(), signs: vec![1.0; n] }],
            n_global: n,
        }
    }

    pub fn new(loops: Vec<LoopSpec>, n_global: usize) -> Result<Self> {
        let mut used = vec![false; n_global];
        for (l, lp) in loops.iter().enumerate() {
            if lp.indices.len() != lp.chain.n() || lp.signs.len() != lp.chain.n() {
                return Err(Error::InvalidInput(format!("loop {} index/sign lists do not match its joints", l + 1)));
            }
            let mut seen = vec![false; n_global];
            for (&g, &s) in lp.indices.iter().zip(&lp.signs) {
                if g == 0 || g > n_global {
                    return Err(Error::IndexOutOfRange { index: g, max: n_global });
                }
                if seen[g - 1] {
                    return Err(Error::InvalidInput(format!("loop {} uses variable {g} twice", l + 1)));
                }
                if s != 1.0 && s != -1.0 {
                    return Err(Error::InvalidInput("loop signs must be ±1".into()));
                }
                seen[g - 1] = true;
                used[g - 1] = true;
            }
        }
        if let Some(p) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInput(format!("variable {} is not used by any loop", p + 1)));
        }
        Ok(Self { loops, n_global })
    }

    fn local(&self, l: usize, v: &DVector<f64>) -> DVector<f64> {
        let lp = &self.loops[l];
        DVector::from_iterator(lp.chain.n(), lp.indices.iter().zip(&lp.signs).map(|(&g, &s)| s * v[g - 1]))
    }

    fn local_state(&self, l: usize, q: &DVector<f64>, derivs: &[DVector<f64>]) -> DerivativeStack {
        DerivativeStack { q: self.local(l, q), derivs: derivs.iter().map(|d| self.local(l, d)).collect() }
    }

    /// Stacked constraint Jacobian (`6L × n_global`).
    pub fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(q)?;
        let mut j = DMatrix::zeros(6 * self.loops.len(), self.n_global);
        for (l, lp) in self.loops.iter().enumerate() {
            let jl = jacobian_spatial(&lp.chain, &self.local(l, q), lp.chain.n())?;
            for (c, (&g, &s)) in lp.indices.iter().zip(&lp.signs).enumerate() {
                for r in 0..6 {
                    j[(6 * l + r, g - 1)] += s * jl[(r, c)];
                }
            }
        }
        Ok(j)
    }

    /// Stacked `[H^(1); …; H^(k)]` of all loops, grouped by order.
    pub fn constraint_maps(&self, q: &DVector<f64>, derivs: &[DVector<f64>], k: usize) -> Result<Vec<DVector<f64>>> {
        let nl = self.loops.len();
        let mut out = vec![DVector::zeros(6 * nl); k];
        for (l, lp) in self.loops.iter().enumerate() {
            let st = self.local_state(l, q, derivs);
            let h = loop_constraint_map(&lp.chain, &st, k)?;
            for (o, hv) in out.iter_mut().zip(h) {
                o.rows_mut(6 * l, 6).copy_from(&hv);
            }
        }
        Ok(out)
    }

    /// Largest closure residual over all loops.
    pub fn require_closure(&self, q: &DVector<f64>, tol: f64) -> Result<()> {
        self.check(q)?;
        for l in 0..self.loops.len() {
            require_closure(&self.loops[l].chain, &self.local(l, q), tol)?;
        }
        Ok(())
    }

    pub fn characteristic_length(&self) -> f64 {
        self.loops.iter().map(|l| l.chain.characteristic_length()).fold(1.0, f64::max)
    }

    fn check(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n_global {
            return Err(Error::Dimension { what: "joint vector", expected: self.n_global, got: q.len() });
        }
        Ok(())
    }
}

/// Outcome of a membership test at one order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Member,
    NonMember,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Member => "member",
            Verdict::NonMember => "nonmember",
            Verdict::Undecided => "undecided",
        }
    }
}

/// Options for [`tangent_cone_membership`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeOptions {
    /// Base feasibility tolerance, scaled by the characteristic length.
    pub tol: f64,
    /// Closure tolerance checked at the base configuration.
    pub tol_loop: f64,
    /// Restrict to the stratum where the Jacobian rank is below this value
    /// (single loops only).
    pub rank_stratum: Option<usize>,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self { tol: 1e-9, tol_loop: 1e-8, rank_stratum: None }
    }
}

/// Tangent-cone membership of one velocity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeResult {
    pub max_order: usize,
    /// Orthonormal basis of the first-order cone `ker J`.
    pub kernel_basis: DMatrix<f64>,
    /// `verdicts[i − 1]` is the verdict at order `i`.
    pub verdicts: Vec<Verdict>,
    /// Best residual found at each order.
    pub residuals: Vec<f64>,
    /// Tolerance applied at each order.
    pub tolerances: Vec<f64>,
    /// Higher derivatives `q^(2..)` realizing the highest certified order.
    pub witness: Vec<DVector<f64>>,
    /// Rank decision of `J` with a singular-value gap below `10³`.
    pub ill_conditioned: bool,
}

impl ConeResult {
    /// Highest order certified as member (0 if none).
    pub fn member_order(&self) -> usize {
        self.verdicts.iter().take_while(|v| **v == Verdict::Member).count()
    }
}

struct Residual<'a> {
    sys: &'a LoopSystem,
    q: &'a DVector<f64>,
    x: &'a DVector<f64>,
    minors: Vec<MinorIndex>,
}

impl Residual<'_> {
    fn n(&self) -> usize {
        self.sys.n_global
    }

    /// Residual of all constraints through `order` with unknowns
    /// `z = (q^(2), …, q^(order))`.
    fn eval(&self, order: usize, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut derivs = vec![self.x.clone()];
        for l in 0..order - 1 {
            derivs.push(z.rows(l * n, n).into_owned());
        }
        let h = self.sys.constraint_maps(self.q, &derivs, order).expect("validated input");
        let mut parts: Vec<f64> = h.iter().flat_map(|v| v.iter().copied()).collect();
        if !self.minors.is_empty() {
            let lp = &self.sys.loops[0];
            let st = self.sys.local_state(0, self.q, &derivs);
            let md = all_minor_time_derivatives(&lp.chain, &st, &self.minors, order, Execution::Sequential)
                .expect("validated input");
            for l in 1..=order {
                parts.extend(md.iter().map(|m| m[l]));
            }
        }
        DVector::from_vec(parts)
    }

    fn jacobian(&self, order: usize, z: &DVector<f64>, step: f64) -> DMatrix<f64> {
        let m = z.len();
        let r0 = self.eval(order, z);
        let mut j = DMatrix::zeros(r0.len(), m);
        for c in 0..m {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[c] += step;
            zm[c] -= step;
            let d = (self.eval(order, &zp) - self.eval(order, &zm)) / (2.0 * step);
            j.column_mut(c).copy_from(&d);
        }
        j
    }
}

/// Decide tangent-cone membership of `x` at orders `1..=max_order`.
pub fn tangent_cone_membership(
    sys: &LoopSystem,
    q: &DVector<f64>,
    x: &DVector<f64>,
    max_order: usize,
    opts: &ConeOptions,
) -> Result<ConeResult> {
    if x.len() != sys.n_global {
        return Err(Error::Dimension { what: "velocity", expected: sys.n_global, got: x.len() });
    }
    if max_order == 0 || max_order > K_MAX {
        return Err(Error::OrderTooHigh { requested: max_order, max: K_MAX });
    }
    sys.require_closure(q, opts.tol_loop)?;
    let minors = match opts.rank_stratum {
        None => Vec::new(),
        Some(k) => {
            if sys.loops.len() != 1 {
                return Err(Error::Unsupported("rank strata are evaluated for single loops".into()));
            }
            if k == 0 || k > 6.min(sys.n_global) {
                return Err(Error::InvalidInput(format!("rank stratum {k} out of range")));
            }
            MinorIndex::all(k, sys.n_global)
        }
    };
    let jac = sys.jacobian(q)?;
    let (_, gap) = rank_with_gap(&jac, linalg::RANK_RTOL);
    let kernel_basis = nullspace(&jac, linalg::RANK_RTOL);
    let res = Residual { sys, q, x, minors };
    let length = sys.characteristic_length();
    let xs = 1.0 + x.amax();
    let n = sys.n_global;

    let mut verdicts = Vec::with_capacity(max_order);
    let mut residuals = Vec::with_capacity(max_order);
    let mut tolerances = Vec::with_capacity(max_order);
    let mut witness = DVector::zeros(0);
    let mut best_witness: Vec<DVector<f64>> = Vec::new();
    let mut failed = false;

    for order in 1..=max_order {
        let tol = opts.tol * length * xs.powi(order as i32);
        tolerances.push(tol);
        if failed {
            verdicts.push(Verdict::NonMember);
            residuals.push(f64::NAN);
            continue;
        }
        let mut z = DVector::zeros(n * (order - 1));
        z.rows_mut(0, witness.len()).copy_from(&witness);
        let (verdict, r, zbest) = solve_order(&res, order, z, tol);
        residuals.push(r);
        match verdict {
            Verdict::Member => {
                // A witness at this order also realizes every lower order.
                for v in verdicts.iter_mut() {
                    *v = Verdict::Member;
                }
                witness = zbest;
                best_witness = (0..order - 1).map(|l| witness.rows(l * n, n).into_owned()).collect();
            }
            Verdict::NonMember => failed = true,
            Verdict::Undecided => witness = zbest,
        }
        verdicts.push(verdict);
    }
    debug_assert!(verdicts.windows(2).all(|w| !(w[1] == Verdict::Member && w[0] != Verdict::Member)));
    Ok(ConeResult {
        max_order,
        kernel_basis,
        verdicts,
        residuals,
        tolerances,
        witness: best_witness,
        ill_conditioned: gap < 1e3,
    })
}

fn solve_order(res: &Residual, order: usize, z0: DVector<f64>, tol: f64) -> (Verdict, f64, DVector<f64>) {
    let r0 = res.eval(order, &z0);
    if z0.is_empty() {
        let r = r0.norm();
        return (if r <= tol { Verdict::Member } else { Verdict::NonMember }, r, z0);
    }
    // Central differences with unit step are exact for quadratic residuals,
    // in particular for affine ones.
    let a = res.jacobian(order, &z0, 1.0);
    let affine = is_affine(res, order, &z0, &r0, &a, tol);
    let (dz, _) = lstsq(&a, &(-&r0), 1e-12);
    let mut z = &z0 + dz;
    let mut r = res.eval(order, &z).norm();
    if affine {
        let v = if r <= tol { Verdict::Member } else { Verdict::NonMember };
        return (v, r, z);
    }
    for _ in 0..60 {
        if r <= tol {
            break;
        }
        let j = res.jacobian(order, &z, 1e-4);
        let rv = res.eval(order, &z);
        let step = pinv(&j, 1e-12) * rv;
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-6 {
            let cand = &z - &step * t;
            let rc = res.eval(order, &cand).norm();
            if rc < r {
                z = cand;
                r = rc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (if r <= tol { Verdict::Member } else { Verdict::Undecided }, r, z)
}

fn is_affine(res: &Residual, order: usize, z0: &DVector<f64>, r0: &DVector<f64>, a: &DMatrix<f64>, tol: f64) -> bool {
    let m = z0.len();
    for k in 0..3 {
        let d = DVector::from_fn(m, |i, _| ((i * 7 + k * 13 + 3) as f64 * 0.618).sin());
        let pred = r0 + a * &d;
        let got = res.eval(order, &(z0 + &d));
        if (got - pred).norm() > 0.1 * tol {
            return false;
        }
    }
    true
}

/// Batch membership over many query vectors.
pub fn tangent_cone_batch(
    sys: &LoopSystem,
    q: &DVector<f64>,
    xs: &[DVector<f64>],
    max_order: usize,
    opts: &ConeOptions,
    exec: Execution,
) -> Vec<Result<ConeResult>> {
    map(exec, xs, |x| tangent_cone_membership(sys, q, x, max_order, opts))
}

/// Lie subalgebra of se(3) generated by a set of screws.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureAlgebra {
    /// Orthonormal basis, `6 × g`.
    pub basis: DMatrix<f64>,
    pub g: usize,
    /// Number of bracket generations needed to reach the fixpoint.
    pub generations: usize,
}

impl ClosureAlgebra {
    /// Largest residual of `[b_i, b_j]` after projection onto the span.
    pub fn bracket_residual(&self) -> f64 {
        let cols: Vec<ScrewVec> = (0..self.g).map(|c| ScrewVec::from_iterator(self.basis.column(c).iter().copied())).collect();
        let mut worst: f64 = 0.0;
        for a in &cols {
            for b in &cols {
                let br = DVector::from_iterator(6, bracket(a, b).iter().copied());
                let proj = &self.basis * (self.basis.transpose() * &br);
                worst = worst.max((br - proj).norm());
            }
        }
        worst
    }

    /// `g × 6` projector onto the algebra coordinates.
    pub fn projector(&self) -> DMatrix<f64> {
        self.basis.transpose()
    }
}

/// Smallest bracket-closed span containing `screws`.
///
/// The span is repeatedly augmented by brackets of its basis with the
/// generating screws until the numeric rank (threshold `1e-10·σ_max`) stops
/// growing.
pub fn closure_algebra(screws: &[ScrewVec]) -> Result<ClosureAlgebra> {
    if screws.is_empty() {
        return Err(Error::InvalidInput("closure algebra of an empty screw set".into()));
    }
    let to_cols = |v: &[ScrewVec]| DMatrix::from_fn(6, v.len(), |r, c| v[c][r]);
    let mut basis = range(&to_cols(screws), linalg::RANK_RTOL);
    let mut generations = 0;
    loop {
        let g = basis.ncols();
        if g == 6 {
            break;
        }
        let mut cand: Vec<ScrewVec> = (0..g).map(|c| ScrewVec::from_iterator(basis.column(c).iter().copied())).collect();
        let current = cand.clone();
        for b in &current {
            for s in screws {
                cand.push(bracket(s, b));
            }
        }
        let next = range(&to_cols(&cand), linalg::RANK_RTOL);
        if next.ncols() == g {
            break;
        }
        basis = next;
        generations += 1;
    }
    let g = basis.ncols();
    Ok(ClosureAlgebra { basis, g, generations })
}

/// Structural mobility of a loop system from closure-algebra dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct CkgReport {
    /// Total joint freedom `Σ f_i` (one per joint variable).
    pub dof_sum: usize,
    /// Closure-algebra dimension of each loop.
    pub g: Vec<usize>,
    /// `δ = Σ f_i − Σ g_l`.
    pub delta: i64,
}

/// `δ = Σ f_i − Σ_l g_l` with `g_l` the closure-algebra dimension of loop `l`.
pub fn ckg_mobility(sys: &LoopSystem) -> Result<CkgReport> {
    let g = sys
        .loops
        .iter()
        .map(|l| closure_algebra(l.chain.screws()).map(|a| a.g))
        .collect::<Result<Vec<_>>>()?;
    let delta = sys.n_global as i64 - g.iter().sum::<usize>() as i64;
    Ok(CkgReport { dof_sum: sys.n_global, g, delta })
}

/// Instantaneous mobility `n − rank J(q)` of a loop system.
pub fn instantaneous_mobility(sys: &LoopSystem, q: &DVector<f64>) -> Result<usize> {
    Ok(sys.n_global - rank(&sys.jacobian(q)?, linalg::RANK_RTOL))
}

/// CKG estimate compared with the instantaneous mobility at a closed
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityAssessment {
    pub ckg: CkgReport,
    pub instantaneous: usize,
    /// `δ ≤ 0` while `ker J(q)` is nontrivial: the structural count may
    /// undercount a linkage that is mobile for special geometry.
    pub paradoxical_candidate: bool,
}

/// Structural and instantaneous mobility at `q`.
pub fn assess_mobility(sys: &LoopSystem, q: &DVector<f64>, tol_loop: f64) -> Result<MobilityAssessment> {
    sys.require_closure(q, tol_loop)?;
    let ckg = ckg_mobility(sys)?;
    let instantaneous = instantaneous_mobility(sys, q)?;
    let paradoxical_candidate = ckg.delta <= 0 && instantaneous > 0;
    Ok(MobilityAssessment { ckg, instantaneous, paradoxical_candidate })
}

/// Constraints expressed in closure-algebra coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedConstraints {
    /// `g × 6` projector `Ūᵀ`.
    pub projector: DMatrix<f64>,
    /// `g × n` reduced Jacobian `Ūᵀ J`.
    pub jacobian: DMatrix<f64>,
    pub g: usize,
}

/// Reduce the 6 velocity constraints of a loop to the `g` that can be
/// independent, using the closure algebra of its reference screws.
pub fn reduce_constraints(chain: &Chain, q: &DVector<f64>) -> Result<ReducedConstraints> {
    let alg = closure_algebra(chain.screws())?;
    let svd = alg.basis.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let projector = u.columns(0, alg.g).transpose();
    let jacobian = &projector * jacobian_spatial(chain, q, chain.n())?;
    Ok(ReducedConstraints { projector, jacobian, g: alg.g })
}

/// Constraint maps and minor derivatives of one order range.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumResiduals {
    /// `H^(1..=ν)`.
    pub constraints: Vec<ScrewVec>,
    pub minors: Vec<MinorIndex>,
    /// `minor_derivs[m][i]` = `i`-th time derivative of minor `m`, `i ≤ ν`.
    pub minor_derivs: Vec<Vec<f64>>,
}

/// `H^(1..=ν)` together with every `k_rank`-minor and its derivatives
/// through order `ν`.
pub fn rank_stratum_maps(chain: &Chain, state: &DerivativeStack, k_rank: usize, nu: usize) -> Result<StratumResiduals> {
    let constraints = loop_constraint_map(chain, state, nu)?;
    let minors = MinorIndex::all(k_rank, chain.n());
    let minor_derivs = all_minor_time_derivatives(chain, state, &minors, nu, Execution::default())?;
    Ok(StratumResiduals { constraints, minors, minor_derivs })
}

/// Basis of the first-order cone of the rank-`< k_rank` stratum: the
/// common kernel of `J` and the differentials of all `k_rank`-minors.
pub fn stratum_first_order_space(chain: &Chain, q: &DVector<f64>, k_rank: usize) -> Result<DMatrix<f64>> {
    let n = chain.n();
    let minors = MinorIndex::all(k_rank, n);
    let j = jacobian_spatial(chain, q, n)?;
    let mut rows = vec![j];
    let mut grad = DMatrix::zeros(minors.len(), n);
    for c in 0..n {
        let e = DVector::from_fn(n, |i, _| if i == c { 1.0 } else { 0.0 });
        let d = all_minor_differentials(chain, q, &minors, 1, &e, Execution::default())?;
        for (r, v) in d.iter().enumerate() {
            grad[(r, c)] = v[1];
        }
    }
    rows.push(grad);
    let total: usize = rows.iter().map(|m| m.nrows()).sum();
    let mut stacked = DMatrix::zeros(total, n);
    let mut off = 0;
    for m in rows {
        stacked.rows_mut(off, m.nrows()).copy_from(&m);
        off += m.nrows();
    }
    Ok(nullspace(&stacked, linalg::RANK_RTOL))
}

/// Polynomial system for the local geometry of the rank-`< k_rank`
/// stratum: the c-space polynomials plus, for each `k_rank`-minor, its
/// Taylor polynomial `Σ_{i≤K} dⁱm/i!`.
pub fn local_stratum_poly_system(chain: &Chain, q: &DVector<f64>, k_rank: usize, order: usize, tol_loop: f64) -> Result<PolySystem> {
    let mut sys = cspace_poly_system(chain, q, order, tol_loop)?;
    if order == 0 {
        return Ok(sys);
    }
    let n = chain.n();
    let minors = MinorIndex::all(k_rank, n);
    let mut terms: Vec<Vec<(f64, crate::MultiIndex)>> = vec![Vec::new(); minors.len()];
    for i in 0..=order {
        let fact: f64 = (1..=i).map(|v| v as f64).product();
        let coeffs = homogeneous_coefficients(n, i, minors.len(), |x| {
            let d = all_minor_differentials(chain, q, &minors, i, &DVector::from_column_slice(x), Execution::Sequential)
                .expect("validated input");
            d.iter().map(|v| v[i] / fact).collect()
        });
        for (t, c) in terms.iter_mut().zip(coeffs) {
            t.extend(c);
        }
    }
    sys.equations.extend(
        terms
            .into_iter()
            .map(|t| Polynomial::from_terms(t, COEFF_TOL))
            .filter(|p| !p.is_zero()),
    );
    Ok(sys)
}
