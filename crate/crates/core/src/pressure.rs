//! Topological pressure, the Bowen root solve for the Julia-set dimension,
//! Gibbs-weighted periodic-point integrals, and the pressure-derivative
//! formula for d′(c).
//!
//! Two independent pressure estimators are kept side by side: the preimage
//! tree (1/n)·log Σ |(f^n)′|^{-t} over all 2^n inverse branches, and the
//! periodic-point sum over Fix(f^n). All reductions are deterministic: work
//! splits over fixed-index subtrees/chunks and merges in a fixed order, so
//! results are bit-identical for any worker-thread count.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{self, Classification, DynamicsError};
use crate::numerics::{log_sum_exp_scaled, weighted_sums, CompensatedSum};
use crate::scalar::{Real, C};

#[derive(Debug, Error)]
pub enum PressureError {
    #[error("tree depth {n} exceeds the cap {cap}")]
    DepthCap { n: usize, cap: usize },
    #[error("inverse branch passed through the critical point at depth {depth}")]
    CriticalPointHit { depth: usize },
    #[error("periodic-point refinement stalled ({failures} of {total} seeds)")]
    RefinementStalled { failures: usize, total: usize },
    #[error("degenerate periodic points (near-neutral multiplier or root clustering)")]
    DegenerateRoots,
    #[error("parameter is not hyperbolic: {got:?}")]
    NonHyperbolic { got: String },
    #[error("pressure bracket failed: P({lo}) = {p_lo}, P({hi}) = {p_hi}")]
    BracketFailure { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },
    #[error("extrapolation needs estimates sharing (c, t, method) and ≥ 2 levels")]
    MixedEstimates,
    #[error("periodic point continuation collided near c = {c}")]
    ContinuationCollision { c: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Which pressure estimator produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Preimage,
    Periodic,
    Both,
}

/// One pressure evaluation at (c, t, level).
#[derive(Clone, Debug, Serialize)]
pub struct PressureEstimate<T: Real> {
    pub c: C<T>,
    pub t: T,
    pub level: usize,
    /// nats per iterate
    pub value: T,
    pub method: Method,
}

/// Preimage tree of depth n rooted at z0: per-leaf log|(f^n)′| accumulated
/// along the branch, leaf index = branch itinerary.
pub struct PreimageTree<T: Real> {
    pub c: C<T>,
    pub z0: C<T>,
    pub n: usize,
    log_derivs: Vec<T>,
}

const PREIMAGE_DEPTH_CAP: usize = 24;
const PERIODIC_DEPTH_CAP: usize = 18;

/// Square root branch: bit 0 takes the principal root, bit 1 its negative.
fn preimage_branch<T: Real>(w: C<T>, c: C<T>, bit: usize) -> C<T> {
    let r = (w - c).sqrt();
    if bit == 0 {
        r
    } else {
        -r
    }
}

impl<T: Real> PreimageTree<T> {
    pub fn build(c: C<T>, z0: C<T>, n: usize) -> Result<Self, PressureError> {
        if n > PREIMAGE_DEPTH_CAP {
            return Err(PressureError::DepthCap { n, cap: PREIMAGE_DEPTH_CAP });
        }
        let split = n.min(4);
        let subtrees = 1usize << split;
        let parts: Vec<Result<Vec<T>, PressureError>> = (0..subtrees)
            .into_par_iter()
            .map(|s| {
                let mut w = z0;
                let mut acc = T::zero();
                for d in 0..split {
                    let bit = (s >> (split - 1 - d)) & 1;
                    w = preimage_branch(w, c, bit);
                    if w.norm() <= T::of(1e-14) {
                        return Err(PressureError::CriticalPointHit { depth: d + 1 });
                    }
                    acc = acc + (w.norm() * T::of(2.0)).ln();
                }
                let mut out = Vec::with_capacity(1 << (n - split));
                collect_leaves(c, w, acc, n - split, split, &mut out)?;
                Ok(out)
            })
            .collect();
        let mut log_derivs = Vec::with_capacity(1 << n);
        for p in parts {
            log_derivs.extend(p?);
        }
        Ok(PreimageTree { c, z0, n, log_derivs })
    }

    /// Leaf values z̄ themselves (periodic-point seeds); same itinerary order.
    pub fn leaves(c: C<T>, z0: C<T>, n: usize) -> Result<Vec<C<T>>, PressureError> {
        if n > PREIMAGE_DEPTH_CAP {
            return Err(PressureError::DepthCap { n, cap: PREIMAGE_DEPTH_CAP });
        }
        let split = n.min(4);
        let subtrees = 1usize << split;
        let parts: Vec<Result<Vec<C<T>>, PressureError>> = (0..subtrees)
            .into_par_iter()
            .map(|s| {
                let mut w = z0;
                for d in 0..split {
                    let bit = (s >> (split - 1 - d)) & 1;
                    w = preimage_branch(w, c, bit);
                    if w.norm() <= T::of(1e-14) {
                        return Err(PressureError::CriticalPointHit { depth: d + 1 });
                    }
                }
                let mut out = Vec::with_capacity(1 << (n - split));
                collect_leaf_values(c, w, n - split, split, &mut out)?;
                Ok(out)
            })
            .collect();
        let mut leaves = Vec::with_capacity(1 << n);
        for p in parts {
            leaves.extend(p?);
        }
        Ok(leaves)
    }

    /// P_n(t) = (1/n)·log Σ_leaves |(f^n)′|^{-t}, by deterministic
    /// log-sum-exp.
    pub fn pressure(&self, t: T) -> T {
        log_sum_exp_scaled(&self.log_derivs, -t) / T::from_usize(self.n).unwrap()
    }

    /// Σ_leaves |(f^n)′|^{-t} (the conformal-normalization sum e^{n·P}).
    pub fn weight_sum(&self, t: T) -> T {
        log_sum_exp_scaled(&self.log_derivs, -t).exp()
    }

    pub fn estimate(&self, t: T) -> PressureEstimate<T> {
        PressureEstimate {
            c: self.c,
            t,
            level: self.n,
            value: self.pressure(t),
            method: Method::Preimage,
        }
    }
}

fn collect_leaves<T: Real>(
    c: C<T>,
    w: C<T>,
    acc: T,
    depth_left: usize,
    depth_done: usize,
    out: &mut Vec<T>,
) -> Result<(), PressureError> {
    if depth_left == 0 {
        out.push(acc);
        return Ok(());
    }
    for bit in 0..2 {
        let u = preimage_branch(w, c, bit);
        if u.norm() <= T::of(1e-14) {
            return Err(PressureError::CriticalPointHit { depth: depth_done + 1 });
        }
        collect_leaves(c, u, acc + (u.norm() * T::of(2.0)).ln(), depth_left - 1, depth_done + 1, out)?;
    }
    Ok(())
}

fn collect_leaf_values<T: Real>(
    c: C<T>,
    w: C<T>,
    depth_left: usize,
    depth_done: usize,
    out: &mut Vec<C<T>>,
) -> Result<(), PressureError> {
    if depth_left == 0 {
        out.push(w);
        return Ok(());
    }
    for bit in 0..2 {
        let u = preimage_branch(w, c, bit);
        if u.norm() <= T::of(1e-14) {
            return Err(PressureError::CriticalPointHit { depth: depth_done + 1 });
        }
        collect_leaf_values(c, u, depth_left - 1, depth_done + 1, out)?;
    }
    Ok(())
}

/// Preimage-tree pressure estimate; z0 defaults to the repelling β fixed
/// point when `None`.
pub fn preimage_pressure<T: Real>(
    c: C<T>,
    t: T,
    n: usize,
    z0: Option<C<T>>,
) -> Result<PressureEstimate<T>, PressureError> {
    let z0 = z0.unwrap_or_else(|| dynamics::beta_fixed_point(c));
    Ok(PreimageTree::build(c, z0, n)?.estimate(t))
}

/// The repelling part of Fix(f^n): points, multipliers (f^n)′, and their
/// logs; found by Newton refinement of every depth-n preimage leaf of β.
pub struct PeriodicPoints<T: Real> {
    pub c: C<T>,
    pub n: usize,
    pub points: Vec<C<T>>,
    pub multipliers: Vec<C<T>>,
    pub log_mults: Vec<T>,
}

impl<T: Real> PeriodicPoints<T> {
    pub fn build(c: C<T>, n: usize) -> Result<Self, PressureError> {
        if n > PERIODIC_DEPTH_CAP {
            return Err(PressureError::DepthCap { n, cap: PERIODIC_DEPTH_CAP });
        }
        let beta = dynamics::beta_fixed_point(c);
        let total = 1usize << n;
        // One periodic point per branch code, by closed-loop inverse
        // iteration: seed the backward path from the preimage tree, then
        // relax it with closest-preimage pullback laps (a contraction along
        // repelling orbits, immune to square-root branch-cut conventions).
        let refined: Vec<Option<C<T>>> = (0..total)
            .into_par_iter()
            .map(|code| periodic_by_inverse_laps(c, beta, code, n))
            .collect();
        let failures = refined.iter().filter(|r| r.is_none()).count();
        if failures * 50 > total {
            return Err(PressureError::RefinementStalled { failures, total });
        }
        let mut pts: Vec<C<T>> = refined.into_iter().flatten().collect();
        // deterministic dedup: sort lexicographically, group within 1e-10
        pts.sort_by(|a, b| {
            a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
        });
        let tol = T::of(1e-10);
        let mut unique: Vec<C<T>> = Vec::with_capacity(pts.len());
        for p in pts {
            let dup = unique
                .iter()
                .rev()
                .take_while(|q| (p.re - q.re).abs() <= tol)
                .any(|q| (p - q).norm() <= tol);
            if !dup {
                unique.push(p);
            }
        }
        let mut points = Vec::with_capacity(unique.len());
        let mut multipliers = Vec::with_capacity(unique.len());
        let mut log_mults = Vec::with_capacity(unique.len());
        for z in unique {
            let (_, d) = dynamics::iterate_with_derivative(c, z, n);
            // a multiplier this close to 1 signals a parabolic merger the
            // refinement cannot separate
            if (d - C::new(T::one(), T::zero())).norm() < T::of(1e-7) {
                return Err(PressureError::DegenerateRoots);
            }
            if d.norm() <= T::one() {
                continue; // attracting or neutral: not on the Julia set
            }
            points.push(z);
            multipliers.push(d);
            log_mults.push(d.norm().ln());
        }
        Ok(PeriodicPoints { c, n, points, multipliers, log_mults })
    }

    /// (1/n)·log Σ |(f^n)′|^{-t} over the repelling points; at t = 0 the
    /// attracting cycle (absent from the repelling list) is counted back in,
    /// since every fixed point of f^n carries unit weight there.
    pub fn pressure(&self, t: T) -> T {
        let n_inv = T::one() / T::from_usize(self.n).unwrap();
        if t == T::zero() {
            let mut count = self.points.len();
            if self.c.im == T::zero() {
                if let Classification::Attracting { period, .. } =
                    dynamics::classify_parameter(self.c.re, 100_000)
                {
                    if self.n % period == 0 {
                        count += period;
                    }
                }
            }
            return (T::from_usize(count).unwrap()).ln() * n_inv;
        }
        log_sum_exp_scaled(&self.log_mults, -t) * n_inv
    }

    pub fn estimate(&self, t: T) -> PressureEstimate<T> {
        PressureEstimate {
            c: self.c,
            t,
            level: self.n,
            value: self.pressure(t),
            method: Method::Periodic,
        }
    }
}

/// Closed-loop inverse iteration for the periodic point of branch code
/// `code`: pull the β fixed point down the coded tree path once, close the
/// loop, and relax each path node to the preimage of its predecessor nearest
/// its previous position.
fn periodic_by_inverse_laps<T: Real>(
    c: C<T>,
    beta: C<T>,
    code: usize,
    n: usize,
) -> Option<C<T>> {
    let mut path = Vec::with_capacity(n + 1);
    path.push(beta);
    let mut w = beta;
    for d in 0..n {
        let bit = (code >> (n - 1 - d)) & 1;
        w = preimage_branch(w, c, bit);
        if w.norm() <= T::of(1e-14) {
            return None;
        }
        path.push(w);
    }
    for _lap in 0..200 {
        path[0] = path[n];
        let mut moved_max = T::zero();
        for d in 1..=n {
            let r = (path[d - 1] - c).sqrt();
            let cand = if (r - path[d]).norm() <= (-r - path[d]).norm() { r } else { -r };
            if cand.norm() <= T::of(1e-14) {
                return None;
            }
            moved_max = moved_max.max((cand - path[d]).norm());
            path[d] = cand;
        }
        if moved_max <= T::of(1e-15) * (T::one() + path[n].norm()) {
            // residual |f^n(p) − p| equals the loop-closure gap here
            return Some(path[n]);
        }
    }
    // slow contraction (near-neutral multiplier): hand the near-converged
    // point to Newton, which is safely in-basin by now
    refine_periodic(c, path[n], n)
}

/// Continue a periodic point from `c_old` to `c_new` (small parameter
/// moves): seed the closed-loop relaxation with the orbit at the old
/// parameter, which keeps the itinerary pinned.
fn continue_periodic<T: Real>(c_old: C<T>, c_new: C<T>, p: C<T>, n: usize) -> Option<C<T>> {
    let mut path = Vec::with_capacity(n + 1);
    // path[d] = f^{n-d}(p) at the old parameter, so f(path[d]) = path[d-1]
    let mut orbit = Vec::with_capacity(n);
    let mut w = p;
    for _ in 0..n {
        orbit.push(w);
        w = dynamics::f(c_old, w);
    }
    path.push(p);
    for d in 1..n {
        path.push(orbit[n - d]);
    }
    path.push(p);
    for _lap in 0..200 {
        path[0] = path[n];
        let mut moved_max = T::zero();
        for d in 1..=n {
            let r = (path[d - 1] - c_new).sqrt();
            let cand = if (r - path[d]).norm() <= (-r - path[d]).norm() { r } else { -r };
            if cand.norm() <= T::of(1e-14) {
                return None;
            }
            moved_max = moved_max.max((cand - path[d]).norm());
            path[d] = cand;
        }
        if moved_max <= T::of(1e-15) * (T::one() + path[n].norm()) {
            return Some(path[n]);
        }
    }
    refine_periodic(c_new, path[n], n)
}

fn refine_periodic<T: Real>(c: C<T>, seed: C<T>, n: usize) -> Option<C<T>> {
    // G′ = (f^n)′ − 1 is exponentially large on repelling points, so the
    // attainable residual floor is |G′|·ε·|z|; convergence is judged on the
    // Newton step, not the residual.
    let mut z = seed;
    for _ in 0..80 {
        let (fz, dfz) = dynamics::iterate_with_derivative(c, z, n);
        let g = fz - z;
        if !crate::scalar::finite_c(g) {
            return None;
        }
        let gp = dfz - C::new(T::one(), T::zero());
        if gp.norm() < T::of(1e-30) {
            return None;
        }
        let step = g / gp;
        if step.norm() <= T::of(1e-14) * (T::one() + z.norm()) {
            return Some(z - step);
        }
        // leaf seeds are good; clamp runaway steps instead of diverging
        let step = if step.norm() > T::of(0.5) { step * (T::of(0.5) / step.norm()) } else { step };
        z = z - step;
    }
    None
}

/// Periodic-point pressure estimate.
pub fn periodic_pressure<T: Real>(
    c: C<T>,
    t: T,
    n: usize,
) -> Result<PressureEstimate<T>, PressureError> {
    Ok(PeriodicPoints::build(c, n)?.estimate(t))
}

/// Accelerated limit of a pressure-level sequence.
///
/// Preimage levels carry an O(1/n) offset (the branch sums equal
/// K·e^{nP} with a base-point constant K), which linear Richardson in 1/n
/// removes exactly: P̂ = (n₂·P_{n₂} − n₁·P_{n₁})/(n₂ − n₁). Periodic-point
/// levels converge geometrically and go through Aitken Δ², falling back to
/// the last value when the tail is not monotone-contracting.
pub fn extrapolate_pressure<T: Real>(
    estimates: &[PressureEstimate<T>],
) -> Result<T, PressureError> {
    if estimates.len() < 2 {
        return Err(PressureError::MixedEstimates);
    }
    let c0 = estimates[0].c;
    let t0 = estimates[0].t;
    let m0 = estimates[0].method;
    for e in estimates {
        if e.c != c0 || e.t != t0 || e.method != m0 {
            return Err(PressureError::MixedEstimates);
        }
    }
    let values: Vec<T> = estimates.iter().map(|e| e.value).collect();
    match m0 {
        Method::Preimage => {
            let levels: Vec<usize> = estimates.iter().map(|e| e.level).collect();
            Ok(richardson_tail(&levels, &values))
        }
        _ => Ok(aitken_tail(&values)),
    }
}

/// Linear Richardson in 1/n on the last two levels; exact for sequences of
/// the form P + K/n.
pub fn richardson_tail<T: Real>(levels: &[usize], values: &[T]) -> T {
    let m = values.len();
    if m < 2 || levels[m - 1] == levels[m - 2] {
        return values[m - 1];
    }
    let n2 = T::from_usize(levels[m - 1]).unwrap();
    let n1 = T::from_usize(levels[m - 2]).unwrap();
    (n2 * values[m - 1] - n1 * values[m - 2]) / (n2 - n1)
}

/// Aitken Δ² on the last three values, guarded for constant and
/// non-contracting tails.
pub fn aitken_tail<T: Real>(values: &[T]) -> T {
    let m = values.len();
    let last = values[m - 1];
    if m < 3 {
        return last;
    }
    let (x0, x1, x2) = (values[m - 3], values[m - 2], last);
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let dd = d2 - d1;
    // monotone-contracting tail: same signs, shrinking steps
    if d1 == T::zero() || d2 == T::zero() || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return last;
    }
    if dd.abs() < T::of(1e-300) {
        return last;
    }
    x2 - d2 * d2 / dd
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BowenOptions<T: Real> {
    pub method: Method,
    /// top tree depth; the solver uses levels (top−4, top−2, top)
    pub level: usize,
    pub bracket: (T, T),
    pub classify_budget: usize,
}

impl<T: Real> Default for BowenOptions<T> {
    fn default() -> Self {
        BowenOptions {
            method: Method::Preimage,
            level: 16,
            bracket: (T::of(0.5), T::of(2.0)),
            classify_budget: 400_000,
        }
    }
}

/// The Bowen root d(c): unique zero of the extrapolated pressure t ↦ P(c, t).
#[derive(Clone, Debug, Serialize)]
pub struct DimensionResult<T: Real> {
    pub c: T,
    pub dimension: T,
    pub level: usize,
    pub uncertainty: T,
    pub method: Method,
    /// residual of the extrapolated pressure at the root
    pub residual: T,
    /// the other method's dimension when method = Both
    pub cross_check: Option<T>,
}

fn solver_levels(top: usize) -> Vec<usize> {
    let mut v = Vec::new();
    for step in [4usize, 2, 0] {
        if top > step && top - step >= 4 {
            v.push(top - step);
        }
    }
    v.dedup();
    if v.is_empty() {
        v.push(top.max(4));
    }
    v
}

enum LevelSource<T: Real> {
    Trees(Vec<PreimageTree<T>>),
    Points(Vec<PeriodicPoints<T>>),
}

impl<T: Real> LevelSource<T> {
    fn levels(&self) -> Vec<usize> {
        match self {
            LevelSource::Trees(ts) => ts.iter().map(|t| t.n).collect(),
            LevelSource::Points(ps) => ps.iter().map(|p| p.n).collect(),
        }
    }

    fn values(&self, t: T) -> Vec<T> {
        match self {
            LevelSource::Trees(ts) => ts.iter().map(|tr| tr.pressure(t)).collect(),
            LevelSource::Points(ps) => ps.iter().map(|p| p.pressure(t)).collect(),
        }
    }

    /// Extrapolated pressure over the top two levels (smooth in t).
    fn extrapolated_pressure(&self, t: T) -> T {
        let values = self.values(t);
        match self {
            LevelSource::Trees(_) => richardson_tail(&self.levels(), &values),
            LevelSource::Points(_) => aitken_tail(&values),
        }
    }

    /// The same extrapolation shifted one level down, for spread estimates.
    fn lower_pressure(&self, t: T) -> T {
        let values = self.values(t);
        let levels = self.levels();
        let m = values.len();
        if m < 3 {
            return values[m - 1];
        }
        match self {
            LevelSource::Trees(_) => richardson_tail(&levels[..m - 1], &values[..m - 1]),
            LevelSource::Points(_) => aitken_tail(&values[..m - 1]),
        }
    }
}

fn build_source<T: Real>(
    c: C<T>,
    method: Method,
    top: usize,
) -> Result<LevelSource<T>, PressureError> {
    match method {
        Method::Preimage => {
            let beta = dynamics::beta_fixed_point(c);
            let trees = solver_levels(top)
                .into_iter()
                .map(|n| PreimageTree::build(c, beta, n))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LevelSource::Trees(trees))
        }
        Method::Periodic => {
            let pts = solver_levels(top.min(PERIODIC_DEPTH_CAP))
                .into_iter()
                .map(|n| PeriodicPoints::build(c, n))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LevelSource::Points(pts))
        }
        Method::Both => unreachable!("Both splits before building"),
    }
}

fn root_solve<T: Real, F: Fn(T) -> T>(
    p: F,
    bracket: (T, T),
) -> Result<(T, T), PressureError> {
    let (mut lo, mut hi) = bracket;
    let (p_lo, p_hi) = (p(lo), p(hi));
    if !(p_lo > T::zero() && p_hi < T::zero()) {
        return Err(PressureError::BracketFailure {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
            p_lo: p_lo.to_f64().unwrap_or(f64::NAN),
            p_hi: p_hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    // bisection to width 1e-4 (pressure is decreasing in t)
    while hi - lo > T::of(1e-4) {
        let mid = (lo + hi) * T::of(0.5);
        if p(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // secant polish
    let mut a = lo;
    let mut b = hi;
    let mut fa = p(a);
    let mut fb = p(b);
    for _ in 0..60 {
        if fb.abs() <= T::of(1e-11) {
            return Ok((b, fb.abs()));
        }
        let den = fb - fa;
        if den.abs() < T::of(1e-300) {
            break;
        }
        let c_new = b - fb * (b - a) / den;
        let c_new = c_new.max(lo - T::of(1e-3)).min(hi + T::of(1e-3));
        a = b;
        fa = fb;
        b = c_new;
        fb = p(b);
    }
    // fall back to deep bisection if the polish stalled (e.g. extrapolation
    // switching between branches)
    while hi - lo > T::of(1e-13) {
        let mid = (lo + hi) * T::of(0.5);
        if p(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = (lo + hi) * T::of(0.5);
    Ok((root, p(root).abs()))
}

/// Solve P(c, t) = 0 for the Hausdorff dimension of the Julia set at a real
/// hyperbolic parameter.
pub fn bowen_dimension<T: Real>(
    c: T,
    opts: &BowenOptions<T>,
) -> Result<DimensionResult<T>, PressureError> {
    match dynamics::classify_parameter(c, opts.classify_budget) {
        Classification::Attracting { .. } => {}
        other => {
            return Err(PressureError::NonHyperbolic { got: format!("{other:?}") });
        }
    }
    let cc = C::new(c, T::zero());
    let (main_method, cross) = match opts.method {
        Method::Both => (Method::Preimage, Some(Method::Periodic)),
        m => (m, None),
    };
    let source = build_source(cc, main_method, effective_level(main_method, opts.level))?;
    let (root, residual) = root_solve(|t| source.extrapolated_pressure(t), opts.bracket)?;
    let (root_low, _) = root_solve(|t| source.lower_pressure(t), opts.bracket)?;
    let mut uncertainty = (root - root_low).abs() + T::of(1e-9);
    let mut cross_value = None;
    if let Some(m2) = cross {
        let source2 = build_source(cc, m2, effective_level(m2, opts.level))?;
        let (root2, _) = root_solve(|t| source2.extrapolated_pressure(t), opts.bracket)?;
        cross_value = Some(root2);
        uncertainty = uncertainty.max((root - root2).abs());
    }
    Ok(DimensionResult {
        c,
        dimension: root,
        level: effective_level(main_method, opts.level),
        uncertainty,
        method: opts.method,
        residual,
        cross_check: cross_value,
    })
}

fn effective_level(method: Method, level: usize) -> usize {
    match method {
        Method::Periodic => level.min(PERIODIC_DEPTH_CAP).min(14),
        _ => level,
    }
}

/// Gibbs-weighted average over Fix(f^n): Σ g_n(z)·w(z) / Σ w(z) with
/// w = |(f^n)′|^{-t} and g_n the Birkhoff average of the observable.
#[derive(Clone, Debug, Serialize)]
pub struct GibbsEstimate<T: Real> {
    pub c: T,
    pub t: T,
    pub level: usize,
    /// Σ g·w in the max-shifted weight scale
    pub numerator: T,
    /// Σ w in the same scale (positive)
    pub mass: T,
    pub value: T,
}

pub fn gibbs_integral<T: Real, G: Fn(C<T>) -> T + Sync>(
    c: T,
    t: T,
    observable: G,
    n: usize,
) -> Result<GibbsEstimate<T>, PressureError> {
    let pts = PeriodicPoints::build(C::new(c, T::zero()), n)?;
    gibbs_over_points(&pts, t, observable)
}

fn gibbs_over_points<T: Real, G: Fn(C<T>) -> T + Sync>(
    pts: &PeriodicPoints<T>,
    t: T,
    observable: G,
) -> Result<GibbsEstimate<T>, PressureError> {
    let n = pts.n;
    let birkhoff: Vec<T> = pts
        .points
        .par_iter()
        .map(|&z| {
            let mut acc = CompensatedSum::new();
            let mut w = z;
            for _ in 0..n {
                acc.add(observable(w));
                w = dynamics::f(pts.c, w);
            }
            acc.value() / T::from_usize(n).unwrap()
        })
        .collect();
    let log_w: Vec<T> = pts.log_mults.iter().map(|&l| -t * l).collect();
    let (num, mass) = weighted_sums(&birkhoff, &log_w);
    Ok(GibbsEstimate { c: pts.c.re, t, level: n, numerator: num, mass, value: num / mass })
}

/// d′(c) by the pressure-derivative formula: −d(c)·⟨∂_c log|f′(z(c))|⟩ / ⟨log|f′|⟩,
/// Gibbs averages at exponent t = d(c) over Fix(f^n), each periodic point
/// continued to c ± h by Newton and differentiated centrally.
pub fn derivative_via_formula<T: Real>(
    c: T,
    h: T,
    n: usize,
    opts: &BowenOptions<T>,
) -> Result<T, PressureError> {
    let d = bowen_dimension(c, opts)?.dimension;
    let cc = C::new(c, T::zero());
    let pts = PeriodicPoints::build(cc, n)?;
    let cp = C::new(c + h, T::zero());
    let cm = C::new(c - h, T::zero());
    let shifted: Vec<Option<(C<T>, C<T>)>> = pts
        .points
        .par_iter()
        .map(|&z| {
            let zp = continue_periodic(cc, cp, z, n)?;
            let zm = continue_periodic(cc, cm, z, n)?;
            let moved = (zp - z).norm().max((zm - z).norm());
            if moved > T::of(0.25) {
                return None;
            }
            Some((zp, zm))
        })
        .collect();
    if shifted.iter().any(|s| s.is_none()) {
        return Err(PressureError::ContinuationCollision { c: c.to_f64().unwrap_or(f64::NAN) });
    }
    // ∂/∂c log|f′(z(c))| = ∂/∂c log|2·z(c)| by central difference
    let dlog: Vec<T> = shifted
        .iter()
        .map(|s| {
            let (zp, zm) = s.unwrap();
            (zp.norm().ln() - zm.norm().ln()) / (h + h)
        })
        .collect();
    let log_w: Vec<T> = pts.log_mults.iter().map(|&l| -d * l).collect();
    let (num, mass) = weighted_sums(&dlog, &log_w);
    // denominator: Lyapunov exponent ⟨log|f′|⟩ = ⟨(1/n)·log|(f^n)′|⟩
    let lyap: Vec<T> = pts.log_mults.iter().map(|&l| l / T::from_usize(n).unwrap()).collect();
    let (den, _) = weighted_sums(&lyap, &log_w);
    Ok(-d * (num / mass) / (den / mass))
}
