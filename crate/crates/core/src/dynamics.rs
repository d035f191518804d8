//! The quadratic family f_c(z) = z² + c: orbits, periodic cycles and their
//! multipliers, Newton continuation in the parameter, location of parabolic
//! parameters, and classification of real parameters by the critical orbit.

use serde::Serialize;
use thiserror::Error;

use crate::numerics::CompensatedSum;
use crate::scalar::{Real, C};

/// Default escape radius: beyond this an orbit is certified divergent.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e8;
/// Default Newton iteration cap.
pub const DEFAULT_NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("orbit escaped: |z| > {radius} at step {index}")]
    Escape { index: usize, radius: f64 },
    #[error("non-finite value fed to iteration")]
    NonFinite,
    #[error("Newton did not converge after {iters} iterations (residual {residual})")]
    NewtonStalled { iters: usize, residual: f64 },
    #[error("found cycle has minimal period {found} < requested {requested}")]
    NotMinimalPeriod { requested: usize, found: usize },
    #[error("cycle collision during continuation near c = {re} + {im}i (jump {jump} over step {step})")]
    Collision { re: f64, im: f64, jump: f64, step: f64 },
    #[error("no parabolic root located for k = {k} with multiplier target {target}")]
    NoParabolicRoot { k: usize, target: f64 },
}

pub fn f<T: Real>(c: C<T>, z: C<T>) -> C<T> {
    z * z + c
}

pub fn df<T: Real>(z: C<T>) -> C<T> {
    z + z
}

/// Apply f_c^n and its derivative by the chain rule.
pub fn iterate_with_derivative<T: Real>(c: C<T>, z: C<T>, n: usize) -> (C<T>, C<T>) {
    let mut w = z;
    let mut d = C::new(T::one(), T::zero());
    for _ in 0..n {
        d = d * df(w);
        w = f(c, w);
    }
    (w, d)
}

/// A finite forward orbit with chain-rule derivative accumulators.
#[derive(Clone, Debug, Serialize)]
pub struct Orbit<T: Real> {
    pub start: C<T>,
    pub values: Vec<C<T>>,
    /// Σ log|f′| along the orbit (compensated), i.e. log|(f^n)′(start)|.
    pub log_derivative: T,
    /// Chain-rule product Π 2·values[j], j < len−1.
    pub derivative: C<T>,
}

/// Iterate z₀ for n steps, recording the orbit and its derivative.
///
/// Fails with an escape report if the orbit leaves the disk of the given
/// radius (`None` selects the default 1e8).
pub fn iterate<T: Real>(
    c: C<T>,
    z0: C<T>,
    n: usize,
    escape_radius: Option<T>,
) -> Result<Orbit<T>, DynamicsError> {
    if !crate::scalar::finite_c(z0) || !crate::scalar::finite_c(c) {
        return Err(DynamicsError::NonFinite);
    }
    let radius = escape_radius.unwrap_or_else(|| T::of(DEFAULT_ESCAPE_RADIUS));
    let mut values = Vec::with_capacity(n + 1);
    values.push(z0);
    let mut z = z0;
    let mut deriv = C::new(T::one(), T::zero());
    let mut log_d = CompensatedSum::new();
    for j in 0..n {
        if z.norm() > radius {
            return Err(DynamicsError::Escape { index: j, radius: radius.to_f64().unwrap_or(0.0) });
        }
        deriv = deriv * df(z);
        log_d.add(df(z).norm().ln());
        z = f(c, z);
        values.push(z);
    }
    Ok(Orbit { start: z0, values, log_derivative: log_d.value(), derivative: deriv })
}

/// A periodic orbit with its multiplier.
#[derive(Clone, Debug, Serialize)]
pub struct Cycle<T: Real> {
    pub period: usize,
    pub points: Vec<C<T>>,
    pub multiplier: C<T>,
}

impl<T: Real> Cycle<T> {
    /// Residual max |f(points[i]) − points[(i+1) mod k]|.
    pub fn residual(&self, c: C<T>) -> T {
        let k = self.period;
        (0..k)
            .map(|i| (f(c, self.points[i]) - self.points[(i + 1) % k]).norm())
            .fold(T::zero(), T::max)
    }
}

/// Newton solve of f_c^k(z) = z from a seed. Internal helper shared by
/// `find_cycle` and the continuation/classification code.
fn newton_periodic<T: Real>(
    c: C<T>,
    k: usize,
    seed: C<T>,
    tol: T,
    max_iter: usize,
) -> Result<C<T>, DynamicsError> {
    let mut z = seed;
    let mut residual = T::infinity();
    for _ in 0..max_iter {
        let (fz, dfz) = iterate_with_derivative(c, z, k);
        let g = fz - z;
        residual = g.norm();
        if !residual.is_finite() {
            return Err(DynamicsError::NonFinite);
        }
        if residual <= tol {
            return Ok(z);
        }
        let gp = dfz - C::new(T::one(), T::zero());
        if gp.norm() < T::of(1e-300) {
            break;
        }
        z = z - g / gp;
    }
    Err(DynamicsError::NewtonStalled {
        iters: max_iter,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

fn minimal_period<T: Real>(c: C<T>, z: C<T>, k: usize, tol: T) -> usize {
    let mut d = 1;
    while d < k {
        if k % d == 0 {
            let (fz, _) = iterate_with_derivative(c, z, d);
            if (fz - z).norm() <= tol {
                return d;
            }
        }
        d += 1;
    }
    k
}

/// Locate a k-cycle by Newton on f_c^k(z) − z, verify minimality, and return
/// it with the chain-rule multiplier.
///
/// The seed must lie in the Newton basin; a few deterministically perturbed
/// retries are attempted before giving up.
pub fn find_cycle<T: Real>(
    c: C<T>,
    k: usize,
    seed: C<T>,
) -> Result<Cycle<T>, DynamicsError> {
    assert!(k >= 1, "period must be positive");
    let tol = T::of(1e-13);
    let mut last_err = None;
    for attempt in 0..6 {
        let jiggle = T::of(0.03) * T::from_usize(attempt).unwrap();
        let s = seed + C::new(jiggle, jiggle * T::of(0.7));
        match newton_periodic(c, k, s, tol, DEFAULT_NEWTON_MAX_ITER) {
            Ok(z) => {
                let min_p = minimal_period(c, z, k, T::of(1e-8));
                if min_p < k {
                    return Err(DynamicsError::NotMinimalPeriod { requested: k, found: min_p });
                }
                return Ok(cycle_at(c, z, k));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

/// Build the cycle record through one point of a verified k-cycle.
pub fn cycle_at<T: Real>(c: C<T>, z: C<T>, k: usize) -> Cycle<T> {
    let mut points = Vec::with_capacity(k);
    let mut w = z;
    let mut multiplier = C::new(T::one(), T::zero());
    for _ in 0..k {
        points.push(w);
        multiplier = multiplier * df(w);
        w = f(c, w);
    }
    Cycle { period: k, points, multiplier }
}

/// Continue a cycle from c_from to c_to by stepwise Newton correction with
/// step halving, detecting basin jumps (cycle collisions) on the way.
pub fn continue_cycle<T: Real>(
    cycle: &Cycle<T>,
    c_from: C<T>,
    c_to: C<T>,
    steps: usize,
) -> Result<Cycle<T>, DynamicsError> {
    let steps = steps.max(1);
    let k = cycle.period;
    let tol = T::of(1e-13);
    let mut z = cycle.points[0];
    let mut t = T::zero();
    let mut dt = T::one() / T::from_usize(steps).unwrap();
    let min_dt = dt * T::of(2.0).powi(-22);
    let full = c_to - c_from;

    while t < T::one() {
        let dt_eff = dt.min(T::one() - t);
        let c_next = c_from + full * (t + dt_eff);
        match newton_periodic(c_next, k, z, tol, 60) {
            Ok(z_next) => {
                let jump = (z_next - z).norm();
                let step_len = (full * dt_eff).norm();
                if jump > T::of(10.0) * step_len && step_len > T::zero() {
                    if dt_eff > min_dt {
                        dt = dt * T::of(0.5);
                        continue;
                    }
                    return Err(DynamicsError::Collision {
                        re: c_next.re.to_f64().unwrap_or(f64::NAN),
                        im: c_next.im.to_f64().unwrap_or(f64::NAN),
                        jump: jump.to_f64().unwrap_or(f64::NAN),
                        step: step_len.to_f64().unwrap_or(f64::NAN),
                    });
                }
                z = z_next;
                t = t + dt_eff;
            }
            Err(_) if dt_eff > min_dt => {
                dt = dt * T::of(0.5);
            }
            Err(e) => return Err(e),
        }
    }
    // Re-verify minimality at the endpoint: period halving on the path shows
    // up as a collision of cycle points.
    let min_p = minimal_period(c_to, z, k, T::of(1e-8));
    if min_p < k {
        return Err(DynamicsError::NotMinimalPeriod { requested: k, found: min_p });
    }
    Ok(cycle_at(c_to, z, k))
}

/// Multiplier target for a parabolic cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetalKind {
    /// multiplier +1 (one petal)
    OnePetal,
    /// multiplier −1 (two petals)
    TwoPetals,
}

impl PetalKind {
    fn target<T: Real>(self) -> T {
        match self {
            PetalKind::OnePetal => T::one(),
            PetalKind::TwoPetals => -T::one(),
        }
    }
}

/// Real parabolic parameter c₀ where the k-cycle multiplier hits ±1.
///
/// Solves the augmented system {f_c^k(z) = z, (f_c^k)′(z) = target} for
/// (z, c) by 2-d Newton, seeded from a coarse scan of the real axis; the
/// augmented Jacobian is regular at the root even though the cycle equation
/// alone degenerates there.
pub fn parabolic_parameter<T: Real>(k: usize, kind: PetalKind) -> Result<T, DynamicsError> {
    let target: T = kind.target();
    let (mut z, mut cc) = scan_seed(k, target)
        .ok_or(DynamicsError::NoParabolicRoot { k, target: target.to_f64().unwrap_or(0.0) })?;

    for _ in 0..80 {
        let (fz, dz, d2z, dc, ddc) = jet_z_c(cc, z, k);
        let g1 = fz - z;
        let g2 = dz - C::new(target, T::zero());
        if g1.norm() + g2.norm() <= T::of(1e-14) {
            break;
        }
        // Jacobian [[dz−1, dc], [d2z, ddc]] · (δz, δc) = −(g1, g2)
        let a = dz - C::new(T::one(), T::zero());
        let det = a * ddc - dc * d2z;
        if det.norm() < T::of(1e-300) {
            return Err(DynamicsError::NoParabolicRoot {
                k,
                target: target.to_f64().unwrap_or(0.0),
            });
        }
        let dz_step = (g1 * ddc - dc * g2) / det;
        let dc_step = (a * g2 - g1 * d2z) / det;
        z = z - dz_step;
        cc = cc - dc_step;
    }
    let (fz, dz, _, _, _) = jet_z_c(cc, z, k);
    let ok = (fz - z).norm() <= T::of(1e-11)
        && (dz - C::new(target, T::zero())).norm() <= T::of(1e-12);
    if !ok {
        return Err(DynamicsError::NoParabolicRoot { k, target: target.to_f64().unwrap_or(0.0) });
    }
    Ok(cc.re)
}

/// Value and the four first derivatives of f_c^k(z) needed by the parabolic
/// solver: (f^k, ∂_z f^k, ∂_z² f^k, ∂_c f^k, ∂_c ∂_z f^k), by forward
/// accumulation.
fn jet_z_c<T: Real>(c: C<T>, z: C<T>, k: usize) -> (C<T>, C<T>, C<T>, C<T>, C<T>) {
    let one = C::new(T::one(), T::zero());
    let two = T::of(2.0);
    let mut w = z; // f^j
    let mut wz = one; // ∂_z f^j
    let mut wzz = C::new(T::zero(), T::zero()); // ∂_z² f^j
    let mut wc = C::new(T::zero(), T::zero()); // ∂_c f^j
    let mut wzc = C::new(T::zero(), T::zero()); // ∂_c ∂_z f^j
    for _ in 0..k {
        let nw = w * w + c;
        let nwz = w * wz * two;
        let nwzz = (wz * wz + w * wzz) * two;
        let nwc = w * wc * two + one;
        let nwzc = (wc * wz + w * wzc) * two;
        w = nw;
        wz = nwz;
        wzz = nwzz;
        wc = nwc;
        wzc = nwzc;
    }
    (w, wz, wzz, wc, wzc)
}

fn scan_seed<T: Real>(k: usize, target: T) -> Option<(C<T>, C<T>)> {
    // Walk the real axis over the window where the k-cycle stays real,
    // tracking |multiplier − target|. For k ≤ 2 a cycle point has a closed
    // form; larger k falls back to Newton continuation along the scan.
    let one = C::new(T::one(), T::zero());
    let (lo, hi) = match k {
        1 => (-0.9, 0.35),
        2 => (-1.45, -0.8),
        _ => (-1.9, 0.3),
    };
    let mut best: Option<(T, C<T>, C<T>)> = None;
    let n = 600;
    let mut z_prev: Option<C<T>> = None;
    for i in 0..=n {
        let c_re = lo + (hi - lo) * (i as f64) / (n as f64);
        let c = C::new(T::of(c_re), T::zero());
        let candidate = match k {
            1 => Some((one - (one - c * T::of(4.0)).sqrt()) * T::of(0.5)),
            2 => Some((-one + (-C::new(T::of(3.0), T::zero()) - c * T::of(4.0)).sqrt()) * T::of(0.5)),
            _ => {
                let seed = z_prev.unwrap_or_else(|| C::new(T::of(0.1), T::of(0.1)));
                newton_periodic(c, k, seed, T::of(1e-11), 60)
                    .ok()
                    .filter(|&z| minimal_period(c, z, k, T::of(1e-7)) == k)
            }
        };
        if let Some(z) = candidate {
            z_prev = Some(z);
            let (_, dz) = iterate_with_derivative(c, z, k);
            let dist = (dz - C::new(target, T::zero())).norm();
            if best.as_ref().map_or(true, |(b, _, _)| dist < *b) {
                best = Some((dist, z, c));
            }
        } else {
            z_prev = None;
        }
    }
    best.map(|(_, z, c)| (z, c))
}

/// Outcome of iterating the critical orbit at a (real) parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Classification<T: Real> {
    Escaping { n_escape: usize },
    Attracting { period: usize, multiplier: C<T> },
    Undetermined,
}

/// Classify a real parameter by the fate of the critical orbit within the
/// given iteration budget. `Undetermined` is a valid outcome (non-hyperbolic
/// or slowly converging parameters).
pub fn classify_parameter<T: Real>(c: T, budget: usize) -> Classification<T> {
    let cc = C::new(c, T::zero());
    let radius = T::of(DEFAULT_ESCAPE_RADIUS);
    let max_period = 8usize;
    let detect_tol = T::of(1e-6);
    let mut history: Vec<C<T>> = Vec::with_capacity(max_period + 1);
    let mut z = C::new(T::zero(), T::zero());
    for step in 0..budget {
        if z.norm() > radius {
            return Classification::Escaping { n_escape: step };
        }
        if history.len() > max_period {
            history.remove(0);
        }
        history.push(z);
        z = f(cc, z);
        // near-repeat test against the recent window
        if step > 16 {
            for p in 1..=max_period.min(history.len()) {
                let prev = history[history.len() - p];
                if (z - prev).norm() < detect_tol {
                    if let Some(cls) = confirm_attracting(cc, z, p) {
                        return cls;
                    }
                }
            }
        }
    }
    Classification::Undetermined
}

fn confirm_attracting<T: Real>(c: C<T>, seed: C<T>, p: usize) -> Option<Classification<T>> {
    let tol = T::of(1e-13);
    let z = newton_periodic(c, p, seed, tol, 100).ok()?;
    let min_p = minimal_period(c, z, p, T::of(1e-9));
    let z = if min_p < p { newton_periodic(c, min_p, z, tol, 100).ok()? } else { z };
    let (v, d1, d2) = iterate_with_two_derivatives(c, z, min_p);
    // A multiple root of f^p(z) − z (parabolic merger) yields a multiplier
    // indistinguishable from 1 at this precision; bound the multiplier error
    // by the root displacement and refuse to certify inside that band.
    let gp = (d1 - C::new(T::one(), T::zero())).norm();
    if gp < T::of(1e-300) {
        return None;
    }
    let displacement = (v - z).norm() / gp;
    let mult_err = d2.norm() * displacement + T::of(1e-12);
    let cyc = cycle_at(c, z, min_p);
    if cyc.multiplier.norm() < T::one() - T::of(10.0) * mult_err {
        Some(Classification::Attracting { period: min_p, multiplier: cyc.multiplier })
    } else {
        None
    }
}

/// (f_c^n, (f_c^n)′, (f_c^n)″) at z by forward accumulation.
pub fn iterate_with_two_derivatives<T: Real>(c: C<T>, z: C<T>, n: usize) -> (C<T>, C<T>, C<T>) {
    let two = T::of(2.0);
    let mut w = z;
    let mut d1 = C::new(T::one(), T::zero());
    let mut d2 = C::new(T::zero(), T::zero());
    for _ in 0..n {
        let nd2 = (d1 * d1 + w * d2) * two;
        let nd1 = w * d1 * two;
        let nw = w * w + c;
        w = nw;
        d1 = nd1;
        d2 = nd2;
    }
    (w, d1, d2)
}

/// The repelling fixed point β = (1 + √(1−4c))/2, the natural base point on
/// the Julia set for preimage trees.
pub fn beta_fixed_point<T: Real>(c: C<T>) -> C<T> {
    let one = C::new(T::one(), T::zero());
    let four = T::of(4.0);
    let s = (one - c * four).sqrt();
    (one + s) * T::of(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c as cx;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type Cx = C<f64>;

    #[test]
    fn iterate_fixed_point_of_squaring() {
        let o = iterate(cx::<f64>(0.0, 0.0), cx(1.0, 0.0), 3, None).unwrap();
        assert_eq!(o.values.len(), 4);
        for v in &o.values {
            assert_relative_eq!(v.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(v.im, 0.0, epsilon = 1e-15);
        }
        assert_relative_eq!(o.derivative.re, 8.0, epsilon = 1e-12);
        assert_relative_eq!(o.log_derivative, 8.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn iterate_superattracting_two_cycle() {
        let o = iterate(cx::<f64>(-1.0, 0.0), cx(0.0, 0.0), 2, None).unwrap();
        assert_eq!(o.values[0], Cx::new(0.0, 0.0));
        assert_eq!(o.values[1], Cx::new(-1.0, 0.0));
        assert_eq!(o.values[2], Cx::new(0.0, 0.0));
    }

    #[test]
    fn iterate_parabolic_fixed_point() {
        // α = −1/2 at c = −3/4 has (f)'(α) = −1
        let o = iterate(cx::<f64>(-0.75, 0.0), cx(-0.5, 0.0), 1, None).unwrap();
        assert_relative_eq!(o.values[1].re, -0.5, epsilon = 1e-15);
        assert_relative_eq!(o.derivative.re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn iterate_escape_reports_index() {
        match iterate(cx::<f64>(2.0, 0.0), cx(0.0, 0.0), 1000, None) {
            Err(DynamicsError::Escape { index, .. }) => assert!(index < 30),
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn find_cycle_examples() {
        let c0 = find_cycle(cx::<f64>(0.0, 0.0), 1, cx(0.1, 0.0)).unwrap();
        assert!(c0.points[0].norm() < 1e-12);
        assert!(c0.multiplier.norm() < 1e-11);

        // period-2 multiplier is 4(c+1)
        let c2 = find_cycle(cx::<f64>(-1.25, 0.0), 2, cx(0.0, 0.3)).unwrap();
        assert!((c2.multiplier - Cx::new(-1.0, 0.0)).norm() < 1e-8);

        let c1 = find_cycle(cx::<f64>(-0.5, 0.0), 1, cx(-0.3, 0.0)).unwrap();
        let expect = (1.0 - 3.0f64.sqrt()) / 2.0;
        assert_relative_eq!(c1.points[0].re, expect, epsilon = 1e-10);
        assert_relative_eq!(c1.multiplier.re, 1.0 - 3.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn find_cycle_rejects_non_minimal() {
        // at c = 0 the only "period-2 orbit" reachable from a real seed near
        // the fixed point is the fixed point itself
        match find_cycle(cx::<f64>(0.0, 0.0), 2, cx(0.9, 0.0)) {
            Err(DynamicsError::NotMinimalPeriod { found: 1, .. }) => {}
            other => panic!("expected minimality violation, got {other:?}"),
        }
    }

    #[test]
    fn cycle_invariants_on_fuzzed_corpus() {
        // real and complex-seeded cycles for k ≤ 4 at assorted hyperbolic c
        let params = [
            (-1.0, 2usize),
            (-0.2, 1),
            (-1.3, 4),
            (0.1, 1),
            (-1.1, 2),
        ];
        for &(cre, k) in &params {
            let c = Cx::new(cre, 0.0);
            let seeds = [Cx::new(0.3, 0.2), Cx::new(-0.4, 0.1), Cx::new(0.05, -0.3)];
            let mut found = None;
            for s in seeds {
                match find_cycle(c, k, s) {
                    Ok(cyc) => {
                        found = Some(cyc);
                        break;
                    }
                    Err(_) => continue,
                }
            }
            let cyc = match found {
                Some(x) => x,
                None => continue,
            };
            assert!(cyc.residual(c) < 1e-12, "residual at c={cre}, k={k}");
            let prod = cyc.points.iter().fold(Cx::new(1.0, 0.0), |a, &z| a * 2.0 * z);
            assert!((prod - cyc.multiplier).norm() < 1e-10);
        }
    }

    #[test]
    fn continuation_follows_fixed_point() {
        let start = find_cycle(cx::<f64>(0.0, 0.0), 1, cx(0.1, 0.0)).unwrap();
        let cont = continue_cycle(&start, cx(0.0, 0.0), cx(0.1, 0.0), 4).unwrap();
        let expect = (1.0 - 0.6f64.sqrt()) / 2.0;
        assert_relative_eq!(cont.points[0].re, expect, epsilon = 1e-10);
        assert_relative_eq!(cont.multiplier.re, 1.0 - 0.6f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn continuation_matches_vieta_for_two_cycle() {
        // period-2 points satisfy z² + z + c + 1 = 0, multiplier 4(c+1)
        let start = find_cycle(cx::<f64>(-1.0, 0.0), 2, cx(0.1, 0.1)).unwrap();
        let cont = continue_cycle(&start, cx(-1.0, 0.0), cx(-1.2, 0.0), 8).unwrap();
        assert_relative_eq!(cont.multiplier.re, 4.0 * (-1.2 + 1.0), epsilon = 1e-9);
        for p in &cont.points {
            let r = p * p + p + Cx::new(-1.2 + 1.0, 0.0);
            assert!(r.norm() < 1e-9);
        }
    }

    #[test]
    fn continuation_detects_fixed_point_collision() {
        // fixed points collide at c = 1/4
        let start = find_cycle(cx::<f64>(0.2, 0.0), 1, cx(0.3, 0.0)).unwrap();
        match continue_cycle(&start, cx(0.2, 0.0), cx(0.3, 0.0), 8) {
            Err(DynamicsError::Collision { re, .. }) => {
                assert!((re - 0.25).abs() < 0.05, "collision near {re}");
            }
            Err(DynamicsError::NewtonStalled { .. }) => {}
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn continuation_round_trip_is_identity() {
        let start = find_cycle(cx::<f64>(-1.0, 0.0), 2, cx(0.1, 0.1)).unwrap();
        let there = continue_cycle(&start, cx(-1.0, 0.0), cx(-1.15, 0.0), 6).unwrap();
        let back = continue_cycle(&there, cx(-1.15, 0.0), cx(-1.0, 0.0), 6).unwrap();
        let d = (back.points[0] - start.points[0]).norm();
        assert!(d < 1e-9, "round trip moved the cycle by {d}");
    }

    #[test]
    fn parabolic_parameters() {
        let c1: f64 = parabolic_parameter(1, PetalKind::TwoPetals).unwrap();
        assert_relative_eq!(c1, -0.75, epsilon = 1e-12);
        let c2: f64 = parabolic_parameter(2, PetalKind::TwoPetals).unwrap();
        assert_relative_eq!(c2, -1.25, epsilon = 1e-12);
        let c3: f64 = parabolic_parameter(1, PetalKind::OnePetal).unwrap();
        assert_relative_eq!(c3, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn classification_examples() {
        assert!(matches!(
            classify_parameter(2.0f64, 10_000),
            Classification::Escaping { .. }
        ));
        match classify_parameter(-1.0f64, 10_000) {
            Classification::Attracting { period, multiplier } => {
                assert_eq!(period, 2);
                assert!(multiplier.norm() < 1e-10);
            }
            other => panic!("expected attracting, got {other:?}"),
        }
        match classify_parameter(-0.5f64, 100_000) {
            Classification::Attracting { period, multiplier } => {
                assert_eq!(period, 1);
                assert_relative_eq!(multiplier.re, 1.0 - 3.0f64.sqrt(), epsilon = 1e-6);
            }
            other => panic!("expected attracting, got {other:?}"),
        }
        // the parabolic boundary parameter itself stays undetermined
        assert_eq!(classify_parameter(-0.75f64, 50_000), Classification::Undetermined);
    }

    #[test]
    fn real_cycles_close_under_conjugation() {
        // attracting cycles at real parameters are conjugation-closed point sets
        for &(cre, k) in &[(-1.0f64, 2usize), (-0.5, 1), (-1.3, 4)] {
            let c = Cx::new(cre, 0.0);
            let cyc = match find_cycle(c, k, Cx::new(0.1, 0.05)) {
                Ok(x) => x,
                Err(_) => continue,
            };
            for p in &cyc.points {
                let conj = p.conj();
                let closest = cyc
                    .points
                    .iter()
                    .map(|q| (q - conj).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(closest < 1e-9, "conjugate of {p} missing from cycle at c={cre}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn chain_rule_matches_stepwise_product(
            cre in -0.6f64..0.24,
            cim in -0.05f64..0.05,
            zre in -0.5f64..0.5,
            zim in -0.5f64..0.5,
            n in 0usize..20,
        ) {
            let c = Cx::new(cre, cim);
            let z0 = Cx::new(zre, zim);
            if let Ok(o) = iterate(c, z0, n, None) {
                let mut prod = Cx::new(1.0, 0.0);
                for j in 0..n {
                    prod = prod * 2.0 * o.values[j];
                }
                let err = (prod - o.derivative).norm();
                let scale = prod.norm().max(1.0);
                prop_assert!(err <= 1e-12 * scale);
                for j in 0..n {
                    let step = o.values[j] * o.values[j] + c;
                    prop_assert_eq!(step, o.values[j + 1]);
                }
            }
        }

        #[test]
        fn conjugate_seed_gives_conjugate_cycle(
            cre in -1.3f64..0.2,
            k in 1usize..4,
            sre in -0.5f64..0.5,
            sim in 0.01f64..0.5,
        ) {
            let c = Cx::new(cre, 0.0);
            let s = Cx::new(sre, sim);
            let a = find_cycle(c, k, s);
            let b = find_cycle(c, k, s.conj());
            if let (Ok(a), Ok(b)) = (a, b) {
                // conjugation symmetry of the family at real c
                let conj_points: Vec<Cx> = a.points.iter().map(|p| p.conj()).collect();
                for p in &b.points {
                    let closest = conj_points.iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min);
                    prop_assert!(closest < 1e-8);
                }
            }
        }
    }
}
