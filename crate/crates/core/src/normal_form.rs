//! The conjugated return map near a (near-)parabolic k-cycle:
//! F_λ(z) = λz + az² + bz³ + …, its scaling constant A = √(a²+b), the small
//! period-2 orbit p_λ^±, the Möbius straightening h_λ, Fatou coordinates
//! Z_λ, sector membership, and the near-translation check for F̂_λ².

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{self, Cycle, DynamicsError};
use crate::jet::orbit_jet;
use crate::numerics::{neg_ln1m_over_w, x_over_expm1};
use crate::scalar::{Real, C};

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error("point is not on a {k}-cycle at this parameter (residual {residual})")]
    NotOnCycle { k: usize, residual: f64 },
    #[error("quadratic coefficient a(c0) vanished; wrong cycle point or not a parabolic cycle")]
    DegenerateQuadratic,
    #[error("multiplier at c0 is {m}, not -1; not a two-petal parabolic parameter")]
    NotTwoPetal { m: f64 },
    #[error("a² + b must be positive at c0 (got {val})")]
    ScaleNotPositive { val: f64 },
    #[error("cycle continuation failed: {0}")]
    Continuation(#[from] DynamicsError),
    #[error("small-cycle Newton failed to converge")]
    SmallCycleStalled,
    #[error("small cycle not of size O(√|δ|): |p| = {p}, √|δ| = {sqrt_delta}")]
    SmallCycleScale { p: f64, sqrt_delta: f64 },
    #[error("|δ| = {delta} outside the supported range for this operation")]
    DeltaRange { delta: f64 },
    #[error("evaluation at the Möbius pole")]
    MobiusPole,
    #[error("Fatou coordinate hit the logarithm branch cut")]
    BranchCut,
    #[error("orbit left the sector during the translation check at step {step}")]
    SectorEscape { step: usize },
    #[error("invalid sector parameters: need 0 < θ < π/2 and r > 0")]
    BadSector,
}

/// Which realization of the family backs a [`NormalForm`].
#[derive(Clone, Debug)]
enum MapKind<T: Real> {
    /// Exact cubic model λz + az² + bz³ (for k = 1 this is the conjugated
    /// map itself, b = 0). ∂F/∂λ = z and ∂F′/∂λ = 1 exactly.
    Model,
    /// Return map of f_c^k conjugated by translation and scaling; evaluated
    /// through the quadratic family itself, not the truncated polynomial.
    Conjugated(Box<ConjugatedMap<T>>),
}

#[derive(Clone, Debug)]
struct ConjugatedMap<T: Real> {
    /// scale s_c: z ↦ z·a(c)/a(c0)
    sigma: C<T>,
    /// dλ/dc at c, from continued-cycle multipliers
    lambda_prime: T,
    /// c ± h_c data for ∂/∂λ by central difference
    plus: ShiftedReturnMap<T>,
    minus: ShiftedReturnMap<T>,
    h_c: T,
}

#[derive(Clone, Debug)]
struct ShiftedReturnMap<T: Real> {
    c: C<T>,
    alpha: C<T>,
    sigma: C<T>,
    k: usize,
}

impl<T: Real> ShiftedReturnMap<T> {
    fn apply(&self, z: C<T>) -> C<T> {
        let w = self.alpha + z / self.sigma;
        let (fw, _) = dynamics::iterate_with_derivative(self.c, w, self.k);
        (fw - self.alpha) * self.sigma
    }

    fn derivative(&self, z: C<T>) -> C<T> {
        let w = self.alpha + z / self.sigma;
        let (_, d) = dynamics::iterate_with_derivative(self.c, w, self.k);
        d
    }
}

/// The conjugated family data at a parameter near a parabolic one.
#[derive(Clone, Debug)]
pub struct NormalForm<T: Real> {
    pub c0: T,
    pub k: usize,
    pub c: T,
    /// chosen cycle point at c (the one continuing the max-|(f^k)″| point)
    pub alpha: C<T>,
    pub lambda: C<T>,
    /// δ = λ + 1
    pub delta: C<T>,
    /// a(c0), the frozen quadratic coefficient
    pub a: C<T>,
    /// b(c)·a²(c0)/a²(c), the rescaled cubic coefficient
    pub b: C<T>,
    /// A = √(a² + b) at c0, real and positive
    pub scale: T,
    kind: MapKind<T>,
}

/// λ, a(c), b(c): degree-3 coefficients of the shifted return map
/// f_c^k(α + z) − α, by exact jet composition.
pub fn taylor_at_cycle<T: Real>(
    c: C<T>,
    k: usize,
    alpha: C<T>,
) -> Result<(C<T>, C<T>, C<T>), NormalFormError> {
    let (fk, _) = dynamics::iterate_with_derivative(c, alpha, k);
    let residual = (fk - alpha).norm();
    if residual > T::of(1e-10) {
        return Err(NormalFormError::NotOnCycle {
            k,
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    let jet = orbit_jet(c, alpha, k);
    let (lam, a, b) = jet.coefficients();
    Ok((lam, a, b))
}

/// Pick the cycle point with the largest |(f^k)″|; the parabolic cycle always
/// contains one with a nonvanishing second derivative.
pub fn select_cycle_point<T: Real>(c: C<T>, cycle: &Cycle<T>) -> C<T> {
    let mut best = cycle.points[0];
    let mut best_val = T::neg_infinity();
    for &p in &cycle.points {
        let (_, _, d2) = dynamics::iterate_with_two_derivatives(c, p, cycle.period);
        if d2.norm() > best_val {
            best_val = d2.norm();
            best = p;
        }
    }
    best
}

fn parabolic_cycle<T: Real>(c0: T, k: usize) -> Result<Cycle<T>, NormalFormError> {
    let c = C::new(c0, T::zero());
    let one = C::new(T::one(), T::zero());
    let seed = match k {
        1 => (one - (one - c * T::of(4.0)).sqrt()) * T::of(0.5),
        2 => (-one + (-C::new(T::of(3.0), T::zero()) - c * T::of(4.0)).sqrt()) * T::of(0.5),
        _ => C::new(T::of(0.1), T::of(0.1)),
    };
    Ok(dynamics::find_cycle(c, k, seed)?)
}

impl<T: Real> NormalForm<T> {
    /// The exact quadratic model λz + z² at multiplier λ = −1 + δ.
    pub fn model(delta: T) -> Self {
        Self::model_cubic(delta, C::new(T::one(), T::zero()), C::new(T::zero(), T::zero()))
    }

    /// Cubic model λz + az² + bz³ with λ = −1 + δ.
    pub fn model_cubic(delta: T, a: C<T>, b: C<T>) -> Self {
        let lambda = C::new(-T::one() + delta, T::zero());
        let a2b = (a * a + b).re;
        // c satisfying λ(c) = −1+δ in the k = 1 parametrization
        let two_m_d = T::of(2.0) - delta;
        NormalForm {
            c0: -T::of(0.75),
            k: 1,
            c: (T::one() - two_m_d * two_m_d) / T::of(4.0),
            alpha: C::new(T::zero(), T::zero()),
            lambda,
            delta: C::new(delta, T::zero()),
            a,
            b,
            scale: a2b.sqrt(),
            kind: MapKind::Model,
        }
    }

    /// Build the conjugated return map at parameter c, for the parabolic
    /// parameter c0 of period k. For k = 1 the conjugation is exactly the
    /// quadratic model; larger periods evaluate through f_c^k itself.
    pub fn at(c: T, c0: T, k: usize) -> Result<Self, NormalFormError> {
        let cyc0 = parabolic_cycle(c0, k)?;
        let cc0 = C::new(c0, T::zero());
        let alpha0 = select_cycle_point(cc0, &cyc0);
        let (lam0, a0, b0) = taylor_at_cycle(cc0, k, alpha0)?;
        if (lam0 + C::new(T::one(), T::zero())).norm() > T::of(1e-10) {
            return Err(NormalFormError::NotTwoPetal { m: lam0.re.to_f64().unwrap_or(f64::NAN) });
        }
        if a0.norm() < T::of(1e-8) {
            return Err(NormalFormError::DegenerateQuadratic);
        }
        let b0_rescaled = b0; // at c0, a(c0)/a(c) = 1
        let a2b = a0 * a0 + b0_rescaled;
        if a2b.re <= T::zero() || a2b.im.abs() > T::of(1e-8) {
            return Err(NormalFormError::ScaleNotPositive {
                val: a2b.re.to_f64().unwrap_or(f64::NAN),
            });
        }
        let scale = a2b.re.sqrt();

        if k == 1 {
            // f(α+z) − α = λz + z² exactly; a(c) ≡ 1
            let lam_c = multiplier_k1(c);
            return Ok(NormalForm {
                c0,
                k,
                c,
                alpha: alpha_k1(c),
                lambda: lam_c,
                delta: lam_c + C::new(T::one(), T::zero()),
                a: C::new(T::one(), T::zero()),
                b: C::new(T::zero(), T::zero()),
                scale: T::one(),
                kind: MapKind::Model,
            });
        }

        // rotate the cycle so continuation tracks alpha0
        let idx = cyc0.points.iter().position(|&p| p == alpha0).unwrap_or(0);
        let rotated = Cycle {
            period: k,
            points: cyc0.points[idx..].iter().chain(&cyc0.points[..idx]).cloned().collect(),
            multiplier: cyc0.multiplier,
        };
        let cc = C::new(c, T::zero());
        let steps = 16usize;
        let cyc_c = if c == c0 {
            rotated.clone()
        } else {
            dynamics::continue_cycle(&rotated, cc0, cc, steps)?
        };
        let alpha_c = cyc_c.points[0];
        let (lam_c, a_c, b_c) = taylor_at_cycle(cc, k, alpha_c)?;
        let ratio = a0 / a_c;
        let b_rescaled = b_c * ratio * ratio;
        let sigma = a_c / a0;

        // parameter shifts for ∂/∂λ data
        let h_c = T::of(1e-6);
        let shifted = |cs: T| -> Result<(ShiftedReturnMap<T>, C<T>), NormalFormError> {
            let ccs = C::new(cs, T::zero());
            let cyc_s = dynamics::continue_cycle(&cyc_c, cc, ccs, 2)?;
            let alpha_s = cyc_s.points[0];
            let (lam_s, a_s, _) = taylor_at_cycle(ccs, k, alpha_s)?;
            Ok((ShiftedReturnMap { c: ccs, alpha: alpha_s, sigma: a_s / a0, k }, lam_s))
        };
        let (plus, lam_p) = shifted(c + h_c)?;
        let (minus, lam_m) = shifted(c - h_c)?;
        let lambda_prime = ((lam_p - lam_m) / (h_c + h_c)).re;

        Ok(NormalForm {
            c0,
            k,
            c,
            alpha: alpha_c,
            lambda: lam_c,
            delta: lam_c + C::new(T::one(), T::zero()),
            a: a0,
            b: b_rescaled,
            scale,
            kind: MapKind::Conjugated(Box::new(ConjugatedMap {
                sigma,
                lambda_prime,
                plus,
                minus,
                h_c,
            })),
        })
    }

    pub fn delta_re(&self) -> T {
        self.delta.re
    }

    /// F_λ(z).
    pub fn apply(&self, z: C<T>) -> C<T> {
        match &self.kind {
            MapKind::Model => ((self.b * z + self.a) * z + self.lambda) * z,
            MapKind::Conjugated(d) => {
                let w = self.alpha + z / d.sigma;
                let cc = C::new(self.c, T::zero());
                let (fw, _) = dynamics::iterate_with_derivative(cc, w, self.k);
                (fw - self.alpha) * d.sigma
            }
        }
    }

    /// F′_λ(z).
    pub fn derivative(&self, z: C<T>) -> C<T> {
        match &self.kind {
            MapKind::Model => {
                (self.b * z * T::of(3.0) + self.a * T::of(2.0)) * z + self.lambda
            }
            MapKind::Conjugated(d) => {
                let w = self.alpha + z / d.sigma;
                let cc = C::new(self.c, T::zero());
                let (_, dw) = dynamics::iterate_with_derivative(cc, w, self.k);
                dw
            }
        }
    }

    /// F″_λ(z).
    pub fn second_derivative(&self, z: C<T>) -> C<T> {
        match &self.kind {
            MapKind::Model => self.a * T::of(2.0) + self.b * z * T::of(6.0),
            MapKind::Conjugated(d) => {
                let w = self.alpha + z / d.sigma;
                let cc = C::new(self.c, T::zero());
                let (_, _, d2) = dynamics::iterate_with_two_derivatives(cc, w, self.k);
                d2 / d.sigma
            }
        }
    }

    /// ∂F_λ/∂λ (z + O(z³); exact for the model family).
    pub fn dlambda(&self, z: C<T>) -> C<T> {
        match &self.kind {
            MapKind::Model => z,
            MapKind::Conjugated(d) => {
                let num = d.plus.apply(z) - d.minus.apply(z);
                num / ((d.h_c + d.h_c) * d.lambda_prime)
            }
        }
    }

    /// ∂F′_λ/∂λ (1 + O(z²); exact for the model family).
    pub fn dlambda_derivative(&self, z: C<T>) -> C<T> {
        match &self.kind {
            MapKind::Model => C::new(T::one(), T::zero()),
            MapKind::Conjugated(d) => {
                let num = d.plus.derivative(z) - d.minus.derivative(z);
                num / ((d.h_c + d.h_c) * d.lambda_prime)
            }
        }
    }

    /// √(−δ) with the principal-branch convention (i·√δ for δ > 0).
    pub fn sqrt_neg_delta(&self) -> C<T> {
        let md = -self.delta;
        if md.im == T::zero() && md.re < T::zero() {
            C::new(T::zero(), (-md.re).sqrt())
        } else {
            md.sqrt()
        }
    }
}

/// Multiplier of the f_c fixed point (1−√(1−4c))/2, as a complex value.
fn multiplier_k1<T: Real>(c: T) -> C<T> {
    let one = C::new(T::one(), T::zero());
    one - (one - C::new(c, T::zero()) * T::of(4.0)).sqrt()
}

fn alpha_k1<T: Real>(c: T) -> C<T> {
    multiplier_k1(c) * T::of(0.5)
}

/// Real parameter near c0 whose k-cycle multiplier equals the target
/// (secant iteration on the continued-cycle multiplier).
pub fn parameter_for_multiplier<T: Real>(
    c0: T,
    k: usize,
    lambda_target: T,
) -> Result<T, NormalFormError> {
    if k == 1 {
        // λ = 1 − √(1−4c)  ⇒  c = (1 − (1−λ)²)/4
        let lm = T::one() - lambda_target;
        return Ok((T::one() - lm * lm) / T::of(4.0));
    }
    let cyc0 = parabolic_cycle(c0, k)?;
    let m_of = |c: T, from: &Cycle<T>, c_from: T| -> Result<(T, Cycle<T>), NormalFormError> {
        let cyc = dynamics::continue_cycle(from, C::new(c_from, T::zero()), C::new(c, T::zero()), 8)?;
        Ok((cyc.multiplier.re, cyc))
    };
    // secant from two nearby points; dλ/dc > 0 along the real axis
    let mut c1 = c0;
    let mut f1 = -T::one() - lambda_target;
    let mut c2 = c0 + (lambda_target + T::one()) * T::of(0.5);
    let (mut f2, mut cyc) = {
        let (m, cyc) = m_of(c2, &cyc0, c0)?;
        (m - lambda_target, cyc)
    };
    for _ in 0..60 {
        if f2.abs() <= T::of(1e-13) {
            return Ok(c2);
        }
        let denom = f2 - f1;
        if denom.abs() < T::of(1e-300) {
            break;
        }
        let c3 = c2 - f2 * (c2 - c1) / denom;
        let (m3, cyc3) = m_of(c3, &cyc, c2)?;
        c1 = c2;
        f1 = f2;
        c2 = c3;
        f2 = m3 - lambda_target;
        cyc = cyc3;
    }
    if f2.abs() <= T::of(1e-11) {
        Ok(c2)
    } else {
        Err(NormalFormError::SmallCycleStalled)
    }
}

/// The small period-2 orbit (p⁺, p⁻) of F_λ near 0, by Newton on the
/// deflated quotient (F²(z) − z)/(F(z) − z), seeded at ±√(−δ)/A.
pub fn small_cycle<T: Real>(nf: &NormalForm<T>) -> Result<(C<T>, C<T>), NormalFormError> {
    let delta = nf.delta.norm();
    if delta == T::zero() || delta >= T::of(0.1) {
        return Err(NormalFormError::DeltaRange { delta: delta.to_f64().unwrap_or(f64::NAN) });
    }
    let seed_base = nf.sqrt_neg_delta() / nf.scale;
    let one = C::new(T::one(), T::zero());
    let quotient = |z: C<T>| -> (C<T>, C<T>) {
        let fz = nf.apply(z);
        let f2z = nf.apply(fz);
        let n = f2z - z;
        let d = fz - z;
        let npr = nf.derivative(fz) * nf.derivative(z) - one;
        let dpr = nf.derivative(z) - one;
        let q = n / d;
        let qpr = (npr * d - n * dpr) / (d * d);
        (q, qpr)
    };
    let solve = |seed: C<T>| -> Result<C<T>, NormalFormError> {
        let mut z = seed;
        for _ in 0..100 {
            let (q, qp) = quotient(z);
            if q.norm() <= T::of(1e-14).max(delta * T::of(1e-12)) {
                return Ok(z);
            }
            if qp.norm() < T::of(1e-300) {
                break;
            }
            z = z - q / qp;
        }
        // accept if the period-2 residual itself is tiny
        let f2z = nf.apply(nf.apply(z));
        if (f2z - z).norm() <= T::of(1e-12) {
            Ok(z)
        } else {
            Err(NormalFormError::SmallCycleStalled)
        }
    };
    let p_plus = solve(seed_base)?;
    let p_minus = solve(-seed_base)?;
    let bound = T::of(3.0) * delta.sqrt() / nf.scale + T::of(10.0) * delta;
    for &p in &[p_plus, p_minus] {
        if p.norm() > bound {
            return Err(NormalFormError::SmallCycleScale {
                p: p.norm().to_f64().unwrap_or(f64::NAN),
                sqrt_delta: delta.sqrt().to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok((p_plus, p_minus))
}

/// The Möbius map h_λ straightening the small cycle onto ±i√(−δ)/A, with its
/// inverse. At δ = 0 it degenerates to h(z) = iz.
#[derive(Clone, Copy, Debug)]
pub struct HMap<T: Real> {
    m: C<T>,
    p: C<T>,
    q: C<T>,
}

impl<T: Real> HMap<T> {
    pub fn new(nf: &NormalForm<T>) -> Result<Self, NormalFormError> {
        if nf.delta.norm() == T::zero() {
            // h(z) = iz as M·z/(P·z − Q) with M = i, P = 0, Q = −1
            return Ok(HMap {
                m: C::new(T::zero(), T::one()),
                p: C::new(T::zero(), T::zero()),
                q: -C::new(T::one(), T::zero()),
            });
        }
        let (pp, pm) = small_cycle(nf)?;
        let factor = C::new(T::zero(), T::one()) * nf.sqrt_neg_delta() / nf.scale;
        Ok(HMap { m: factor * (pp - pm), p: pp + pm, q: (pp * pm) * T::of(2.0) })
    }

    pub fn apply(&self, z: C<T>) -> Result<C<T>, NormalFormError> {
        let den = self.p * z - self.q;
        let scale = self.p.norm() * z.norm() + self.q.norm();
        if den.norm() < T::of(1e-12) * scale {
            return Err(NormalFormError::MobiusPole);
        }
        Ok(self.m * z / den)
    }

    pub fn inverse(&self, w: C<T>) -> Result<C<T>, NormalFormError> {
        let den = self.p * w - self.m;
        if den.norm() < T::of(1e-300) {
            return Err(NormalFormError::MobiusPole);
        }
        Ok(self.q * w / den)
    }
}

/// h_λ(z); builds the Möbius data on the fly (see [`HMap`] for reuse).
pub fn h_map<T: Real>(nf: &NormalForm<T>, z: C<T>) -> Result<C<T>, NormalFormError> {
    HMap::new(nf)?.apply(z)
}

/// h_λ⁻¹(w).
pub fn h_inverse<T: Real>(nf: &NormalForm<T>, w: C<T>) -> Result<C<T>, NormalFormError> {
    HMap::new(nf)?.inverse(w)
}

/// Fatou coordinate Z_λ(z) = (1/2δ)·log(1 − δ/(A²z²)), with the analytic
/// δ → 0 limit −1/(2A²z²) built into the evaluation (the δ cancels inside
/// log(1−w)/w, so no explicit threshold switch is needed).
pub fn fatou_z<T: Real>(nf: &NormalForm<T>, z: C<T>) -> Result<C<T>, NormalFormError> {
    if z.norm() == T::zero() {
        return Err(NormalFormError::MobiusPole);
    }
    let a2 = C::new(nf.scale * nf.scale, T::zero());
    let z2 = z * z;
    let w = nf.delta / (a2 * z2);
    let one_minus_w = C::new(T::one(), T::zero()) - w;
    if one_minus_w.re <= T::zero() && one_minus_w.im.abs() < T::of(1e-14) * w.norm() {
        return Err(NormalFormError::BranchCut);
    }
    // Z = log(1−w)/(2δ) = −φ(w)/(2A²z²) with φ(w) = −log(1−w)/w, φ(0) = 1
    let phi = neg_ln1m_over_w(w);
    Ok(-phi / (a2 * z2 * T::of(2.0)))
}

/// Inverse Fatou coordinate z = (1/A)·(δ/(1 − e^{2δZ}))^{1/2}, principal
/// square root; the δ → 0 limit (−1/(2Z))^{1/2}/A is again built in.
pub fn fatou_z_inv<T: Real>(nf: &NormalForm<T>, big_z: C<T>) -> Result<C<T>, NormalFormError> {
    if big_z.norm() == T::zero() {
        return Err(NormalFormError::MobiusPole);
    }
    // δ/(1−e^{2δZ}) = −ψ(2δZ)/(2Z) with ψ(x) = x/(e^x − 1), ψ(0) = 1
    let x = nf.delta * big_z * T::of(2.0);
    let psi = x_over_expm1(x);
    let val = -psi / (big_z * T::of(2.0));
    Ok(val.sqrt() / nf.scale)
}

/// Normalized defect of the translation-by-2 property of F̂² in Fatou
/// coordinates: |Re Z(F̂^{2n}(ẑ)) − Re Z(ẑ) − 2n| / n, iterating the true
/// conjugated map forward on the repelling side.
pub fn translation_defect<T: Real>(
    nf: &NormalForm<T>,
    zhat: C<T>,
    n: usize,
) -> Result<T, NormalFormError> {
    assert!(n >= 1);
    let h = HMap::new(nf)?;
    let z0 = fatou_z(nf, zhat)?;
    let mut w = zhat;
    for step in 0..2 * n {
        let z = h.inverse(w)?;
        w = h.apply(nf.apply(z))?;
        if w.norm() > T::of(0.75) {
            return Err(NormalFormError::SectorEscape { step });
        }
    }
    let z_end = fatou_z(nf, w)?;
    let shift = T::from_usize(2 * n).unwrap();
    Ok(((z_end - z0).re - shift).abs() / T::from_usize(n).unwrap())
}

/// Sector families around the axes, with the argument convention
/// arg z ∈ (−¾π, 5π/4].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SectorKind {
    Plus,
    Minus,
    Up,
    Down,
    HatUp,
    HatDown,
    HatPlus,
    HatMinus,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SectorSpec<T: Real> {
    pub theta: T,
    pub r: T,
    pub kind: SectorKind,
}

/// arg z normalized to (−¾π, 5π/4].
pub fn normalized_arg<T: Real>(z: C<T>) -> T {
    let a = z.arg();
    if a <= -T::of(0.75) * T::PI() {
        a + T::of(2.0) * T::PI()
    } else {
        a
    }
}

impl<T: Real> SectorSpec<T> {
    pub fn new(theta: T, r: T, kind: SectorKind) -> Result<Self, NormalFormError> {
        if theta <= T::zero() || theta >= T::FRAC_PI_2() || r <= T::zero() {
            return Err(NormalFormError::BadSector);
        }
        Ok(SectorSpec { theta, r, kind })
    }

    /// z ∈ S↑ ∪ S↓, the vertical double sector holding the Julia set near 0.
    pub fn vertical_pair_contains(theta: T, r: T, z: C<T>) -> Result<bool, NormalFormError> {
        let up = SectorSpec::new(theta, r, SectorKind::Up)?;
        let down = SectorSpec::new(theta, r, SectorKind::Down)?;
        Ok(up.contains(z, None)? || down.contains(z, None)?)
    }

    /// Membership test. Hat sectors are translated by the base point of the
    /// small cycle (p⁺/p⁻, or ±√δ/A for the plus/minus variants) and are
    /// additionally clipped to the ball B(0, r).
    pub fn contains(&self, z: C<T>, nf: Option<&NormalForm<T>>) -> Result<bool, NormalFormError> {
        let axis = |kind: SectorKind| -> T {
            match kind {
                SectorKind::Plus | SectorKind::HatPlus => T::zero(),
                SectorKind::Minus | SectorKind::HatMinus => T::PI(),
                SectorKind::Up | SectorKind::HatUp => T::FRAC_PI_2(),
                SectorKind::Down | SectorKind::HatDown => -T::FRAC_PI_2(),
            }
        };
        let plain = |w: C<T>, kind: SectorKind| -> bool {
            if w.norm() == T::zero() {
                return true;
            }
            if w.norm() >= self.r {
                return false;
            }
            (normalized_arg(w) - axis(kind)).abs() <= self.theta
        };
        match self.kind {
            SectorKind::Plus | SectorKind::Minus | SectorKind::Up | SectorKind::Down => {
                Ok(plain(z, self.kind))
            }
            hat => {
                let nf = nf.ok_or(NormalFormError::BadSector)?;
                let base = match hat {
                    SectorKind::HatUp => small_cycle(nf)?.0,
                    SectorKind::HatDown => small_cycle(nf)?.1,
                    SectorKind::HatPlus => nf.delta.sqrt() / nf.scale,
                    SectorKind::HatMinus => -(nf.delta.sqrt()) / nf.scale,
                    _ => unreachable!(),
                };
                Ok(z.norm() < self.r && plain(z - base, hat))
            }
        }
    }
}
