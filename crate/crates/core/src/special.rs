//! Profile functions for the parabolic asymptotics and the scaling-law
//! toolbox: Γ, v, Λ, the tail integrals G±, the amplitudes Υ±, numerical
//! differentiation, and log-log exponent fits.

use serde::Serialize;
use thiserror::Error;

use crate::quad::{self, QuadError, QuadratureResult};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SpecialError {
    #[error("Λ has a pole at u = 0")]
    LambdaPole,
    #[error("G_+ needs s > 0 and G_- needs s < 0 (got s = {s})")]
    TailDomain { s: f64 },
    #[error("Υ is only defined for 1 ≤ h < 4/3 (got h = {h})")]
    UpsilonDomain { h: f64 },
    #[error("finite difference sampled a non-finite value at {x}")]
    NonFiniteSample { x: f64 },
    #[error("scaling fit needs at least 4 samples on one side, got {n}")]
    TooFewSamples { n: usize },
    #[error("scaling fit samples must lie on a single side of c0")]
    MixedSides,
    #[error("scaling fit requires d' of constant sign")]
    SignChange,
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Γ(x) = ¼·(1 + (sinh 2x − 2x)/(cosh 2x − 1)), continuous with Γ(0) = ¼.
///
/// Strictly increasing from 0 to ½. Negative arguments use the
/// cancellation-free rearrangement (2y − 1 + e^{−2y})·e^{−2y}/(2(1−e^{−2y})²)
/// with y = −x, small arguments the cubic Taylor form, so both tails carry
/// full relative precision.
pub fn gamma_fn<T: Real>(x: T) -> T {
    if x < -T::of(0.03) {
        return gamma_lower_tail(-x);
    }
    if x < T::of(0.03) {
        // Γ = ¼ + x/6 − x³/45 + x⁵/315 + O(x⁷); the closed form loses six
        // digits to cancellation in this range
        let x3 = x * x * x;
        return T::of(0.25) + x / T::of(6.0) - x3 / T::of(45.0) + x3 * x * x / T::of(315.0);
    }
    // For x ≥ 1e-3 write the ratio in terms of e^{-2x} so nothing overflows.
    let e2 = (-(x + x)).exp();
    let e4 = e2 * e2;
    let num = T::one() - e4 - T::of(4.0) * x * e2;
    let den = T::one() + e4 - (e2 + e2);
    T::of(0.25) * (T::one() + num / den)
}

/// ½ − Γ(x) evaluated to full relative precision (the reflection identity
/// gives ½ − Γ(x) = Γ(−x)); useful where Γ itself saturates at ½ in floating
/// point, e.g. monotonicity checks on the right tail.
pub fn gamma_gap<T: Real>(x: T) -> T {
    gamma_fn(-x)
}

fn gamma_lower_tail<T: Real>(y: T) -> T {
    // Γ(−y) = (2y − 1 + e^{−2y})·e^{−2y} / (2(1 − e^{−2y})²) for y > 0
    let em = (-(y + y)).exp_m1(); // e^{−2y} − 1
    let num = em + (y + y);
    let e2 = (-(y + y)).exp();
    let one_m = -em;
    num * e2 / ((one_m * one_m) * T::of(2.0))
}

/// v(x) = ∫₀ˣ (6Γ(s) − 1) ds = 3x·e^{2x}/(e^{2x} − 1) − x − 3/2, with v(0) = 0.
pub fn v_fn<T: Real>(x: T) -> T {
    if x.abs() < T::of(1e-5) {
        // v = x/2 + x²/2 − x⁴/30 + O(x⁶)
        return x * T::of(0.5) + x * x * T::of(0.5) - x * x * x * x / T::of(30.0);
    }
    // 3x e^{2x}/(e^{2x}-1) = 3x / (1 - e^{-2x})
    let den = -(-(x + x)).exp_m1();
    T::of(3.0) * x / den - x - T::of(1.5)
}

/// log Λ_ε^h(u) = h·(u − 3/2·log|e^{2u} − 1|) + ε·u, valid for all u ≠ 0.
pub fn log_lambda_fn<T: Real>(h: T, eps: T, u: T) -> Result<T, SpecialError> {
    if u == T::zero() {
        return Err(SpecialError::LambdaPole);
    }
    let log_abs_e2u_m1 = if u > T::zero() {
        if u > T::of(20.0) {
            (u + u) + (-(u + u)).exp().neg().ln_1p()
        } else {
            (u + u).exp_m1().ln()
        }
    } else {
        // u < 0: |e^{2u} − 1| = 1 − e^{2u}
        ((u + u).exp().neg()).ln_1p()
    };
    Ok(h * (u - T::of(1.5) * log_abs_e2u_m1) + eps * u)
}

/// Λ_ε^h(u) = (e^u/|e^{2u} − 1|^{3/2})^h · e^{εu}.
pub fn lambda_fn<T: Real>(h: T, eps: T, u: T) -> Result<T, SpecialError> {
    Ok(log_lambda_fn(h, eps, u)?.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailSide {
    Plus,
    Minus,
}

/// Tail integrals of Λ₀ʰ with the paper-level constants normalized to one:
/// `G_+^h(s) = ∫_s^∞ Λ₀ʰ(u) du` for `s > 0`, and
/// `G_-^h(s) = ∫_{−∞}^s Λ₀ʰ(u) du` for `s < 0`.
///
/// The reflection Λ₀ʰ(−u) = e^{hu}·Λ₀ʰ(u) turns the minus side into a plus-side
/// integral of e^{hu}Λ₀ʰ(u), so both sides run over (0, ∞).
pub fn g_tail<T: Real>(h: T, s: T, side: TailSide) -> Result<QuadratureResult<T>, SpecialError> {
    let tol = T::of(1e-12);
    match side {
        TailSide::Plus => {
            if s <= T::zero() {
                return Err(SpecialError::TailDomain { s: s.to_f64().unwrap_or(f64::NAN) });
            }
            tail_from(h, s, T::zero(), tol)
        }
        TailSide::Minus => {
            if s >= T::zero() {
                return Err(SpecialError::TailDomain { s: s.to_f64().unwrap_or(f64::NAN) });
            }
            // ∫_{-∞}^s Λ₀ʰ = ∫_{|s|}^∞ e^{hu} Λ₀ʰ(u) du
            tail_from(h, -s, h, tol)
        }
    }
}

/// ∫_s^∞ Λ₀ʰ(u)·e^{w·u} du for s > 0, with w ∈ {0, h}.
///
/// Near u = 0 the integrand behaves like (2u)^{-3h/2}; the power-law grading
/// u = t^q with q = 2/(2 − 3h) flattens that exactly. Beyond u = 1 the decay
/// is e^{-(2h−w)u} and the exponential substitution applies. Tolerances are
/// scaled by the leading-power magnitude of the integral so that graded
/// intervals spanning many decades terminate.
fn tail_from<T: Real>(h: T, s: T, w: T, rel_tol: T) -> Result<QuadratureResult<T>, SpecialError> {
    let integrand = move |u: T| -> T {
        match log_lambda_fn(h, w, u) {
            Ok(l) => l.exp(),
            Err(_) => T::zero(),
        }
    };
    let decay = (h + h) - w; // = 2h or h, both positive
    let mut evals = 0usize;
    let mut value = T::zero();
    let mut err = T::zero();

    let split = T::one();
    if s < split {
        // magnitude of the singular piece: ∫_s^1 (2u)^{-3h/2} du
        let p = T::one() - T::of(1.5) * h;
        let scale = (s.powf(p) - T::one()).abs() / p.abs() * T::of(2.0).powf(-T::of(1.5) * h)
            + T::of(1e-3);
        let tol = rel_tol * scale;
        // Graded substitution on [s, 1]: q = 2/(2−3h) is negative for
        // h > 2/3, so t runs from 1 up to s^{1/q} > 1 and u = t^q sweeps
        // [s, 1] downward; the sign bookkeeping keeps the orientation ∫_s^1.
        let q = T::of(2.0) / (T::of(2.0) - T::of(3.0) * h);
        let t_hi = s.powf(T::one() / q);
        let (lo, hi, sign) = if t_hi >= T::one() {
            (T::one(), t_hi, T::one())
        } else {
            (t_hi, T::one(), -T::one())
        };
        let g = |t: T| -> T {
            let u = t.powf(q);
            integrand(u) * q * t.powf(q - T::one())
        };
        let r = quad::integrate(g, lo, hi, tol)?;
        value = value - sign * r.value;
        err = err + r.abs_error_estimate;
        evals += r.evaluations;

        let r2 = quad::integrate_to_inf(integrand, split, decay, rel_tol)?;
        value = value + r2.value;
        err = err + r2.abs_error_estimate;
        evals += r2.evaluations;
    } else {
        let scale = integrand(s) / decay + T::of(1e-30);
        let r = quad::integrate_to_inf(integrand, s, decay, rel_tol * scale)?;
        value = value + r.value;
        err = err + r.abs_error_estimate;
        evals += r.evaluations;
    }
    Ok(QuadratureResult { value, abs_error_estimate: err, evaluations: evals })
}

/// Υ_±(h) for 1 ≤ h < 4/3, by the integrated-by-parts single integral
/// (`∫₀^∞ v·Λ₀ʰ` and `−∫₀^∞ e^{hx} v(−x) Λ₀ʰ(x) dx`), cross-checked against
/// the direct double-integral definition; the discrepancy is folded into the
/// reported error estimate.
pub fn upsilon<T: Real>(h: T, side: TailSide) -> Result<QuadratureResult<T>, SpecialError> {
    let four_thirds = T::of(4.0 / 3.0);
    if h < T::one() || h >= four_thirds {
        return Err(SpecialError::UpsilonDomain { h: h.to_f64().unwrap_or(f64::NAN) });
    }
    let by_parts = upsilon_by_parts(h, side)?;
    let direct = upsilon_direct(h, side)?;
    let err = by_parts.abs_error_estimate
        + direct.abs_error_estimate
        + (by_parts.value - direct.value).abs();
    Ok(QuadratureResult {
        value: by_parts.value,
        abs_error_estimate: err,
        evaluations: by_parts.evaluations + direct.evaluations,
    })
}

fn upsilon_by_parts<T: Real>(h: T, side: TailSide) -> Result<QuadratureResult<T>, SpecialError> {
    let tol = T::of(1e-11);
    let integrand = move |x: T| -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let l = match log_lambda_fn(h, T::zero(), x) {
            Ok(l) => l,
            Err(_) => return T::zero(),
        };
        match side {
            TailSide::Plus => v_fn(x) * l.exp(),
            TailSide::Minus => -v_fn(-x) * (l + h * x).exp(),
        }
    };
    graded_zero_to_inf(h, integrand, tol)
}

fn upsilon_direct<T: Real>(h: T, side: TailSide) -> Result<QuadratureResult<T>, SpecialError> {
    let tol = T::of(1e-9);
    // Below the floor the tail integral follows its leading power
    // G(±x) ∝ x^{1−3h/2} to relative O(x); grafting that on avoids driving
    // the inner quadrature across hundreds of decades.
    let floor = T::of(1e-6);
    let g_at = move |x: T| -> T {
        let x_eff = x.max(floor);
        let r = match side {
            TailSide::Plus => g_tail(h, x_eff, TailSide::Plus),
            TailSide::Minus => g_tail(h, -x_eff, TailSide::Minus),
        };
        let g = match r {
            Ok(q) => q.value,
            Err(_) => return T::zero(),
        };
        if x < floor {
            g * (x / floor).powf(T::one() - T::of(1.5) * h)
        } else {
            g
        }
    };
    let integrand = move |x: T| -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let six = T::of(6.0);
        match side {
            TailSide::Plus => (six * gamma_fn(x) - T::one()) * g_at(x),
            // ∫_{-∞}^0 (6Γ(s)−1) G₋(s) ds, substituted s = −x
            TailSide::Minus => (six * gamma_fn(-x) - T::one()) * g_at(x),
        }
    };
    graded_zero_to_inf_direct(h, integrand, tol)
}

/// ∫₀^∞ f with an x = t^q grading at zero chosen for integrands behaving like
/// x^{1−3h/2} there (the by-parts Υ integrands).
fn graded_zero_to_inf<T: Real, F: Fn(T) -> T + Copy>(
    h: T,
    f: F,
    tol: T,
) -> Result<QuadratureResult<T>, SpecialError> {
    // exponent at zero: 1 − 3h/2 ∈ (−1, −1/2]; grading q = 2/(4 − 3h)
    let q = T::of(2.0) / (T::of(4.0) - T::of(3.0) * h);
    let g = move |t: T| -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let x = t.powf(q);
        f(x) * q * t.powf(q - T::one())
    };
    let r1 = quad::integrate(g, T::zero(), T::one(), tol)?;
    let r2 = quad::integrate_to_inf(f, T::one(), h, tol)?;
    Ok(QuadratureResult {
        value: r1.value + r2.value,
        abs_error_estimate: r1.abs_error_estimate + r2.abs_error_estimate,
        evaluations: r1.evaluations + r2.evaluations,
    })
}

/// ∫₀^∞ f graded for integrands behaving like x^{2−3h/2}·x^{-1} = x^{1−3h/2}…
/// the direct Υ form has the same endpoint exponent; reuse the grading but a
/// gentler tail rate (G decays like e^{-2hx}, the prefactor is bounded).
fn graded_zero_to_inf_direct<T: Real, F: Fn(T) -> T + Copy>(
    h: T,
    f: F,
    tol: T,
) -> Result<QuadratureResult<T>, SpecialError> {
    graded_zero_to_inf(h, f, tol)
}

/// Central difference with one Richardson step: D = (4·D(h/2) − D(h))/3.
///
/// `floor` guards the step against value-function noise; pass zero when the
/// function is smooth to machine precision.
pub fn fd_derivative<T: Real, F: FnMut(T) -> T>(
    mut value_fn: F,
    c: T,
    h0: T,
    floor: T,
) -> Result<T, SpecialError> {
    let h = h0.max(floor);
    let mut central = |h: T| -> Result<T, SpecialError> {
        let fp = value_fn(c + h);
        let fm = value_fn(c - h);
        if !fp.is_finite() || !fm.is_finite() {
            return Err(SpecialError::NonFiniteSample { x: c.to_f64().unwrap_or(f64::NAN) });
        }
        Ok((fp - fm) / (h + h))
    };
    let d1 = central(h)?;
    let d2 = central(h * T::of(0.5))?;
    Ok((T::of(4.0) * d2 - d1) / T::of(3.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Power-law fit of one-sided derivative samples: log|d′| against log|c−c0|.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit<T: Real> {
    pub c0: T,
    pub side: Side,
    /// (c, d′(c)) pairs, sorted by |c − c0| decreasing.
    pub samples: Vec<(T, T)>,
    pub exponent: T,
    pub amplitude: T,
    pub stderr: T,
    pub r_squared: T,
}

/// Least-squares line through (log|c−c0|, log|d′|).
pub fn scaling_fit<T: Real>(
    samples: &[(T, T)],
    c0: T,
) -> Result<ScalingFit<T>, SpecialError> {
    if samples.len() < 4 {
        return Err(SpecialError::TooFewSamples { n: samples.len() });
    }
    let side = if samples[0].0 >= c0 { Side::Right } else { Side::Left };
    for &(c, _) in samples {
        let on_right = c >= c0;
        if (side == Side::Right) != on_right {
            return Err(SpecialError::MixedSides);
        }
    }
    let sign = samples[0].1.signum();
    if samples.iter().any(|&(_, d)| d.signum() != sign || d == T::zero()) {
        return Err(SpecialError::SignChange);
    }

    let mut pts: Vec<(T, T)> = samples.to_vec();
    pts.sort_by(|a, b| {
        let da = (a.0 - c0).abs();
        let db = (b.0 - c0).abs();
        db.partial_cmp(&da).unwrap()
    });

    let xs: Vec<T> = pts.iter().map(|&(c, _)| (c - c0).abs().ln()).collect();
    let ys: Vec<T> = pts.iter().map(|&(_, d)| d.abs().ln()).collect();
    let n = T::from_usize(xs.len()).unwrap();
    let mean = |v: &[T]| v.iter().fold(T::zero(), |a, &b| a + b) / n;
    let xbar = mean(&xs);
    let ybar = mean(&ys);
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for i in 0..xs.len() {
        let dx = xs[i] - xbar;
        let dy = ys[i] - ybar;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let mut ss_res = T::zero();
    for i in 0..xs.len() {
        let r = ys[i] - (intercept + slope * xs[i]);
        ss_res = ss_res + r * r;
    }
    let dof = T::from_usize(xs.len() - 2).unwrap();
    let stderr = (ss_res / dof / sxx).sqrt();
    let r_squared = if syy > T::zero() { T::one() - ss_res / syy } else { T::one() };
    Ok(ScalingFit {
        c0,
        side,
        samples: pts,
        exponent: slope,
        amplitude: intercept.exp(),
        stderr,
        r_squared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Regime<T: Real> {
    /// d(c₀) < 4/3: d′ blows up like |c₀−c|^exponent with exponent 3/2·d(c₀)−2.
    PowerLaw { exponent: T },
    /// d(c₀) = 4/3: d′ ~ −K·log|c₀−c|.
    Logarithmic,
    /// d(c₀) > 4/3: d′ has a finite limit.
    Finite,
}

/// Classify the d′ blow-up regime from the dimension at the parabolic
/// parameter (two-petal exponent 3/2·d−2), with an equality band around 4/3.
pub fn classify_regime<T: Real>(d_c0: T, band: T) -> Regime<T> {
    let four_thirds = T::of(4.0 / 3.0);
    if (d_c0 - four_thirds).abs() <= band {
        Regime::Logarithmic
    } else if d_c0 < four_thirds {
        Regime::PowerLaw { exponent: T::of(1.5) * d_c0 - T::of(2.0) }
    } else {
        Regime::Finite
    }
}
