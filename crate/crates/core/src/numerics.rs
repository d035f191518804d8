//! Shared numerical machinery: compensated sums, deterministic reductions,
//! and stable complex helpers used by the Fatou-coordinate code.
//!
//! Every reduction here has a fixed association order, so results are
//! bit-identical no matter how many worker threads rayon schedules.

use rayon::prelude::*;

use crate::scalar::{Real, C};

/// Fixed chunk width for parallel reductions. Changing this changes results
/// at the last-ulp level, so it is a constant, not a tunable.
pub const REDUCE_CHUNK: usize = 4096;

/// Neumaier (improved Kahan) compensated accumulator.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T: Real> {
    sum: T,
    comp: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice, sequential in index order.
pub fn comp_sum<T: Real>(xs: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Partial log-sum-exp state: `m + ln(s)` where `s = Σ exp(x_i − m)`.
#[derive(Clone, Copy, Debug)]
pub struct LsePartial<T: Real> {
    pub max: T,
    pub sum: T,
}

impl<T: Real> LsePartial<T> {
    pub fn empty() -> Self {
        Self { max: T::neg_infinity(), sum: T::zero() }
    }

    pub fn merge(self, other: Self) -> Self {
        if other.sum == T::zero() {
            return self;
        }
        if self.sum == T::zero() {
            return other;
        }
        if self.max >= other.max {
            Self { max: self.max, sum: self.sum + other.sum * (other.max - self.max).exp() }
        } else {
            Self { max: other.max, sum: other.sum + self.sum * (self.max - other.max).exp() }
        }
    }

    pub fn value(&self) -> T {
        if self.sum == T::zero() {
            T::neg_infinity()
        } else {
            self.max + self.sum.ln()
        }
    }
}

fn lse_chunk<T: Real>(xs: &[T]) -> LsePartial<T> {
    let mut m = T::neg_infinity();
    for &x in xs {
        if x > m {
            m = x;
        }
    }
    if m == T::neg_infinity() {
        return LsePartial::empty();
    }
    let mut s = CompensatedSum::new();
    for &x in xs {
        s.add((x - m).exp());
    }
    LsePartial { max: m, sum: s.value() }
}

/// Merge partials pairwise in a fixed binary tree over chunk index.
fn tree_merge<T: Real>(mut parts: Vec<LsePartial<T>>) -> LsePartial<T> {
    if parts.is_empty() {
        return LsePartial::empty();
    }
    while parts.len() > 1 {
        let next: Vec<LsePartial<T>> =
            parts.chunks(2).map(|p| if p.len() == 2 { p[0].merge(p[1]) } else { p[0] }).collect();
        parts = next;
    }
    parts[0]
}

/// `ln Σ exp(x_i)` over fixed-width chunks; chunks evaluate in parallel but
/// merge in a fixed tree, so the result does not depend on the thread count.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let parts: Vec<LsePartial<T>> = xs.par_chunks(REDUCE_CHUNK).map(lse_chunk).collect();
    tree_merge(parts).value()
}

/// `ln Σ exp(scale · x_i)` without materializing the scaled slice.
pub fn log_sum_exp_scaled<T: Real>(xs: &[T], scale: T) -> T {
    let parts: Vec<LsePartial<T>> = xs
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut m = T::neg_infinity();
            for &x in chunk {
                let v = scale * x;
                if v > m {
                    m = v;
                }
            }
            if m == T::neg_infinity() {
                return LsePartial::empty();
            }
            let mut s = CompensatedSum::new();
            for &x in chunk {
                s.add((scale * x - m).exp());
            }
            LsePartial { max: m, sum: s.value() }
        })
        .collect();
    tree_merge(parts).value()
}

/// Weighted sums Σ g_i·w_i and Σ w_i with w_i = exp(lw_i − max(lw)), reduced
/// deterministically. Returns (Σ g·w, Σ w) in the shifted scale, which is all
/// ratio-type consumers need.
pub fn weighted_sums<T: Real>(g: &[T], log_w: &[T]) -> (T, T) {
    assert_eq!(g.len(), log_w.len());
    let m = {
        let parts: Vec<T> = log_w
            .par_chunks(REDUCE_CHUNK)
            .map(|ch| ch.iter().cloned().fold(T::neg_infinity(), T::max))
            .collect();
        parts.into_iter().fold(T::neg_infinity(), T::max)
    };
    let parts: Vec<(T, T)> = (0..g.len().div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|ci| {
            let lo = ci * REDUCE_CHUNK;
            let hi = (lo + REDUCE_CHUNK).min(g.len());
            let mut num = CompensatedSum::new();
            let mut den = CompensatedSum::new();
            for i in lo..hi {
                let w = (log_w[i] - m).exp();
                num.add(g[i] * w);
                den.add(w);
            }
            (num.value(), den.value())
        })
        .collect();
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (a, b) in parts {
        num.add(a);
        den.add(b);
    }
    (num.value(), den.value())
}

/// Principal branch `ln(1 + w)` for complex `w`, accurate for small `|w|`.
pub fn ln_1p_c<T: Real>(w: C<T>) -> C<T> {
    if w.norm() < T::of(1e-4) {
        // |w| small: alternating series, error below 1e-20 at this cutoff
        let w2 = w * w;
        let half = T::of(0.5);
        let third = T::of(1.0 / 3.0);
        let quarter = T::of(0.25);
        let fifth = T::of(0.2);
        w - w2 * half + w2 * w * third - w2 * w2 * quarter + w2 * w2 * w * fifth
    } else {
        (C::new(T::one(), T::zero()) + w).ln()
    }
}

/// `φ(w) = −ln(1−w)/w`, analytic at 0 with `φ(0) = 1`.
pub fn neg_ln1m_over_w<T: Real>(w: C<T>) -> C<T> {
    if w.norm() < T::of(1e-6) {
        let half = T::of(0.5);
        let third = T::of(1.0 / 3.0);
        let quarter = T::of(0.25);
        C::new(T::one(), T::zero()) + w * half + w * w * third + w * w * w * quarter
    } else {
        -ln_1p_c(-w) / w
    }
}

/// `ψ(x) = x/(e^x − 1)`, analytic at 0 with `ψ(0) = 1`.
pub fn x_over_expm1<T: Real>(x: C<T>) -> C<T> {
    if x.norm() < T::of(1e-6) {
        let one = C::new(T::one(), T::zero());
        let half = T::of(0.5);
        one / (one + x * half + x * x * T::of(1.0 / 6.0) + x * x * x * T::of(1.0 / 24.0))
    } else {
        let em1 = x.exp() - C::new(T::one(), T::zero());
        x / em1
    }
}
