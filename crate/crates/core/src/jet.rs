//! Degree-3 truncated Taylor (jet) arithmetic along orbits of f_c.
//!
//! A `Jet3` carries the value and the first three z-derivatives of an
//! analytic germ; pushing it through f(w) = w² + c is exact polynomial
//! composition, so the cubic coefficients of return maps come out without
//! finite-difference cancellation.

use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug)]
pub struct Jet3<T: Real> {
    /// germ value
    pub v: C<T>,
    /// first derivative
    pub d1: C<T>,
    /// second derivative
    pub d2: C<T>,
    /// third derivative
    pub d3: C<T>,
}

impl<T: Real> Jet3<T> {
    /// The identity germ based at `z0`.
    pub fn identity(z0: C<T>) -> Self {
        let zero = C::new(T::zero(), T::zero());
        Jet3 { v: z0, d1: C::new(T::one(), T::zero()), d2: zero, d3: zero }
    }

    /// Push the germ through one step of f(w) = w² + c.
    ///
    /// For g = f∘h: g′ = 2hh′, g″ = 2(h′² + hh″), g‴ = 2(3h′h″ + hh‴).
    pub fn step(self, c: C<T>) -> Self {
        let two = T::of(2.0);
        let three = T::of(3.0);
        Jet3 {
            v: self.v * self.v + c,
            d1: self.v * self.d1 * two,
            d2: (self.d1 * self.d1 + self.v * self.d2) * two,
            d3: (self.d1 * self.d2 * three + self.v * self.d3) * two,
        }
    }

    /// Taylor coefficients (linear, quadratic, cubic) of the germ minus its
    /// base value: d1, d2/2, d3/6.
    pub fn coefficients(&self) -> (C<T>, C<T>, C<T>) {
        (self.d1, self.d2 * T::of(0.5), self.d3 / T::of(6.0))
    }
}

/// Jet of f_c^k based at z0.
pub fn orbit_jet<T: Real>(c: C<T>, z0: C<T>, k: usize) -> Jet3<T> {
    let mut j = Jet3::identity(z0);
    for _ in 0..k {
        j = j.step(c);
    }
    j
}
