//! Backward-orbit cylinder chains near the parabolic point, the cylinder
//! size sequence |C_n| = ½|z_{n+1} − z_{n−1}|, and the perturbation
//! functionals ψ̇, β = Im z·Im ψ̇, and 𝔇² with their Γ-profile predictions.
//!
//! The chain anchors are the backward orbit of the inverse branch of F_λ
//! fixing 0 with derivative ≈ −1; consecutive anchors alternate half-planes
//! in conjugate pairs (at real parameters the upper and lower chains are
//! mutual conjugates), and all size/β/Γ quantities are invariant under that
//! relabeling.

use serde::Serialize;
use thiserror::Error;

use crate::normal_form::NormalForm;
use crate::numerics::CompensatedSum;
use crate::quad;
use crate::scalar::{Real, C};
use crate::special::{g_tail, gamma_fn, lambda_fn, Regime, TailSide};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("chain start must satisfy Im z ≠ 0 and |z| ≤ 0.2 (got {z})")]
    BadStart { z: String },
    #[error("chain length {n} exceeds the 1e5 cap")]
    TooLong { n: usize },
    #[error("backward Newton stalled at step {n}")]
    NewtonStalled { n: usize },
    #[error("inverse branch jump at step {n}; partial chain of {kept} anchors kept")]
    BranchJump { n: usize, kept: usize },
    #[error("cylinder index {n} out of range 1..={max}")]
    IndexRange { n: usize, max: usize },
    #[error("chain-rule derivative underflow at term {j}")]
    DerivativeUnderflow { j: usize },
    #[error("measure model needs h in (1,2) and δ ≠ 0")]
    MassDomain,
    #[error("quadrature failure in the measure model: {0}")]
    MassQuadrature(#[from] quad::QuadError),
}

/// A backward orbit of F_λ toward the parabolic point, with the derived
/// cylinder sizes.
///
/// Anchor indices are Fatou-calibrated: the anchor at true index n satisfies
/// −Re Z(h(z_n)) ≈ n, matching the cylinder count from the petal edge. The
/// chain is built by pushing the start point forward to the petal edge and
/// re-basing there (`base` ≈ the edge index), then pulling back; every
/// consecutive pair satisfies F(z_{n+1}) = z_n.
#[derive(Clone, Debug)]
pub struct CylinderChain<T: Real> {
    /// true index of anchors[0]
    pub base: usize,
    /// anchors[j] is the anchor of true index base + j
    pub anchors: Vec<C<T>>,
    /// sizes[j] = ½|anchors[j+2] − anchors[j]|, i.e. |C_n| for n = base+j+1
    pub sizes: Vec<T>,
    /// F′ at each anchor, cached for the ψ̇ prefix products
    pub derivatives: Vec<C<T>>,
}

impl<T: Real> CylinderChain<T> {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// largest valid true index
    pub fn max_n(&self) -> usize {
        self.base + self.anchors.len() - 1
    }

    fn idx(&self, n: usize) -> Result<usize, ChainError> {
        if n < self.base || n > self.max_n() {
            return Err(ChainError::IndexRange { n, max: self.max_n() });
        }
        Ok(n - self.base)
    }

    /// Anchor z_n by true index.
    pub fn anchor(&self, n: usize) -> Result<C<T>, ChainError> {
        Ok(self.anchors[self.idx(n)?])
    }

    /// |C_n| = ½|z_{n+1} − z_{n−1}| for base+1 ≤ n ≤ max−1.
    pub fn size(&self, n: usize) -> Result<T, ChainError> {
        let j = self.idx(n)?;
        if j == 0 || j + 1 >= self.anchors.len() {
            return Err(ChainError::IndexRange { n, max: self.max_n().saturating_sub(1) });
        }
        Ok(self.sizes[j - 1])
    }

    /// (F^k)′(z_n) by the cached chain rule, for n − k ≥ base.
    pub fn derivative_product(&self, n: usize, k: usize) -> Result<C<T>, ChainError> {
        let j = self.idx(n)?;
        if k > j {
            return Err(ChainError::IndexRange { n: n - k, max: self.max_n() });
        }
        let mut d = C::new(T::one(), T::zero());
        for i in 0..k {
            d = d * self.derivatives[j - i];
        }
        Ok(d)
    }

    /// Chain validity: backward-orbit residuals, size definition, half-plane
    /// alternation in conjugate pairs, and same-parity decay of |z_n|.
    pub fn validate(&self, nf: &NormalForm<T>) -> Result<(), ChainError> {
        for n in 0..self.anchors.len() - 1 {
            let res = (nf.apply(self.anchors[n + 1]) - self.anchors[n]).norm();
            if res > T::of(1e-11) {
                return Err(ChainError::NewtonStalled { n });
            }
        }
        for i in 0..self.sizes.len() {
            let s = (self.anchors[i + 2] - self.anchors[i]).norm() * T::of(0.5);
            if s != self.sizes[i] {
                return Err(ChainError::IndexRange { n: i + 1, max: self.sizes.len() });
            }
        }
        for n in 0..self.anchors.len() - 1 {
            let a = self.anchors[n].im;
            let b = self.anchors[n + 1].im;
            if a == T::zero() || b == T::zero() || a.signum() == b.signum() {
                return Err(ChainError::BranchJump { n, kept: self.anchors.len() });
            }
        }
        // |z_n| decays along each parity class once transients pass
        for n in 8..self.anchors.len().saturating_sub(2) {
            let now = self.anchors[n].norm();
            let next = self.anchors[n + 2].norm();
            if next > now * (T::one() + T::of(1e-9)) + T::of(1e-15) {
                return Err(ChainError::BranchJump { n, kept: self.anchors.len() });
            }
        }
        Ok(())
    }
}

/// Build the chain covering true indices base..=n_max from `z_start`
/// (repelling access, off the real axis): the start is pushed forward to the
/// petal edge, the chain is re-based there by the Fatou coordinate, and
/// successive anchors are preimages under the branch with derivative ≈ −1 at
/// the parabolic point.
pub fn backward_chain<T: Real>(
    nf: &NormalForm<T>,
    z_start: C<T>,
    n_max: usize,
) -> Result<CylinderChain<T>, ChainError> {
    if n_max > 100_000 {
        return Err(ChainError::TooLong { n: n_max });
    }
    if z_start.im == T::zero() || z_start.norm() > T::of(0.2) {
        return Err(ChainError::BadStart { z: format!("{z_start:?}") });
    }
    let h = crate::normal_form::HMap::new(nf)
        .map_err(|_| ChainError::BadStart { z: format!("{z_start:?}") })?;
    let fatou_index = |z: C<T>| -> Option<T> {
        let zh = h.apply(z).ok()?;
        let big_z = crate::normal_form::fatou_z(nf, zh).ok()?;
        Some(-big_z.re)
    };

    // forward phase: walk out of the cylinder stack toward the petal edge
    let mut outward = vec![z_start];
    let mut w = z_start;
    for _ in 0..400 {
        let next = nf.apply(w);
        let idx = match fatou_index(next) {
            Some(i) => i,
            None => break,
        };
        if idx < T::of(1.5) || next.norm() > T::of(0.4) || next.im == T::zero() {
            break;
        }
        outward.push(next);
        w = next;
    }
    let edge = *outward.last().unwrap();
    let base_f = fatou_index(edge).unwrap_or(T::zero()).max(T::zero());
    let base = base_f.round().to_f64().unwrap_or(0.0) as usize;
    if n_max <= base + outward.len() {
        return Err(ChainError::BadStart { z: format!("{z_start:?} (n_max too small)") });
    }

    let mut anchors: Vec<C<T>> = outward.into_iter().rev().collect();
    let mut z = *anchors.last().unwrap();
    while base + anchors.len() <= n_max {
        let n = base + anchors.len() - 1;
        let w = backward_step(nf, z).ok_or(ChainError::NewtonStalled { n })?;
        if (w + z).norm() > T::of(0.5) * z.norm() {
            return Err(ChainError::BranchJump { n, kept: anchors.len() });
        }
        anchors.push(w);
        z = w;
    }
    let sizes = (0..anchors.len().saturating_sub(2))
        .map(|i| (anchors[i + 2] - anchors[i]).norm() * T::of(0.5))
        .collect();
    let derivatives = anchors.iter().map(|&a| nf.derivative(a)).collect();
    Ok(CylinderChain { base, anchors, sizes, derivatives })
}

fn backward_step<T: Real>(nf: &NormalForm<T>, target: C<T>) -> Option<C<T>> {
    // seed: linearized inverse through the branch fixing 0
    let mut w = target / nf.lambda;
    let tol = T::of(1e-14) * (T::one() + target.norm());
    for _ in 0..60 {
        let g = nf.apply(w) - target;
        if g.norm() <= tol {
            return Some(w);
        }
        let d = nf.derivative(w);
        if d.norm() < T::of(1e-300) {
            return None;
        }
        w = w - g / d;
    }
    let g = nf.apply(w) - target;
    if g.norm() <= T::of(1e-11) {
        Some(w)
    } else {
        None
    }
}

/// ψ̇_λ(z_n) = −Σ_j F^{j−1}(z_n)/(F^j)′(z_n), the sum following the forward
/// orbit of z_n through the anchors up to the petal edge.
pub fn psi_dot<T: Real>(chain: &CylinderChain<T>, n: usize) -> Result<C<T>, ChainError> {
    let depth = chain.idx(n)?;
    if depth == 0 {
        return Err(ChainError::IndexRange { n, max: chain.max_n() });
    }
    let mut prefix = C::new(T::one(), T::zero());
    let mut sum_re = CompensatedSum::new();
    let mut sum_im = CompensatedSum::new();
    for j in 1..=depth {
        // (F^j)′(z_n) = Π F′ over the forward orbit segment
        prefix = prefix * chain.derivatives[depth - j + 1];
        if prefix.norm() < T::of(1e-300) {
            return Err(ChainError::DerivativeUnderflow { j });
        }
        let term = chain.anchors[depth - j + 1] / prefix;
        sum_re.add(-term.re);
        sum_im.add(-term.im);
    }
    Ok(C::new(sum_re.value(), sum_im.value()))
}

/// β_λ(z_n) = Im z_n · Im ψ̇_λ(z_n).
pub fn beta<T: Real>(chain: &CylinderChain<T>, n: usize) -> Result<T, ChainError> {
    Ok(chain.anchor(n)?.im * psi_dot(chain, n)?.im)
}

/// |A²·β_λ(z_n) − Γ(nδ)|, the profile-function residual.
pub fn beta_gamma_residual<T: Real>(
    nf: &NormalForm<T>,
    chain: &CylinderChain<T>,
    n: usize,
) -> Result<T, ChainError> {
    let b = beta(chain, n)?;
    let x = T::from_usize(n).unwrap() * nf.delta_re();
    Ok((nf.scale * nf.scale * b - gamma_fn(x)).abs())
}

/// One row of the perturbation table at anchor n.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PerturbationSample<T: Real> {
    pub n: usize,
    pub z: C<T>,
    pub psi_dot: C<T>,
    pub beta: T,
    /// 𝔇²(z, ψ̇) = (∂F′/∂λ)(z) + ψ̇·F″(z)
    pub dsq: C<T>,
    /// Re(𝔇²/F′) at the anchor
    pub re_ratio: T,
    /// prediction 6A²β − 1
    pub re_predicted_beta: T,
    /// prediction 6Γ(nδ) − 1
    pub re_predicted_gamma: T,
}

/// Assemble ψ̇, β, 𝔇², and the Re ratio with both profile predictions.
pub fn perturbation_sample<T: Real>(
    nf: &NormalForm<T>,
    chain: &CylinderChain<T>,
    n: usize,
) -> Result<PerturbationSample<T>, ChainError> {
    let z = chain.anchor(n)?;
    let pd = psi_dot(chain, n)?;
    let b = z.im * pd.im;
    let dsq = nf.dlambda_derivative(z) + pd * nf.second_derivative(z);
    let ratio = dsq / nf.derivative(z);
    let a2 = nf.scale * nf.scale;
    let x = T::from_usize(n).unwrap() * nf.delta_re();
    Ok(PerturbationSample {
        n,
        z,
        psi_dot: pd,
        beta: b,
        dsq,
        re_ratio: ratio.re,
        re_predicted_beta: T::of(6.0) * a2 * b - T::one(),
        re_predicted_gamma: T::of(6.0) * gamma_fn(x) - T::one(),
    })
}

/// Re(𝔇²/F′) at anchor n.
pub fn dsquare_re_ratio<T: Real>(
    nf: &NormalForm<T>,
    chain: &CylinderChain<T>,
    n: usize,
) -> Result<T, ChainError> {
    Ok(perturbation_sample(nf, chain, n)?.re_ratio)
}

/// Re(𝔇²/F′) at cylinder granularity: the n-th cylinder has components on
/// both half-planes at adjacent anchor parities, and the pointwise ratio
/// carries a large parity-alternating component that cancels between them;
/// this returns the two-representative average.
pub fn dsquare_re_ratio_cylinder<T: Real>(
    nf: &NormalForm<T>,
    chain: &CylinderChain<T>,
    n: usize,
) -> Result<T, ChainError> {
    let a = perturbation_sample(nf, chain, n)?.re_ratio;
    let b = perturbation_sample(nf, chain, n + 1)?.re_ratio;
    Ok((a + b) * T::of(0.5))
}

/// Mass regimes of the model measure: m_n = |δ|^{3h/2−1}·∫ tail of Λ₀ʰ from
/// nδ (toward +∞ for δ > 0, toward −∞ for δ < 0), constants normalized to 1.
#[derive(Clone, Debug, Serialize)]
pub struct MassReport<T: Real> {
    pub h: T,
    pub delta: T,
    pub n_cut: usize,
    pub alpha_cut: T,
    /// Σ m_n over n_cut < n ≤ α/|δ|
    pub shallow: T,
    /// Σ m_n over n > α/|δ|
    pub deep: T,
    /// shallow + deep
    pub total: T,
    pub regime: Regime<T>,
    pub terms: usize,
}

/// Σ_{n>N} m_n split at n = α/|δ|, with the regime classification of its
/// δ → 0 growth (|δ|^{3h/2−2} for h < 4/3, logarithmic at 4/3, bounded
/// above 4/3).
pub fn measure_model_mass<T: Real>(
    h: T,
    delta: T,
    n_cut: usize,
    alpha_cut: T,
) -> Result<MassReport<T>, ChainError> {
    if h <= T::one() || h >= T::of(2.0) || delta == T::zero() {
        return Err(ChainError::MassDomain);
    }
    let abs_d = delta.abs();
    let prefactor = abs_d.powf(T::of(1.5) * h - T::one());
    let n_split = (alpha_cut / abs_d).to_f64().unwrap_or(0.0).floor().max(0.0) as usize;
    // stop once the remaining tail is exponentially negligible: the masses
    // decay like e^{-2h·nδ} on the plus side and e^{-h·n|δ|} on the minus side
    let decay = if delta > T::zero() { h + h } else { h };
    let n_stop = (T::of(42.0) / (decay * abs_d)).to_f64().unwrap_or(1e9).ceil() as usize;
    let n_stop = n_stop.max(n_cut + 8);

    let side = if delta > T::zero() { TailSide::Plus } else { TailSide::Minus };
    let deepest_s = delta * T::from_usize(n_stop).unwrap();
    let mut g = g_tail(h, deepest_s, side).map_err(|_| ChainError::MassDomain)?.value;

    // walk n downward from n_stop, extending the tail one Riemann panel at a
    // time; panels are adaptive Gauss-Kronrod on [(n−1)δ, nδ] (or mirrored)
    // at a tolerance scaled to the local integrand size
    let integrand = |u: T| lambda_fn(h, T::zero(), u).unwrap_or(T::zero());
    let mut shallow = CompensatedSum::new();
    let mut deep = CompensatedSum::new();
    let mut terms = 0usize;
    let mut n = n_stop;
    while n > n_cut {
        let m_n = prefactor * g;
        if n > n_split {
            deep.add(m_n);
        } else {
            shallow.add(m_n);
        }
        terms += 1;
        if n - 1 > n_cut {
            // extend the integral from (n−1)δ to nδ
            let s_lo = delta * T::from_usize(n - 1).unwrap();
            let s_hi = delta * T::from_usize(n).unwrap();
            let (a, b) = if delta > T::zero() { (s_lo, s_hi) } else { (s_hi, s_lo) };
            let scale = (integrand(a) + integrand(b)) * abs_d;
            let tol = (scale * T::of(1e-10)).max(T::of(1e-18));
            let panel = quad::integrate(integrand, a, b, tol)?;
            g = g + panel.value;
        }
        n -= 1;
    }
    let shallow = shallow.value();
    let deep = deep.value();
    Ok(MassReport {
        h,
        delta,
        n_cut,
        alpha_cut,
        shallow,
        deep,
        total: shallow + deep,
        regime: crate::special::classify_regime(h, T::of(1e-3)),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type Cx = C<f64>;

    fn slope(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let xb = points.iter().map(|p| p.0).sum::<f64>() / n;
        let yb = points.iter().map(|p| p.1).sum::<f64>() / n;
        points.iter().map(|p| (p.0 - xb) * (p.1 - yb)).sum::<f64>()
            / points.iter().map(|p| (p.0 - xb) * (p.0 - xb)).sum::<f64>()
    }

    #[test]
    fn chain_validity_model_parabolic() {
        let nf = NormalForm::model(0.0);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 2000).unwrap();
        chain.validate(&nf).unwrap();
        assert!(chain.base < 10, "base {}", chain.base);
        // anchors alternate half-planes in conjugate pairs
        assert!(chain.anchors[5].im * chain.anchors[6].im < 0.0);
        // conjugate-pair symmetry of the lower chain
        let lower = backward_chain(&nf, Cx::new(0.0, -0.1), 2000).unwrap();
        assert_eq!(chain.base, lower.base);
        for (u, l) in chain.anchors.iter().zip(lower.anchors.iter()) {
            assert!((u.conj() - l).norm() < 1e-12);
        }
    }

    #[test]
    fn chain_index_is_fatou_calibrated() {
        // -Re Z(h(z_n)) tracks n itself once the chain is re-based; the
        // residual offset is the O(1) edge defect
        let nf = NormalForm::model(0.0);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 3000).unwrap();
        let h = crate::normal_form::HMap::new(&nf).unwrap();
        for &(n, band) in &[(50usize, 0.1), (200, 0.03), (1000, 0.01), (2500, 0.01)] {
            let z = chain.anchor(n).unwrap();
            let zz = crate::normal_form::fatou_z(&nf, h.apply(z).unwrap()).unwrap();
            let ratio = -zz.re / n as f64;
            assert!((ratio - 1.0).abs() < band, "n={n}: Fatou index ratio {ratio}");
        }
    }

    #[test]
    fn chain_decay_exponent_parabolic() {
        // |z_n| ~ C n^{-1/2} at delta = 0
        let nf = NormalForm::model(0.0);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 10_000).unwrap();
        let pts: Vec<(f64, f64)> = (100..10_000)
            .step_by(90)
            .map(|n| ((n as f64).ln(), chain.anchor(n).unwrap().norm().ln()))
            .collect();
        let s = slope(&pts);
        assert!((s + 0.5).abs() < 0.03, "slope {s}");
    }

    #[test]
    fn chain_plateau_for_positive_delta() {
        // n*delta large: |Im z_n| plateaus at sqrt(delta)/A
        let delta = 0.004f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 4000).unwrap();
        let plateau = delta.sqrt();
        for n in 3000..4000 {
            let ratio = chain.anchor(n).unwrap().im.abs() / plateau;
            assert!((0.8..1.25).contains(&ratio), "n={n}: ratio {ratio}");
        }
    }

    #[test]
    fn chain_exponential_decay_for_negative_delta() {
        // log|Im z_n| decays with slope close to delta once n|delta| > 1
        let delta = -0.004f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 2500).unwrap();
        let pts: Vec<(f64, f64)> = (400..2400)
            .step_by(8)
            .map(|n| (n as f64, chain.anchor(n).unwrap().im.abs().ln()))
            .collect();
        let s = slope(&pts);
        assert!((s - delta).abs() < 0.2 * delta.abs(), "slope {s} vs delta {delta}");
    }

    #[test]
    fn cylinder_size_slope_and_indexing() {
        let nf = NormalForm::model(0.0);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 5001).unwrap();
        let pts: Vec<(f64, f64)> = (50..=5000)
            .step_by(45)
            .map(|n| ((n as f64).ln(), chain.size(n).unwrap().ln()))
            .collect();
        let s = slope(&pts);
        assert!((s + 1.5).abs() < 0.05, "size slope {s}");
        assert!(chain.size(0).is_err());
        assert!(chain.size(chain.base).is_err());
        assert!(chain.size(5001).is_err());
        let n = chain.base + 7;
        assert_relative_eq!(
            chain.size(n).unwrap(),
            0.5 * (chain.anchor(n + 1).unwrap() - chain.anchor(n - 1).unwrap()).norm(),
            epsilon = 0.0
        );
    }

    #[test]
    fn cylinder_size_vs_second_iterate_displacement() {
        // |C_n| tracks |F^2(z) - z| within [0.4, 0.6]
        let nf = NormalForm::model(0.0);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 3000).unwrap();
        for n in (100..2500).step_by(137) {
            let z = chain.anchor(n).unwrap();
            let disp = (nf.apply(nf.apply(z)) - z).norm();
            let ratio = chain.size(n).unwrap() / disp;
            assert!((0.4..0.6).contains(&ratio), "n={n}: {ratio}");
        }
    }

    #[test]
    fn cylinder_hyperbolic_decay() {
        // delta = 0.01, n*delta > 1: exponential decay of |C_n|
        let delta = 0.01f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 900).unwrap();
        let pts: Vec<(f64, f64)> = (300..850)
            .step_by(10)
            .map(|n| (n as f64, chain.size(n).unwrap().ln()))
            .collect();
        let s = slope(&pts);
        assert!(s < -delta, "decay slope {s} not below -delta");
        let bound = 10.0 * delta.powf(1.5) * (-400.0 * delta / 10.0).exp();
        assert!(chain.size(400).unwrap() <= bound, "size {}", chain.size(400).unwrap());
    }

    #[test]
    fn size_law_in_im_z_cubed() {
        // |C_n| / (A^2 |Im z_n|^3 e^{-2n delta}) in [0.8, 1.25], n in [200, 2000]
        for &delta in &[0.002f64, -0.002, 0.0005, 0.0] {
            let nf = NormalForm::model(delta);
            let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 2100).unwrap();
            for n in (200..=2000).step_by(75) {
                let im = chain.anchor(n).unwrap().im.abs();
                let pred = im.powi(3) * (-2.0 * n as f64 * delta).exp();
                let ratio = chain.size(n).unwrap() / pred;
                assert!((0.8..1.25).contains(&ratio), "delta={delta}, n={n}: {ratio}");
            }
        }
    }

    #[test]
    fn im_squared_law() {
        // A^2 Im^2 z_n vs delta e^{2n delta}/(e^{2n delta}-1) within 25%
        for &delta in &[0.002f64, -0.002] {
            let nf = NormalForm::model(delta);
            let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 2100).unwrap();
            for n in (200..=2000).step_by(120) {
                let x = 2.0 * n as f64 * delta;
                let pred = delta * x.exp() / x.exp_m1();
                let got = chain.anchor(n).unwrap().im.powi(2);
                let ratio = got / pred;
                assert!((0.75..1.25).contains(&ratio), "delta={delta}, n={n}: {ratio}");
            }
        }
    }

    #[test]
    fn derivative_size_law() {
        // |(F^k)'(z_{n+k})| matches |C_n|/|C_{n+k}| within 10%
        let nf = NormalForm::model(0.001);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 2300).unwrap();
        for &(n, k) in &[(200usize, 2usize), (400, 10), (800, 50), (1500, 24)] {
            let d = chain.derivative_product(n + k, k).unwrap();
            let expect = chain.size(n).unwrap() / chain.size(n + k).unwrap();
            let ratio = d.norm() / expect;
            assert!((0.9..1.1).contains(&ratio), "n={n},k={k}: {ratio}");
        }
    }

    #[test]
    fn psi_dot_identities() {
        let nf = NormalForm::model(0.002);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 600).unwrap();
        // single term at the first interior anchor
        let first = chain.base + 1;
        let p1 = psi_dot(&chain, first).unwrap();
        let z1 = chain.anchor(first).unwrap();
        let direct = -z1 / nf.derivative(z1);
        assert!((p1 - direct).norm() < 1e-15);
        // one-step recursion: psi(z_n) F'(z_n) = -z_n + psi(z_{n-1})
        for &n in &[chain.base + 2, 17, 300, 599] {
            let zn = chain.anchor(n).unwrap();
            let lhs = psi_dot(&chain, n).unwrap() * nf.derivative(zn);
            let rhs = -zn + psi_dot(&chain, n - 1).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()), "n={n}");
        }
    }

    #[test]
    fn psi_dot_growth_bound() {
        // |psi(z_n)| <= K e^{eps n |delta|}/|Im z_n| with finite fitted K
        let delta = 0.002f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 1000).unwrap();
        let eps = 0.05;
        let mut k_fit: f64 = 0.0;
        for n in (20..1000).step_by(35) {
            let p = psi_dot(&chain, n).unwrap().norm();
            let im = chain.anchor(n).unwrap().im.abs();
            let bound_unit = (eps * n as f64 * delta).exp() / im;
            k_fit = k_fit.max(p / bound_unit);
        }
        assert!(k_fit.is_finite() && k_fit < 5.0, "K = {k_fit}");
    }

    #[test]
    fn beta_matches_gamma_profile() {
        for &delta in &[0.002f64, -0.002] {
            let nf = NormalForm::model(delta);
            let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 900).unwrap();
            let r125 = beta_gamma_residual(&nf, &chain, 125).unwrap();
            assert!(r125 <= 0.02, "delta={delta}: residual {r125}");
            let r500 = beta_gamma_residual(&nf, &chain, 500).unwrap();
            assert!(r500 <= 0.03, "delta={delta}: residual {r500}");
        }
        // n*delta = 4: A^2 beta within [Gamma(4)-0.05, Gamma(4)+0.05]
        let delta = 0.002f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 2100).unwrap();
        let b = beta(&chain, 2000).unwrap();
        let g4 = gamma_fn(4.0f64);
        assert!((b - g4).abs() <= 0.05, "A^2 beta = {b} vs Gamma(4) = {g4}");
        assert!((g4 - 0.5).abs() < 0.01);
    }

    #[test]
    fn re_ratio_tracks_gamma() {
        // n delta -> 0+ deep in the chain: Re ratio -> 6 Gamma(0) - 1 = 1/2
        let delta = 1e-6f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 5001).unwrap();
        let s = dsquare_re_ratio_cylinder(&nf, &chain, 5000).unwrap();
        assert!((s - 0.5).abs() < 0.05, "re_ratio {s}");
        // n delta = -3: value close to 6 Gamma(-3) - 1, itself close to -1
        let delta = -0.002f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 1600).unwrap();
        let s = dsquare_re_ratio_cylinder(&nf, &chain, 1500).unwrap();
        let pred = 6.0 * gamma_fn(-3.0f64) - 1.0;
        assert!((s - pred).abs() < 0.1, "re_ratio {s} vs {pred}");
        assert!((pred + 1.0).abs() < 0.05);
        // the pointwise ratio alternates with the half-plane parity around
        // the cylinder-level value
        let p0 = dsquare_re_ratio(&nf, &chain, 1500).unwrap();
        let p1 = dsquare_re_ratio(&nf, &chain, 1501).unwrap();
        assert!((0.5 * (p0 + p1) - s).abs() < 1e-12);
    }

    #[test]
    fn re_psi_dot_tracks_minus_a_beta() {
        // Re psi close to -a beta within 0.05 (1 + beta) for n >= 100
        let delta = -0.002f64;
        let nf = NormalForm::model(delta);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 1200).unwrap();
        for n in 100..1200 {
            let s = perturbation_sample(&nf, &chain, n).unwrap();
            let lhs = (s.psi_dot.re + nf.a.re * s.beta).abs();
            assert!(lhs <= 0.05 * (1.0 + s.beta), "n={n}: {lhs}");
        }
        // on the repelling side the correction is larger near n = 100 but
        // still decays with the anchor scale
        let nf = NormalForm::model(0.002);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 1200).unwrap();
        for n in 100..1200 {
            let s = perturbation_sample(&nf, &chain, n).unwrap();
            let lhs = (s.psi_dot.re + nf.a.re * s.beta).abs();
            assert!(lhs <= 0.12 * (1.0 + s.beta), "n={n}: {lhs}");
        }
    }

    #[test]
    fn beta_invariant_field_consistency() {
        let nf = NormalForm::model(0.002);
        let chain = backward_chain(&nf, Cx::new(0.0, 0.1), 200).unwrap();
        let s = perturbation_sample(&nf, &chain, 150).unwrap();
        assert_eq!(s.beta, s.z.im * s.psi_dot.im);
    }

    #[test]
    fn chain_input_validation() {
        let nf = NormalForm::model(0.0);
        assert!(matches!(
            backward_chain(&nf, Cx::new(0.1, 0.0), 100),
            Err(ChainError::BadStart { .. })
        ));
        assert!(matches!(
            backward_chain(&nf, Cx::new(0.0, 0.3), 100),
            Err(ChainError::BadStart { .. })
        ));
        assert!(matches!(
            backward_chain(&nf, Cx::new(0.0, 0.1), 200_000),
            Err(ChainError::TooLong { .. })
        ));
    }

    #[test]
    fn mass_model_regimes() {
        // h = 1.2: deep-mass ratio across delta follows |delta|^{3h/2-2}
        let m3 = measure_model_mass(1.2f64, 1e-3, 1, 1.0).unwrap();
        let m4 = measure_model_mass(1.2f64, 1e-4, 1, 1.0).unwrap();
        let ratio = m4.deep / m3.deep;
        let predicted = 10f64.powf(0.2);
        assert!((ratio / predicted - 1.0).abs() < 0.1, "deep ratio {ratio} vs {predicted}");
        // h = 4/3: shallow mass grows like -log|delta|
        let h = 4.0 / 3.0;
        let m3 = measure_model_mass(h, 1e-3, 1, 1.0).unwrap();
        let m4 = measure_model_mass(h, 1e-4, 1, 1.0).unwrap();
        let ratio = m4.shallow / m3.shallow;
        assert!((ratio / (4.0f64 / 3.0) - 1.0).abs() < 0.1, "log ratio {ratio}");
        // h = 1.5: total masses bounded; growth exponent zero within 0.1
        let m3 = measure_model_mass(1.5f64, 1e-3, 1, 1.0).unwrap();
        let m4 = measure_model_mass(1.5f64, 1e-4, 1, 1.0).unwrap();
        let ratio = m4.total / m3.total;
        let exponent = ratio.ln() / 0.1f64.ln();
        assert!(exponent.abs() < 0.1, "bounded-regime exponent {exponent}");
        assert!(ratio > 0.8 && ratio < 1.25, "bounded ratio {ratio}");
        assert!(matches!(m3.regime, Regime::Finite));
        assert!(measure_model_mass(1.2f64, 0.0, 1, 1.0).is_err());
        assert!(measure_model_mass(0.9f64, 1e-3, 1, 1.0).is_err());
    }
}
