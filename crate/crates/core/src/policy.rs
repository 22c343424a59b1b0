//! Distributions on [0, 1] and the policy-space transforms connecting
//! MixUp, DAT, and Untied MixUp.
//!
//! A [`Policy`] is stored as bin masses on a uniform grid over [0, 1].
//! Bin masses stay finite even when an analytic Beta density diverges at
//! an endpoint (shape < 1), so analytic and ad hoc policies go through
//! the same representation. The grid is uniform with an even
//! number of bins, which makes 0.5 a bin boundary and pairs bin `i` with
//! bin `n - 1 - i` under the reflection `λ ↦ 1 − λ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta_reg;
use thiserror::Error;

/// Default grid resolution.
pub const DEFAULT_BINS: usize = 1024;

/// Densities below this (summed with the reflected bin) are treated as
/// never drawn; the weighting function is set to 0.5 there.
pub const EPSILON_ZERO: f64 = 1e-12;

/// Tolerance on the mass-sum invariant for externally supplied masses.
/// The allowance per bin covers the 12-digit fixed-point text format.
fn mass_sum_tolerance(n_bins: usize) -> f64 {
    1e-9 + n_bins as f64 * 5e-13
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("beta shape parameters must be positive and finite, got alpha={alpha}, beta={beta}")]
    InvalidShape { alpha: f64, beta: f64 },
    #[error("grid must have an even number of bins, at least 2, got {n_bins}")]
    InvalidGrid { n_bins: usize },
    #[error("bin {index} has negative mass {mass}")]
    NegativeMass { index: usize, mass: f64 },
    #[error("masses sum to {sum}, outside tolerance of 1")]
    MassSum { sum: f64 },
    #[error("value {value} for {what} is outside [0, 1]")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("policy and weighting function disagree on grid size: {policy} vs {weighting}")]
    GridMismatch { policy: usize, weighting: usize },
    #[error("malformed {what} at line {line}: {detail}")]
    Parse {
        what: &'static str,
        line: usize,
        detail: String,
    },
}

/// How a policy was constructed. Transform outputs are always `Grid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Beta { alpha: f64, beta: f64 },
    Grid,
}

/// A probability distribution on [0, 1], held as nonnegative bin masses
/// that sum to 1 on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    kind: PolicyKind,
    masses: Vec<f64>,
}

/// Midpoint of bin `i` on an `n`-bin uniform grid over [0, 1].
pub fn bin_midpoint(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

fn check_grid(n_bins: usize) -> Result<(), PolicyError> {
    if n_bins < 2 || !n_bins.is_multiple_of(2) {
        return Err(PolicyError::InvalidGrid { n_bins });
    }
    Ok(())
}

/// Renormalize in place; warn if the residual exceeds what midpoint
/// discretization should produce at this resolution.
fn renormalize(masses: &mut [f64], op: &str) {
    let sum: f64 = masses.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        log::warn!(
            "{op}: mass residual {:.3e} exceeds 1e-6; grid resolution may be too coarse",
            sum - 1.0
        );
    }
    for m in masses.iter_mut() {
        *m /= sum;
        if *m == 0.0 {
            *m = 0.0; // normalize -0.0
        }
    }
}

impl Policy {
    /// Beta(alpha, beta) discretized to exact bin masses via regularized
    /// incomplete beta CDF differences.
    pub fn beta(alpha: f64, beta: f64, n_bins: usize) -> Result<Self, PolicyError> {
        if alpha <= 0.0 || beta <= 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(PolicyError::InvalidShape { alpha, beta });
        }
        check_grid(n_bins)?;
        let mut cdf_prev = 0.0;
        let mut masses = Vec::with_capacity(n_bins);
        for i in 1..=n_bins {
            let cdf = if i == n_bins {
                1.0
            } else {
                beta_reg(alpha, beta, i as f64 / n_bins as f64)
            };
            masses.push((cdf - cdf_prev).max(0.0));
            cdf_prev = cdf;
        }
        renormalize(&mut masses, "beta policy");
        Ok(Policy {
            kind: PolicyKind::Beta { alpha, beta },
            masses,
        })
    }

    /// Uniform distribution on [0, 1].
    pub fn uniform(n_bins: usize) -> Result<Self, PolicyError> {
        check_grid(n_bins)?;
        Ok(Policy {
            kind: PolicyKind::Beta {
                alpha: 1.0,
                beta: 1.0,
            },
            masses: vec![1.0 / n_bins as f64; n_bins],
        })
    }

    /// All mass in the bin containing `lambda` (`lambda = 1` lands in the
    /// last bin).
    pub fn point_mass(lambda: f64, n_bins: usize) -> Result<Self, PolicyError> {
        check_grid(n_bins)?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(PolicyError::OutOfRange {
                what: "lambda",
                value: lambda,
            });
        }
        let mut masses = vec![0.0; n_bins];
        masses[bin_of(lambda, n_bins)] = 1.0;
        Ok(Policy {
            kind: PolicyKind::Grid,
            masses,
        })
    }

    /// Grid policy from masses that already sum to 1 (within tolerance).
    pub fn from_masses(masses: Vec<f64>) -> Result<Self, PolicyError> {
        check_grid(masses.len())?;
        for (index, &mass) in masses.iter().enumerate() {
            if mass < 0.0 || mass.is_nan() {
                return Err(PolicyError::NegativeMass { index, mass });
            }
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > mass_sum_tolerance(masses.len()) {
            return Err(PolicyError::MassSum { sum });
        }
        let mut masses = masses;
        renormalize(&mut masses, "from_masses");
        Ok(Policy {
            kind: PolicyKind::Grid,
            masses,
        })
    }

    /// Grid policy from arbitrary nonnegative weights, normalized.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, PolicyError> {
        check_grid(weights.len())?;
        for (index, &mass) in weights.iter().enumerate() {
            if mass < 0.0 || !mass.is_finite() {
                return Err(PolicyError::NegativeMass { index, mass });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(PolicyError::MassSum { sum });
        }
        let mut masses = weights;
        for m in masses.iter_mut() {
            *m /= sum;
        }
        Ok(Policy {
            kind: PolicyKind::Grid,
            masses,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn n_bins(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        bin_midpoint(i, self.masses.len())
    }

    /// Index of the bin containing `lambda`.
    pub fn bin_of(&self, lambda: f64) -> usize {
        bin_of(lambda, self.masses.len())
    }

    /// Sum of |mass_i - other.mass_i|.
    pub fn l1_distance(&self, other: &Policy) -> f64 {
        assert_eq!(self.n_bins(), other.n_bins(), "grid size mismatch");
        self.masses
            .iter()
            .zip(&other.masses)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Whether mass(i) == mass(n-1-i) exactly.
    pub fn is_symmetric(&self) -> bool {
        let n = self.masses.len();
        (0..n / 2).all(|i| self.masses[i] == self.masses[n - 1 - i])
    }

    /// The map sending a MixUp policy to the DAT policy with the same
    /// expected loss on symmetric pair sequences:
    /// `p'(λ) ∝ λ (p(λ) + p(1−λ))`, evaluated at bin midpoints with
    /// reversed-grid lookup, then renormalized.
    pub fn mix_to_dat(&self) -> Policy {
        let n = self.masses.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let lambda = bin_midpoint(i, n);
            out.push(lambda * (self.masses[i] + self.masses[n - 1 - i]));
        }
        renormalize(&mut out, "mix_to_dat");
        Policy {
            kind: PolicyKind::Grid,
            masses: out,
        }
    }

    /// The map sending a DAT policy to the Untied MixUp scheme with the
    /// same expected loss: policy `½(p(λ) + p(1−λ))` and weighting
    /// `g(λ) = p(λ) / (p(λ) + p(1−λ))`, with `g = 0.5` where the
    /// denominator vanishes (those λ are never drawn).
    pub fn dat_to_untied(&self) -> UntiedScheme {
        let n = self.masses.len();
        let mut out = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        for i in 0..n {
            let m = self.masses[i];
            let m_rev = self.masses[n - 1 - i];
            out.push(0.5 * (m + m_rev));
            // threshold on density, not mass: density = mass * n
            if (m + m_rev) * (n as f64) < EPSILON_ZERO {
                gamma.push(0.5);
            } else {
                gamma.push(m / (m + m_rev));
            }
        }
        renormalize(&mut out, "dat_to_untied");
        UntiedScheme {
            policy: Policy {
                kind: PolicyKind::Grid,
                masses: out,
            },
            weighting: WeightingFunction { values: gamma },
        }
    }

    /// Inverse-CDF sampling over bin masses with uniform placement inside
    /// the selected bin. Deterministic given the seed.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let n = self.masses.len();
        let mut cum = Vec::with_capacity(n);
        let mut acc = 0.0;
        for &m in &self.masses {
            acc += m;
            cum.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let u: f64 = rng.gen::<f64>() * total;
            // first bin whose cumulative mass exceeds u; zero-mass bins are
            // skipped automatically because their cumulative value equals
            // their predecessor's
            let i = cum.partition_point(|&c| c <= u).min(n - 1);
            let before = if i == 0 { 0.0 } else { cum[i - 1] };
            let frac = if self.masses[i] > 0.0 {
                ((u - before) / self.masses[i]).clamp(0.0, 1.0 - f64::EPSILON)
            } else {
                0.5
            };
            out.push((i as f64 + frac) / n as f64);
        }
        out
    }

    /// Text form: header `policy n_bins=<N>`, then one mass per line in
    /// fixed point with 12 fractional digits.
    pub fn to_text(&self) -> String {
        let mut s = format!("policy n_bins={}\n", self.masses.len());
        for m in &self.masses {
            s.push_str(&format!("{m:.12}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let masses = parse_grid_file(text, "policy")?;
        Policy::from_masses(masses)
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            PolicyKind::Beta { alpha, beta } => write!(f, "B({alpha},{beta})"),
            PolicyKind::Grid => write!(f, "grid({})", self.masses.len()),
        }
    }
}

fn bin_of(lambda: f64, n_bins: usize) -> usize {
    ((lambda * n_bins as f64) as usize).min(n_bins - 1)
}

/// A weighting function on the unit interval, held as values at bin
/// midpoints and evaluated piecewise-constant per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightingFunction {
    values: Vec<f64>,
}

impl WeightingFunction {
    pub fn from_values(values: Vec<f64>) -> Result<Self, PolicyError> {
        check_grid(values.len())?;
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(PolicyError::OutOfRange {
                    what: "gamma value",
                    value: v,
                });
            }
        }
        Ok(WeightingFunction { values })
    }

    /// γ(λ) = λ sampled at bin midpoints.
    pub fn identity(n_bins: usize) -> Result<Self, PolicyError> {
        check_grid(n_bins)?;
        Ok(WeightingFunction {
            values: (0..n_bins).map(|i| bin_midpoint(i, n_bins)).collect(),
        })
    }

    pub fn constant(value: f64, n_bins: usize) -> Result<Self, PolicyError> {
        check_grid(n_bins)?;
        if !(0.0..=1.0).contains(&value) {
            return Err(PolicyError::OutOfRange {
                what: "gamma value",
                value,
            });
        }
        Ok(WeightingFunction {
            values: vec![value; n_bins],
        })
    }

    pub fn n_bins(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the bin containing `lambda`.
    pub fn lookup(&self, lambda: f64) -> f64 {
        self.values[bin_of(lambda, self.values.len())]
    }

    /// Text form: header `gamma n_bins=<N>`, then one value per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("gamma n_bins={}\n", self.values.len());
        for v in &self.values {
            s.push_str(&format!("{v:.12}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, PolicyError> {
        let values = parse_grid_file(text, "gamma")?;
        WeightingFunction::from_values(values)
    }
}

/// An Untied MixUp scheme: a mixing policy plus a weighting function on
/// the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UntiedScheme {
    pub policy: Policy,
    pub weighting: WeightingFunction,
}

impl UntiedScheme {
    pub fn new(policy: Policy, weighting: WeightingFunction) -> Result<Self, PolicyError> {
        if policy.n_bins() != weighting.n_bins() {
            return Err(PolicyError::GridMismatch {
                policy: policy.n_bins(),
                weighting: weighting.n_bins(),
            });
        }
        Ok(UntiedScheme { policy, weighting })
    }

    pub fn n_bins(&self) -> usize {
        self.policy.n_bins()
    }

    /// The map sending an Untied MixUp scheme to the DAT policy with the
    /// same expected loss: `p'(λ) = g(λ) p(λ) + (1 − g(1−λ)) p(1−λ)`.
    /// The unnormalized output already sums to 1; only rounding residue
    /// is renormalized away.
    pub fn to_dat_policy(&self) -> Policy {
        let n = self.policy.n_bins();
        let m = self.policy.masses();
        let g = self.weighting.values();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let rev = n - 1 - i;
            out.push(g[i] * m[i] + (1.0 - g[rev]) * m[rev]);
        }
        let sum: f64 = out.iter().sum();
        assert!(
            (sum - 1.0).abs() <= 1e-9,
            "untied-to-dat output sums to {sum}, expected 1"
        );
        renormalize(&mut out, "to_dat_policy");
        Policy {
            kind: PolicyKind::Grid,
            masses: out,
        }
    }
}

fn parse_grid_file(text: &str, what: &'static str) -> Result<Vec<f64>, PolicyError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(PolicyError::Parse {
        what,
        line: 1,
        detail: "empty input".into(),
    })?;
    let expect_prefix = format!("{what} n_bins=");
    let n_bins: usize = header
        .strip_prefix(&expect_prefix)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| PolicyError::Parse {
            what,
            line: 1,
            detail: format!("expected header `{what} n_bins=<N>`, got `{header}`"),
        })?;
    let mut values = Vec::with_capacity(n_bins);
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| PolicyError::Parse {
            what,
            line: idx + 1,
            detail: format!("bad value `{line}`: {e}"),
        })?;
        values.push(v);
    }
    if values.len() != n_bins {
        return Err(PolicyError::Parse {
            what,
            line: values.len() + 1,
            detail: format!("header says {n_bins} bins, found {}", values.len()),
        });
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_uniform_is_flat() {
        let p = Policy::beta(1.0, 1.0, 4).unwrap();
        for &m in p.masses() {
            assert!((m - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_symmetric_splits_at_half() {
        let p = Policy::beta(2.0, 2.0, 2).unwrap();
        assert!((p.masses()[0] - 0.5).abs() < 1e-12);
        assert!((p.masses()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn beta_rejects_bad_shapes() {
        assert!(Policy::beta(0.0, 1.0, 4).is_err());
        assert!(Policy::beta(1.0, -2.0, 4).is_err());
        assert!(Policy::beta(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn grid_must_be_even_and_big_enough() {
        assert!(Policy::beta(1.0, 1.0, 3).is_err());
        assert!(Policy::beta(1.0, 1.0, 0).is_err());
        assert!(Policy::uniform(7).is_err());
    }

    #[test]
    fn mix_to_dat_of_uniform_is_linear_density() {
        // p(λ) + p(1−λ) = 2, so the image has density 2λ = Beta(2,1)
        let p = Policy::uniform(DEFAULT_BINS).unwrap();
        let d = p.mix_to_dat();
        let expected = Policy::beta(2.0, 1.0, DEFAULT_BINS).unwrap();
        assert!(
            d.l1_distance(&expected) < 1e-9,
            "{}",
            d.l1_distance(&expected)
        );
    }

    #[test]
    fn mix_to_dat_keeps_point_mass_at_one() {
        // the box density on the last bin maps to λ·(box + reflected box):
        // mass 1 − h/2 stays in the last bin, h/2 lands in the mirror bin,
        // and the leak vanishes as the grid refines
        let n = 16;
        let h = 1.0 / n as f64;
        let p = Policy::point_mass(1.0, n).unwrap();
        let d = p.mix_to_dat();
        assert!((d.masses()[n - 1] - (1.0 - h / 2.0)).abs() < 1e-12);
        assert!((d.masses()[0] - h / 2.0).abs() < 1e-12);
        let fine = Policy::point_mass(1.0, 8192).unwrap().mix_to_dat();
        assert!(fine.masses()[8191] > 1.0 - 1e-4);
    }

    #[test]
    fn point_mass_bin_placement() {
        let p = Policy::point_mass(0.5, 8).unwrap();
        assert!((p.masses()[4] - 1.0).abs() < 1e-12); // 0.5 is a bin boundary; lands right
        let q = Policy::point_mass(0.0, 8).unwrap();
        assert!((q.masses()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn untied_of_uniform_is_uniform_with_half_weighting() {
        let p = Policy::uniform(64).unwrap();
        let scheme = p.dat_to_untied();
        assert!(scheme.policy.l1_distance(&p) < 1e-12);
        for &g in scheme.weighting.values() {
            assert!((g - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn untied_of_linear_density_gives_identity_weighting() {
        // p = Beta(2,1) has density 2λ: policy ½(2λ + 2(1−λ)) = uniform,
        // weighting 2λ/(2λ+2(1−λ)) = λ
        let p = Policy::beta(2.0, 1.0, DEFAULT_BINS).unwrap();
        let scheme = p.dat_to_untied();
        let uniform = Policy::uniform(DEFAULT_BINS).unwrap();
        assert!(scheme.policy.l1_distance(&uniform) < 1e-9);
        // bin masses of the 2λ density are h²(2i+1), so the ratio is
        // exactly the bin midpoint
        for (i, &g) in scheme.weighting.values().iter().enumerate() {
            let mid = bin_midpoint(i, DEFAULT_BINS);
            assert!((g - mid).abs() < 1e-9, "bin {i}: {g} vs {mid}");
        }
    }

    #[test]
    fn untied_policy_is_exactly_symmetric() {
        let p = Policy::beta(2.2, 0.9, 256).unwrap();
        let scheme = p.dat_to_untied();
        assert!(scheme.policy.is_symmetric());
    }

    #[test]
    fn untied_weighting_pairs_sum_to_one() {
        let p = Policy::beta(1.4, 0.7, 256).unwrap();
        let scheme = p.dat_to_untied();
        let g = scheme.weighting.values();
        let n = g.len();
        for i in 0..n {
            assert!((g[i] + g[n - 1 - i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn untied_to_dat_with_identity_matches_mix_to_dat() {
        let p = Policy::beta(0.9, 0.9, 512).unwrap();
        let id = WeightingFunction::identity(512).unwrap();
        let via_untied = UntiedScheme::new(p.clone(), id).unwrap().to_dat_policy();
        let direct = p.mix_to_dat();
        assert!(via_untied.l1_distance(&direct) < 1e-12);
    }

    #[test]
    fn round_trip_untied_then_dat_recovers_policy() {
        let p = Policy::beta(2.2, 0.9, 512).unwrap();
        let back = p.dat_to_untied().to_dat_policy();
        assert!(back.l1_distance(&p) < 1e-12);
    }

    #[test]
    fn full_weight_on_uniform_is_uniform() {
        // g ≡ 1: p'(λ) = 1·p(λ) + 0·p(1−λ) = p(λ)
        let p = Policy::uniform(32).unwrap();
        let g = WeightingFunction::constant(1.0, 32).unwrap();
        let out = UntiedScheme::new(p.clone(), g).unwrap().to_dat_policy();
        assert!(out.l1_distance(&p) < 1e-12);
    }

    #[test]
    fn sample_point_mass_stays_in_bin() {
        let n = 64;
        let p = Policy::point_mass(0.5, n).unwrap();
        for lam in p.sample(1000, 7) {
            assert!((0.5..0.5 + 1.0 / n as f64).contains(&lam), "{lam}");
        }
    }

    #[test]
    fn sample_uniform_mean() {
        let p = Policy::uniform(DEFAULT_BINS).unwrap();
        let xs = p.sample(100_000, 11);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    #[test]
    fn sample_beta21_mean() {
        let p = Policy::beta(2.0, 1.0, DEFAULT_BINS).unwrap();
        let xs = p.sample(100_000, 13);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.004, "{mean}");
    }

    #[test]
    fn sample_empty_and_deterministic() {
        let p = Policy::beta(0.9, 0.9, 64).unwrap();
        assert!(p.sample(0, 3).is_empty());
        assert_eq!(p.sample(32, 5), p.sample(32, 5));
    }

    #[test]
    fn text_round_trip() {
        let p = Policy::beta(2.2, 0.9, 128).unwrap();
        let q = Policy::from_text(&p.to_text()).unwrap();
        assert!(p.l1_distance(&q) < 128.0 * 5e-13);

        let g = WeightingFunction::identity(128).unwrap();
        let h = WeightingFunction::from_text(&g.to_text()).unwrap();
        for (a, b) in g.values().iter().zip(h.values()) {
            assert!((a - b).abs() <= 5e-13);
        }
    }

    #[test]
    fn text_rejects_garbage() {
        assert!(Policy::from_text("nonsense\n0.5\n0.5\n").is_err());
        assert!(Policy::from_text("policy n_bins=4\n0.5\n0.5\n").is_err());
        assert!(WeightingFunction::from_text("gamma n_bins=2\n0.5\nx\n").is_err());
    }

    #[test]
    fn from_masses_validates() {
        assert!(Policy::from_masses(vec![0.5, 0.6]).is_err());
        assert!(Policy::from_masses(vec![-0.1, 1.1]).is_err());
        assert!(Policy::from_masses(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn gamma_lookup_is_per_bin() {
        let g = WeightingFunction::from_values(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(g.lookup(0.0), 0.1);
        assert_eq!(g.lookup(0.26), 0.2);
        assert_eq!(g.lookup(1.0), 0.4);
    }
}
