//! Executable checks of the scheme-equivalence identities and the
//! concentration behaviour of sampled batch losses.
//!
//! Each equivalence check computes two expected losses by exact grid
//! quadrature, one for each scheme, and reports the absolute gap
//! against a tolerance. On symmetric pair sequences the identities hold
//! exactly (up to float accumulation); on asymmetric sequences they fail
//! generically, which the negative control exploits.

use crate::losses::{LossKind, TargetEmbedding};
use crate::model::{Arch, Head, Model};
use crate::policy::{Policy, UntiedScheme, WeightingFunction};
use crate::schemes::{
    batch_dat_loss, batch_mix_loss, batch_untied_loss, dat_loss, expected_loss, Dataset,
    LabeledExample, PairSequence, SchemeError, SchemeTag,
};
use crate::seeding::{stream_rng, stream_seed};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("pair sequence must be symmetric for this check")]
    NotSymmetric,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// Outcome of one expected-loss equality check.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub label: String,
    pub expected_loss_a: f64,
    pub expected_loss_b: f64,
    pub abs_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl EquivalenceReport {
    fn new(label: String, a: f64, b: f64, tolerance: f64) -> Self {
        let abs_gap = (a - b).abs();
        EquivalenceReport {
            label,
            expected_loss_a: a,
            expected_loss_b: b,
            abs_gap,
            tolerance,
            passed: abs_gap < tolerance,
        }
    }
}

/// Gap between the expected MixUp loss under `p_mix` and the expected DAT
/// loss under the image of `p_mix`. No symmetry precondition; used
/// directly by the negative control.
pub fn mix_dat_gap(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    p_mix: &Policy,
    tolerance: f64,
) -> Result<EquivalenceReport, VerifyError> {
    let p_dat = p_mix.mix_to_dat();
    let a = expected_loss(
        model,
        emb,
        kind,
        SchemeTag::Mix,
        dataset,
        pairs,
        p_mix,
        None,
    )?;
    let b = expected_loss(
        model,
        emb,
        kind,
        SchemeTag::Dat,
        dataset,
        pairs,
        &p_dat,
        None,
    )?;
    Ok(EquivalenceReport::new(
        format!("mix[{p_mix}] = dat[image]"),
        a,
        b,
        tolerance,
    ))
}

/// Expected-loss equality of MixUp under `p_mix` and DAT under the mapped
/// policy, on a symmetric pair sequence.
pub fn check_mix_dat(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    p_mix: &Policy,
    tolerance: f64,
) -> Result<EquivalenceReport, VerifyError> {
    if !pairs.is_symmetric() {
        return Err(VerifyError::NotSymmetric);
    }
    mix_dat_gap(model, emb, kind, dataset, pairs, p_mix, tolerance)
}

/// Expected-loss equality of DAT under `p_dat` and the Untied MixUp
/// scheme it maps to, on a symmetric pair sequence.
pub fn check_dat_untied(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    p_dat: &Policy,
    tolerance: f64,
) -> Result<EquivalenceReport, VerifyError> {
    if !pairs.is_symmetric() {
        return Err(VerifyError::NotSymmetric);
    }
    let scheme = p_dat.dat_to_untied();
    let a = expected_loss(
        model,
        emb,
        kind,
        SchemeTag::Untied,
        dataset,
        pairs,
        &scheme.policy,
        Some(&scheme.weighting),
    )?;
    let b = expected_loss(
        model,
        emb,
        kind,
        SchemeTag::Dat,
        dataset,
        pairs,
        p_dat,
        None,
    )?;
    Ok(EquivalenceReport::new(
        format!("umix[image of {p_dat}] = dat[{p_dat}]"),
        a,
        b,
        tolerance,
    ))
}

/// Expected-loss gap between an Untied MixUp scheme and DAT under an
/// explicitly supplied policy. Taking the policy as an argument keeps the
/// check honest: a deliberately corrupted policy must fail it.
#[allow(clippy::too_many_arguments)]
pub fn untied_dat_gap_with_policy(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    scheme: &UntiedScheme,
    p_dat: &Policy,
    tolerance: f64,
) -> Result<EquivalenceReport, VerifyError> {
    let a = expected_loss(
        model,
        emb,
        kind,
        SchemeTag::Untied,
        dataset,
        pairs,
        &scheme.policy,
        Some(&scheme.weighting),
    )?;
    let b = expected_loss(
        model,
        emb,
        kind,
        SchemeTag::Dat,
        dataset,
        pairs,
        p_dat,
        None,
    )?;
    Ok(EquivalenceReport::new(
        format!("umix[{}] = dat[{p_dat}]", scheme.policy),
        a,
        b,
        tolerance,
    ))
}

/// Expected-loss equality of an Untied MixUp scheme and DAT under its
/// mapped policy, on a symmetric pair sequence.
pub fn check_untied_dat(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    scheme: &UntiedScheme,
    tolerance: f64,
) -> Result<EquivalenceReport, VerifyError> {
    if !pairs.is_symmetric() {
        return Err(VerifyError::NotSymmetric);
    }
    let p_dat = scheme.to_dat_policy();
    untied_dat_gap_with_policy(model, emb, kind, dataset, pairs, scheme, &p_dat, tolerance)
}

/// Outcome of a sampling check: per-K tail probabilities against the
/// exponential bound, RMS deviations, and median gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub label: String,
    pub k_values: Vec<usize>,
    pub replicates: usize,
    /// Deviation threshold for the tail probability (δ̂/4 here).
    pub epsilon: f64,
    /// Max per-pair loss range over a dense λ sweep.
    pub delta_hat: f64,
    pub empirical_tail_prob: Vec<f64>,
    pub bound: Vec<f64>,
    pub rms_deviation: Vec<f64>,
    pub median_gap: Vec<f64>,
    pub passed: bool,
}

const STREAM_VERIFY_PAIRS: u64 = 0x20;
const STREAM_VERIFY_LAMBDA: u64 = 0x21;
const STREAM_VERIFY_DAT: u64 = 0x22;

fn uniform_pairs(n: usize, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> PairSequence {
    let pairs: Vec<(usize, usize)> = (0..k)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
        .collect();
    PairSequence::from_pairs(pairs)
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Max over ordered dataset pairs of the per-pair loss range over all
/// grid midpoints.
fn loss_range_bound(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    tag: SchemeTag,
    policy: &Policy,
    weighting: Option<&WeightingFunction>,
) -> Result<f64, VerifyError> {
    let n = dataset.len();
    let n_bins = policy.n_bins();
    let mut delta = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let x = dataset.get(a);
            let x_prime = dataset.get(b);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..n_bins {
                let lam = policy.midpoint(i);
                let v = scheme_pair_loss(model, emb, kind, tag, x, x_prime, lam, weighting, i)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            delta = delta.max(hi - lo);
        }
    }
    Ok(delta)
}

#[allow(clippy::too_many_arguments)]
fn scheme_pair_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    tag: SchemeTag,
    x: &LabeledExample,
    x_prime: &LabeledExample,
    lam: f64,
    weighting: Option<&WeightingFunction>,
    bin: usize,
) -> Result<f64, VerifyError> {
    Ok(match tag {
        SchemeTag::Mix => crate::schemes::mix_loss(model, emb, kind, x, x_prime, lam)?,
        SchemeTag::Dat => dat_loss(model, emb, kind, x, x_prime, lam)?,
        SchemeTag::Untied => {
            let gamma = weighting.expect("weighting checked by caller").values()[bin];
            crate::schemes::untied_loss(model, emb, kind, x, x_prime, lam, gamma)?
        }
    })
}

/// For each K: fixes a pair sequence, draws `replicates` independent
/// λ-sequences from the policy, and compares the sampled batch loss
/// against the quadrature expectation. Tail probabilities at ε = δ̂/4 are
/// reported against the bound `2 exp(−2ε²K/δ̂²)`; passing allows 3σ of
/// binomial noise on top of the bound.
#[allow(clippy::too_many_arguments)]
pub fn check_sampling_concentration(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    tag: SchemeTag,
    policy: &Policy,
    weighting: Option<&WeightingFunction>,
    k_values: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<ConcentrationReport, VerifyError> {
    if tag == SchemeTag::Untied && weighting.is_none() {
        return Err(VerifyError::Scheme(SchemeError::MissingWeighting));
    }
    let delta_hat = loss_range_bound(model, emb, kind, dataset, tag, policy, weighting)?;
    let epsilon = delta_hat / 4.0;
    let mut tails = Vec::with_capacity(k_values.len());
    let mut bounds = Vec::with_capacity(k_values.len());
    let mut rms_all = Vec::with_capacity(k_values.len());
    let mut medians = Vec::with_capacity(k_values.len());
    let mut passed = true;

    for (k_idx, &k) in k_values.iter().enumerate() {
        let mut pair_rng = stream_rng(seed, STREAM_VERIFY_PAIRS, k_idx as u64);
        let pairs = uniform_pairs(dataset.len(), k, &mut pair_rng);
        let quad_weighting = if tag == SchemeTag::Untied {
            weighting
        } else {
            None
        };
        let expected = expected_loss(
            model,
            emb,
            kind,
            tag,
            dataset,
            &pairs,
            policy,
            quad_weighting,
        )?;
        let mut exceed = 0usize;
        let mut sq_sum = 0.0;
        let mut devs = Vec::with_capacity(replicates);
        for rep in 0..replicates {
            let lam_seed = stream_seed(
                seed,
                STREAM_VERIFY_LAMBDA,
                ((k_idx as u64) << 32) | rep as u64,
            );
            let lambdas = policy.sample(k, lam_seed);
            let sampled = match tag {
                SchemeTag::Mix => batch_mix_loss(model, emb, kind, dataset, &pairs, &lambdas)?,
                SchemeTag::Dat => batch_dat_loss(model, emb, kind, dataset, &pairs, &lambdas)?,
                SchemeTag::Untied => batch_untied_loss(
                    model,
                    emb,
                    kind,
                    dataset,
                    &pairs,
                    &lambdas,
                    weighting.unwrap(),
                )?,
            };
            let dev = (sampled - expected).abs();
            if dev >= epsilon {
                exceed += 1;
            }
            sq_sum += dev * dev;
            devs.push(dev);
        }
        let tail = exceed as f64 / replicates as f64;
        // degenerate range: every λ gives the same loss, any bound holds
        let bound = if delta_hat > 0.0 {
            2.0 * (-2.0 * epsilon * epsilon * k as f64 / (delta_hat * delta_hat)).exp()
        } else {
            2.0
        };
        let slack = 3.0 * (bound.min(1.0) * (1.0 - bound.min(1.0)) / replicates as f64).sqrt();
        if tail > bound + slack {
            passed = false;
        }
        tails.push(tail);
        bounds.push(bound);
        rms_all.push((sq_sum / replicates as f64).sqrt());
        medians.push(median(&mut devs));
    }

    Ok(ConcentrationReport {
        label: format!("{tag} sampling vs quadrature [{policy}]"),
        k_values: k_values.to_vec(),
        replicates,
        epsilon,
        delta_hat,
        empirical_tail_prob: tails,
        bound: bounds,
        rms_deviation: rms_all,
        median_gap: medians,
        passed,
    })
}

/// For each K: draws fresh i.i.d. pairs (not symmetrized), independent
/// λ-draws for MixUp under `p_mix` and for DAT under the mapped policy,
/// and reports the distribution of |sampled mix loss − sampled dat loss|.
/// Passes when the median gap at the largest K is strictly below the
/// median at the smallest K.
#[allow(clippy::too_many_arguments)]
pub fn check_mix_dat_sampled_gap(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    p_mix: &Policy,
    k_values: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<ConcentrationReport, VerifyError> {
    let p_dat = p_mix.mix_to_dat();
    let mut medians = Vec::with_capacity(k_values.len());
    let mut rms_all = Vec::with_capacity(k_values.len());
    for (k_idx, &k) in k_values.iter().enumerate() {
        let mut gaps = Vec::with_capacity(replicates);
        let mut sq_sum = 0.0;
        for rep in 0..replicates {
            let tag = ((k_idx as u64) << 32) | rep as u64;
            let mut pair_rng = stream_rng(seed, STREAM_VERIFY_PAIRS, tag);
            let pairs = uniform_pairs(dataset.len(), k, &mut pair_rng);
            let lam = p_mix.sample(k, stream_seed(seed, STREAM_VERIFY_LAMBDA, tag));
            let ups = p_dat.sample(k, stream_seed(seed, STREAM_VERIFY_DAT, tag));
            let mix = batch_mix_loss(model, emb, kind, dataset, &pairs, &lam)?;
            let dat = batch_dat_loss(model, emb, kind, dataset, &pairs, &ups)?;
            let gap = (mix - dat).abs();
            sq_sum += gap * gap;
            gaps.push(gap);
        }
        medians.push(median(&mut gaps));
        rms_all.push((sq_sum / replicates as f64).sqrt());
    }
    let passed = medians.last().unwrap_or(&0.0) < medians.first().unwrap_or(&0.0);
    Ok(ConcentrationReport {
        label: format!("sampled mix vs dat gap [{p_mix}]"),
        k_values: k_values.to_vec(),
        replicates,
        epsilon: 0.0,
        delta_hat: 0.0,
        empirical_tail_prob: Vec::new(),
        bound: Vec::new(),
        rms_deviation: rms_all,
        median_gap: medians,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Suites: the fixed cross products run by the CLI and the acceptance tests.
// ---------------------------------------------------------------------------

const SUITE_DIM: usize = 3;
const SUITE_LABELS: usize = 4;
const SUITE_EXAMPLES: usize = 12;
const SUITE_EMBED_DIM: usize = 16;
pub const SUITE_TOLERANCE: f64 = 1e-6;

/// Small random dataset: Gaussian features, uniform labels.
pub fn suite_dataset(seed: u64) -> Dataset {
    let mut rng = stream_rng(seed, 0x30, 0);
    let examples = (0..SUITE_EXAMPLES)
        .map(|i| {
            let features = (0..SUITE_DIM)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            LabeledExample {
                features,
                label: i % SUITE_LABELS,
            }
        })
        .collect();
    Dataset::new(examples, SUITE_LABELS).expect("suite dataset is well formed")
}

fn suite_models(kind: LossKind, seed: u64) -> Vec<(&'static str, Model)> {
    let head = Head::for_loss(kind);
    let out_dim = match kind {
        LossKind::CrossEntropy => SUITE_LABELS,
        LossKind::NegativeCosine => SUITE_EMBED_DIM,
    };
    vec![
        ("zero", Model::zeros(Arch::Linear, head, SUITE_DIM, out_dim)),
        (
            "linear",
            Model::random(
                Arch::Linear,
                head,
                SUITE_DIM,
                out_dim,
                stream_seed(seed, 0x31, 0),
            ),
        ),
        (
            "mlp",
            Model::random(
                Arch::MlpOneHidden { width: 16 },
                head,
                SUITE_DIM,
                out_dim,
                stream_seed(seed, 0x32, 0),
            ),
        ),
    ]
}

fn suite_policies(n_bins: usize, seed: u64) -> Vec<(String, Policy)> {
    let mut rng = stream_rng(seed, 0x33, 0);
    let weights: Vec<f64> = (0..n_bins).map(|_| rng.gen::<f64>()).collect();
    vec![
        ("uniform".to_string(), Policy::uniform(n_bins).unwrap()),
        (
            "B(0.9,0.9)".to_string(),
            Policy::beta(0.9, 0.9, n_bins).unwrap(),
        ),
        (
            "B(2.2,0.9)".to_string(),
            Policy::beta(2.2, 0.9, n_bins).unwrap(),
        ),
        (
            "B(1.4,0.7)".to_string(),
            Policy::beta(1.4, 0.7, n_bins).unwrap(),
        ),
        (
            "random-grid".to_string(),
            Policy::from_weights(weights).unwrap(),
        ),
    ]
}

fn suite_embedding(kind: LossKind, seed: u64) -> TargetEmbedding {
    match kind {
        LossKind::CrossEntropy => TargetEmbedding::one_hot(SUITE_LABELS).unwrap(),
        LossKind::NegativeCosine => {
            TargetEmbedding::random_unit(SUITE_LABELS, SUITE_EMBED_DIM, stream_seed(seed, 0x34, 0))
                .unwrap()
        }
    }
}

fn symmetric_pairs(k: usize, n: usize, seed: u64) -> PairSequence {
    let mut rng = stream_rng(seed, 0x35, k as u64);
    let half: Vec<(usize, usize)> = (0..k / 2)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
        .collect();
    PairSequence::from_pairs(half).symmetrize()
}

fn random_weighting(n_bins: usize, seed: u64) -> WeightingFunction {
    let mut rng = stream_rng(seed, 0x36, 0);
    let values = (0..n_bins).map(|_| rng.gen::<f64>()).collect();
    WeightingFunction::from_values(values).unwrap()
}

/// Every equivalence check over the full cross product of losses, models,
/// policies, and pair counts K ∈ {2, 8, 16}, on symmetric sequences.
pub fn equivalence_suite(seed: u64, n_bins: usize, tolerance: f64) -> Vec<EquivalenceReport> {
    let dataset = suite_dataset(seed);
    let policies = suite_policies(n_bins, seed);
    let gamma = random_weighting(n_bins, seed);
    let mut reports = Vec::new();
    for kind in [LossKind::CrossEntropy, LossKind::NegativeCosine] {
        let emb = suite_embedding(kind, seed);
        for (model_name, model) in suite_models(kind, seed) {
            for (policy_name, policy) in &policies {
                for k in [2usize, 8, 16] {
                    let pairs = symmetric_pairs(k, dataset.len(), seed);
                    let tag = format!("{kind} {model_name} {policy_name} K={k}");
                    let mut push = |mut r: EquivalenceReport, which: &str| {
                        r.label = format!("{which} | {tag}");
                        reports.push(r);
                    };
                    push(
                        check_mix_dat(&model, &emb, kind, &dataset, &pairs, policy, tolerance)
                            .expect("symmetric pairs"),
                        "mix=dat",
                    );
                    push(
                        check_dat_untied(&model, &emb, kind, &dataset, &pairs, policy, tolerance)
                            .expect("symmetric pairs"),
                        "dat=umix",
                    );
                    let scheme = UntiedScheme::new(policy.clone(), gamma.clone()).unwrap();
                    push(
                        check_untied_dat(&model, &emb, kind, &dataset, &pairs, &scheme, tolerance)
                            .expect("symmetric pairs"),
                        "umix=dat",
                    );
                }
            }
        }
    }
    reports
}

/// The negative control: a deliberately asymmetric single-pair sequence
/// on which the mix/dat identity must fail for a generic model.
pub fn asymmetric_control(seed: u64, n_bins: usize) -> EquivalenceReport {
    let dataset = suite_dataset(seed);
    // labels 0 and 1 differ, so swapping roles changes the kept target
    let pairs = PairSequence::from_pairs(vec![(0, 1)]);
    let emb = suite_embedding(LossKind::CrossEntropy, seed);
    let model = Model::random(
        Arch::MlpOneHidden { width: 16 },
        Head::Simplex,
        SUITE_DIM,
        SUITE_LABELS,
        stream_seed(seed, 0x37, 0),
    );
    let policy = Policy::beta(0.9, 0.9, n_bins).unwrap();
    let mut report = mix_dat_gap(
        &model,
        &emb,
        LossKind::CrossEntropy,
        &dataset,
        &pairs,
        &policy,
        SUITE_TOLERANCE,
    )
    .expect("no precondition");
    report.label = format!("negative control (asymmetric pairs) | {}", report.label);
    report
}

/// Concentration checks for all three schemes at K ∈ {25, 100, 400} with
/// 2000 replicates, plus the sampled mix/dat gap over a K sweep.
pub fn concentration_suite(seed: u64, n_bins: usize) -> Vec<ConcentrationReport> {
    let dataset = suite_dataset(seed);
    let emb = suite_embedding(LossKind::CrossEntropy, seed);
    let model = Model::random(
        Arch::MlpOneHidden { width: 16 },
        Head::Simplex,
        SUITE_DIM,
        SUITE_LABELS,
        stream_seed(seed, 0x38, 0),
    );
    let k_values = [25usize, 100, 400];
    let replicates = 2000;
    let mut reports = Vec::new();

    let mix_policy = Policy::beta(0.9, 0.9, n_bins).unwrap();
    reports.push(
        check_sampling_concentration(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            SchemeTag::Mix,
            &mix_policy,
            None,
            &k_values,
            replicates,
            seed,
        )
        .expect("valid configuration"),
    );
    let dat_policy = mix_policy.mix_to_dat();
    reports.push(
        check_sampling_concentration(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            SchemeTag::Dat,
            &dat_policy,
            None,
            &k_values,
            replicates,
            seed + 1,
        )
        .expect("valid configuration"),
    );
    let scheme = Policy::beta(2.2, 0.9, n_bins).unwrap().dat_to_untied();
    reports.push(
        check_sampling_concentration(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            SchemeTag::Untied,
            &scheme.policy,
            Some(&scheme.weighting),
            &k_values,
            replicates,
            seed + 2,
        )
        .expect("valid configuration"),
    );

    // sampled-loss gap between the two schemes over a growing K grid
    reports.push(
        check_mix_dat_sampled_gap(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &mix_policy,
            &[100, 1000, 10_000],
            200,
            seed + 3,
        )
        .expect("valid configuration"),
    );
    reports
}

/// 1/√K shrinkage of the RMS deviation between two entries of a report:
/// RMS at `k_hi` must be at most `factor` times RMS at `k_lo`.
pub fn rms_ratio_ok(report: &ConcentrationReport, k_lo: usize, k_hi: usize, factor: f64) -> bool {
    let idx = |k: usize| report.k_values.iter().position(|&x| x == k);
    match (idx(k_lo), idx(k_hi)) {
        (Some(lo), Some(hi)) => {
            let rms_lo = report.rms_deviation[lo];
            let rms_hi = report.rms_deviation[hi];
            rms_lo == 0.0 && rms_hi == 0.0 || rms_hi <= factor * rms_lo
        }
        _ => false,
    }
}

/// CSV rows for equivalence reports: `check,loss_a,loss_b,abs_gap,tolerance,passed`.
pub fn equivalence_csv(reports: &[EquivalenceReport]) -> String {
    let mut s = String::from("check,loss_a,loss_b,abs_gap,tolerance,passed\n");
    for r in reports {
        s.push_str(&format!(
            "\"{}\",{:.12},{:.12},{:.3e},{:.1e},{}\n",
            r.label, r.expected_loss_a, r.expected_loss_b, r.abs_gap, r.tolerance, r.passed
        ));
    }
    s
}

/// CSV rows for concentration reports, one row per K.
pub fn concentration_csv(reports: &[ConcentrationReport]) -> String {
    let mut s = String::from(
        "check,k,replicates,epsilon,delta_hat,tail_prob,bound,rms_deviation,median_gap,passed\n",
    );
    for r in reports {
        for (i, &k) in r.k_values.iter().enumerate() {
            let tail = r.empirical_tail_prob.get(i).copied();
            let bound = r.bound.get(i).copied();
            s.push_str(&format!(
                "\"{}\",{k},{},{:.6e},{:.6e},{},{},{:.6e},{:.6e},{}\n",
                r.label,
                r.replicates,
                r.epsilon,
                r.delta_hat,
                tail.map_or(String::from(""), |v| format!("{v:.6}")),
                bound.map_or(String::from(""), |v| format!("{v:.6e}")),
                r.rms_deviation[i],
                r.median_gap[i],
                r.passed
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Dataset, TargetEmbedding, Model) {
        let dataset = suite_dataset(3);
        let emb = suite_embedding(LossKind::CrossEntropy, 3);
        let model = Model::random(
            Arch::MlpOneHidden { width: 8 },
            Head::Simplex,
            SUITE_DIM,
            SUITE_LABELS,
            99,
        );
        (dataset, emb, model)
    }

    #[test]
    fn mix_dat_equality_on_symmetric_pairs() {
        let (dataset, emb, model) = setup();
        let pairs = symmetric_pairs(8, dataset.len(), 1);
        let policy = Policy::beta(0.9, 0.9, 256).unwrap();
        let report = check_mix_dat(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &policy,
            1e-6,
        )
        .unwrap();
        assert!(report.passed, "gap {}", report.abs_gap);
        assert!(report.abs_gap < 1e-10);
    }

    #[test]
    fn point_mass_policy_equality_is_tight() {
        let (dataset, emb, model) = setup();
        let pairs = symmetric_pairs(4, dataset.len(), 2);
        let policy = Policy::point_mass(0.5, 256).unwrap();
        let report = check_mix_dat(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &policy,
            1e-12,
        )
        .unwrap();
        assert!(report.passed, "gap {}", report.abs_gap);
    }

    #[test]
    fn asymmetric_pairs_are_rejected_and_fail_the_open_check() {
        let (dataset, emb, model) = setup();
        let pairs = PairSequence::from_pairs(vec![(0, 1)]);
        let policy = Policy::beta(0.9, 0.9, 128).unwrap();
        assert!(matches!(
            check_mix_dat(
                &model,
                &emb,
                LossKind::CrossEntropy,
                &dataset,
                &pairs,
                &policy,
                1e-6
            ),
            Err(VerifyError::NotSymmetric)
        ));
        let report = asymmetric_control(3, 128);
        assert!(!report.passed);
        assert!(report.abs_gap > 1e-3, "gap {}", report.abs_gap);
    }

    #[test]
    fn dat_untied_equality_with_half_support_policy() {
        // policy supported only on [0.5, 1]: the weighting is pinned to
        // 0.5 on the dead half, which the quadrature never visits
        let (dataset, emb, model) = setup();
        let pairs = symmetric_pairs(8, dataset.len(), 4);
        let n_bins = 128;
        let mut weights = vec![0.0; n_bins];
        for w in weights.iter_mut().skip(n_bins / 2) {
            *w = 1.0;
        }
        let policy = Policy::from_weights(weights).unwrap();
        let report = check_dat_untied(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &policy,
            1e-6,
        )
        .unwrap();
        assert!(report.passed, "gap {}", report.abs_gap);
    }

    #[test]
    fn dat_point_mass_at_one_is_plain_loss() {
        let (dataset, emb, model) = setup();
        let pairs = symmetric_pairs(6, dataset.len(), 5);
        let policy = Policy::point_mass(1.0, 64).unwrap();
        let report = check_dat_untied(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &policy,
            1e-9,
        )
        .unwrap();
        assert!(report.passed);
        // the dat side at the last midpoint is within one bin of the plain loss
        let mut plain = 0.0;
        for &(a, b) in pairs.pairs() {
            let lam = policy.midpoint(policy.n_bins() - 1);
            plain += dat_loss(
                &model,
                &emb,
                LossKind::CrossEntropy,
                dataset.get(a),
                dataset.get(b),
                lam,
            )
            .unwrap();
        }
        plain /= pairs.len() as f64;
        assert!((report.expected_loss_b - plain).abs() < 1e-12);
    }

    #[test]
    fn identity_weighting_reduces_untied_check_to_mix_check() {
        let (dataset, emb, model) = setup();
        let pairs = symmetric_pairs(8, dataset.len(), 9);
        let n_bins = 256;
        let policy = Policy::beta(0.9, 0.9, n_bins).unwrap();
        let id = WeightingFunction::identity(n_bins).unwrap();
        let scheme = UntiedScheme::new(policy.clone(), id).unwrap();
        let via_untied = check_untied_dat(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &scheme,
            1e-6,
        )
        .unwrap();
        let via_mix = check_mix_dat(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &policy,
            1e-6,
        )
        .unwrap();
        assert!(via_untied.passed && via_mix.passed);
        assert!((via_untied.abs_gap - via_mix.abs_gap).abs() < 1e-12);
        assert!((via_untied.expected_loss_a - via_mix.expected_loss_a).abs() < 1e-12);
    }

    #[test]
    fn untied_scheme_from_skewed_beta_passes() {
        let (dataset, emb, model) = setup();
        let pairs = symmetric_pairs(8, dataset.len(), 10);
        let scheme = Policy::beta(2.2, 0.9, 256).unwrap().dat_to_untied();
        let report = check_untied_dat(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &scheme,
            1e-6,
        )
        .unwrap();
        assert!(report.passed, "gap {}", report.abs_gap);
        // and the mapped policy is the original one back again
        let back = scheme.to_dat_policy();
        assert!(back.l1_distance(&Policy::beta(2.2, 0.9, 256).unwrap()) < 1e-9);
    }

    #[test]
    fn corrupted_policy_fails_the_untied_dat_check() {
        let (dataset, emb, model) = setup();
        let pairs = symmetric_pairs(8, dataset.len(), 6);
        let n_bins = 128;
        let policy = Policy::beta(1.4, 0.7, n_bins).unwrap();
        let gamma = random_weighting(n_bins, 7);
        let scheme = UntiedScheme::new(policy, gamma).unwrap();
        let good = scheme.to_dat_policy();
        // swap the weighting's role: use 1-γ in place of γ
        let flipped = WeightingFunction::from_values(
            scheme.weighting.values().iter().map(|g| 1.0 - g).collect(),
        )
        .unwrap();
        let bad = UntiedScheme::new(scheme.policy.clone(), flipped)
            .unwrap()
            .to_dat_policy();
        let ok = untied_dat_gap_with_policy(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &scheme,
            &good,
            1e-6,
        )
        .unwrap();
        assert!(ok.passed, "gap {}", ok.abs_gap);
        let broken = untied_dat_gap_with_policy(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &pairs,
            &scheme,
            &bad,
            1e-6,
        )
        .unwrap();
        assert!(
            !broken.passed,
            "mutated policy still passed, gap {}",
            broken.abs_gap
        );
    }

    #[test]
    fn concentration_degenerate_range_is_exact() {
        // constant-prediction model and label-homogeneous pairs: the loss
        // does not depend on λ, so sampled and expected coincide
        let examples = (0..6)
            .map(|i| LabeledExample {
                features: vec![i as f64, -(i as f64), 0.5],
                label: 0,
            })
            .collect();
        let dataset = Dataset::new(examples, 1).unwrap();
        let emb = TargetEmbedding::one_hot(1).unwrap();
        let model = Model::zeros(Arch::Linear, Head::Simplex, 3, 1);
        let policy = Policy::beta(0.9, 0.9, 64).unwrap();
        let report = check_sampling_concentration(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            SchemeTag::Mix,
            &policy,
            None,
            &[25, 50],
            200,
            11,
        )
        .unwrap();
        assert_eq!(report.delta_hat, 0.0);
        assert!(report.passed);
        for rms in &report.rms_deviation {
            assert_eq!(*rms, 0.0);
        }
    }

    #[test]
    fn concentration_holds_for_negative_cosine_too() {
        let dataset = suite_dataset(5);
        let emb = suite_embedding(LossKind::NegativeCosine, 5);
        let model = Model::random(
            Arch::MlpOneHidden { width: 8 },
            Head::UnitNorm,
            SUITE_DIM,
            SUITE_EMBED_DIM,
            31,
        );
        let policy = Policy::beta(0.9, 0.9, 128).unwrap();
        let report = check_sampling_concentration(
            &model,
            &emb,
            LossKind::NegativeCosine,
            &dataset,
            SchemeTag::Mix,
            &policy,
            None,
            &[25, 100],
            400,
            7,
        )
        .unwrap();
        assert!(report.passed);
        assert!(report.delta_hat > 0.0);
        assert!(report.rms_deviation[1] < report.rms_deviation[0]);
    }

    #[test]
    fn sampled_gap_reproducible() {
        let (dataset, emb, model) = setup();
        let policy = Policy::beta(0.9, 0.9, 64).unwrap();
        let a = check_mix_dat_sampled_gap(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &policy,
            &[50, 200],
            50,
            13,
        )
        .unwrap();
        let b = check_mix_dat_sampled_gap(
            &model,
            &emb,
            LossKind::CrossEntropy,
            &dataset,
            &policy,
            &[50, 200],
            50,
            13,
        )
        .unwrap();
        assert_eq!(a.median_gap, b.median_gap);
        assert!(a.median_gap[1] < a.median_gap[0]);
    }

    #[test]
    fn degenerate_model_and_labels_make_sampled_gap_vanish() {
        // constant predictions and one shared label: the per-pair loss
        // does not depend on λ or on pair order, so the sampled mix and
        // dat batch losses coincide exactly
        let examples = (0..6)
            .map(|i| LabeledExample {
                features: vec![i as f64, 0.0, 1.0],
                label: 0,
            })
            .collect();
        let dataset = Dataset::new(examples, 1).unwrap();
        let emb = TargetEmbedding::one_hot(1).unwrap();
        let model = Model::zeros(Arch::Linear, Head::Simplex, 3, 1);
        let policy = Policy::point_mass(0.5, 64).unwrap();
        let p_dat = policy.mix_to_dat();
        let pairs = symmetric_pairs(8, dataset.len(), 17);
        let lam = policy.sample(8, 19);
        let ups = p_dat.sample(8, 23);
        let mix =
            batch_mix_loss(&model, &emb, LossKind::CrossEntropy, &dataset, &pairs, &lam).unwrap();
        let dat =
            batch_dat_loss(&model, &emb, LossKind::CrossEntropy, &dataset, &pairs, &ups).unwrap();
        assert!((mix - dat).abs() < 1e-10, "{}", (mix - dat).abs());
    }
}
