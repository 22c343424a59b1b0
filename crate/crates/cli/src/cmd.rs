//! Command implementations. Everything here is a thin shell over the
//! library: identical inputs produce identical results through either
//! path, which the golden-file tests check.

use crate::config::SweepConfig;
use crate::spec::{parse_policy_spec, ParsedPolicy};
use anyhow::{bail, Context, Result};
use mixdat::losses::LossKind;
use mixdat::seeding::stream_seed;
use mixdat::trainer::{
    aggregate_runs, make_toy_dataset, table_row, train, GammaSpec, RunReport, SchemeSpec,
    TrainConfig,
};
use mixdat::verify::{
    asymmetric_control, concentration_csv, concentration_suite, equivalence_csv, equivalence_suite,
    rms_ratio_ok, EquivalenceReport, SUITE_TOLERANCE,
};
use rayon::prelude::*;
use std::fs;
use std::path::Path;

const STREAM_SWEEP_RUN: u64 = 0x50;

/// Write-then-rename so partially written files never land under the
/// final name.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory `{}`", parent.display()))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing `{}`", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming `{}` into place", path.display()))?;
    Ok(())
}

/// `transform --map D|U|Du --policy <spec>`: writes `policy.txt` (and
/// `gamma.txt` for U) under the output directory.
pub fn run_transform(
    map: &str,
    policy_spec: &str,
    gamma_file: Option<&str>,
    bins: usize,
    out: &Path,
) -> Result<()> {
    let parsed = parse_policy_spec(policy_spec, bins)?;
    match map {
        "D" => {
            let policy = parsed.into_plain("--map D")?;
            let image = policy.mix_to_dat();
            let path = out.join("policy.txt");
            write_atomic(&path, &image.to_text())?;
            println!("wrote {}", path.display());
        }
        "U" => {
            let policy = parsed.into_plain("--map U")?;
            let scheme = policy.dat_to_untied();
            let policy_path = out.join("policy.txt");
            let gamma_path = out.join("gamma.txt");
            write_atomic(&policy_path, &scheme.policy.to_text())?;
            write_atomic(&gamma_path, &scheme.weighting.to_text())?;
            println!("wrote {}", policy_path.display());
            println!("wrote {}", gamma_path.display());
        }
        "Du" => {
            // accept either a scheme-producing spec (`...|U`) or a plain
            // policy plus --gamma
            let scheme = match (parsed, gamma_file) {
                (ParsedPolicy::Untied(s), None) => s,
                (ParsedPolicy::Plain(p), Some(path)) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading gamma file `{path}`"))?;
                    let weighting = mixdat::WeightingFunction::from_text(&text)
                        .map_err(|e| anyhow::anyhow!("bad gamma file `{path}`: {e}"))?;
                    mixdat::UntiedScheme::new(p, weighting)?
                }
                (ParsedPolicy::Untied(_), Some(_)) => {
                    bail!("--map Du got both a `|U` spec and --gamma; use one")
                }
                (ParsedPolicy::Plain(_), None) => {
                    bail!(
                        "--map Du needs a weighting: pass --gamma <file> or a `...|U` policy spec"
                    )
                }
            };
            let image = scheme.to_dat_policy();
            let path = out.join("policy.txt");
            write_atomic(&path, &image.to_text())?;
            println!("wrote {}", path.display());
        }
        other => bail!("unknown --map `{other}` (use D, U, or Du)"),
    }
    Ok(())
}

/// `verify --suite theorems|concentration|all`: prints one line per
/// check, writes CSVs, and returns whether everything passed.
pub fn run_verify(suite: &str, seed: u64, bins: usize, out: &Path) -> Result<bool> {
    let mut all_ok = true;
    if suite != "theorems" && suite != "concentration" && suite != "all" {
        bail!("unknown --suite `{suite}` (use theorems, concentration, or all)");
    }

    if suite == "theorems" || suite == "all" {
        let mut reports = equivalence_suite(seed, bins, SUITE_TOLERANCE);
        // the control must fail the equality to demonstrate test power;
        // its row records that expectation
        let control = asymmetric_control(seed, bins);
        let control_ok = control.abs_gap > 1e-3;
        reports.push(EquivalenceReport {
            label: format!(
                "negative control, equality must break | gap {:.3e}",
                control.abs_gap
            ),
            passed: control_ok,
            ..control
        });
        let failed = reports.iter().filter(|r| !r.passed).count();
        for r in &reports {
            println!(
                "{} {:<60} gap {:.3e}",
                if r.passed { "PASS" } else { "FAIL" },
                r.label,
                r.abs_gap
            );
        }
        println!(
            "equivalence: {}/{} checks passed",
            reports.len() - failed,
            reports.len()
        );
        write_atomic(
            &out.join("equivalence_checks.csv"),
            &equivalence_csv(&reports),
        )?;
        all_ok &= failed == 0;
    }

    if suite == "concentration" || suite == "all" {
        let reports = concentration_suite(seed, 256);
        let mut ok = true;
        for r in &reports {
            let ratio_ok = if r.label.contains("sampling vs quadrature") {
                rms_ratio_ok(r, 100, 400, 0.6)
            } else {
                true
            };
            ok &= r.passed && ratio_ok;
            println!(
                "{} {:<48} delta {:.3e} medians {:?}",
                if r.passed && ratio_ok { "PASS" } else { "FAIL" },
                r.label,
                r.delta_hat,
                r.median_gap
                    .iter()
                    .map(|m| format!("{m:.2e}"))
                    .collect::<Vec<_>>()
            );
        }
        write_atomic(
            &out.join("concentration_checks.csv"),
            &concentration_csv(&reports),
        )?;
        all_ok &= ok;
    }

    Ok(all_ok)
}

/// Builds the library scheme from a config entry like `mix:beta:0.9,0.9`.
pub fn parse_scheme(entry: &str, bins: usize) -> Result<(String, String, SchemeSpec)> {
    if entry == "baseline" {
        return Ok(("baseline".into(), "-".into(), SchemeSpec::Baseline));
    }
    let (tag, spec) = entry.split_once(':').ok_or_else(|| {
        anyhow::anyhow!(
            "bad scheme `{entry}`: expected `baseline` or `<mix|dat|umix>:<policy-spec>`"
        )
    })?;
    let parsed = parse_policy_spec(spec, bins)?;
    let scheme = match tag {
        "mix" => SchemeSpec::Mix {
            policy: parsed.into_plain("mix scheme")?,
        },
        "dat" => SchemeSpec::Dat {
            policy: parsed.into_plain("dat scheme")?,
        },
        "umix" => {
            let scheme = parsed.into_untied("umix scheme")?;
            SchemeSpec::Untied {
                policy: scheme.policy,
                gamma: GammaSpec::Grid(scheme.weighting),
            }
        }
        other => bail!("bad scheme `{entry}`: unknown tag `{other}` (use mix, dat, or umix)"),
    };
    Ok((tag.to_string(), spec.to_string(), scheme))
}

fn build_train_config(config: &SweepConfig, scheme: SchemeSpec, seed: u64) -> Result<TrainConfig> {
    Ok(TrainConfig {
        scheme,
        loss: config.loss_kind()?,
        arch: config.arch_kind()?,
        epochs: config.epochs,
        batch_size: config.batch_size,
        learning_rate: config.learning_rate,
        weight_decay: config.weight_decay,
        seed,
        eval_window: config.eval_window,
        embedding_dim: config.embedding_dim,
    })
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn loss_suffix(kind: LossKind) -> &'static str {
    match kind {
        LossKind::CrossEntropy => "CE",
        LossKind::NegativeCosine => "NC",
    }
}

/// `train --config <file>`: one run of the single configured scheme.
pub fn run_train(config_path: &Path, seed_override: Option<u64>, out: &Path) -> Result<()> {
    let config = SweepConfig::load(config_path)?;
    if config.schemes.len() != 1 {
        bail!(
            "train runs exactly one scheme; config lists {} (use sweep for several)",
            config.schemes.len()
        );
    }
    let seed = seed_override.unwrap_or(config.seed);
    let (tag, spec, scheme) = parse_scheme(&config.schemes[0], config.bins)?;
    let (train_set, test_set) =
        make_toy_dataset(config.dataset_kind()?, config.n, config.dataset_seed)?;
    let train_config = build_train_config(&config, scheme, seed)?;
    let report = train(&train_config, &train_set, &test_set)?;
    let path = out.join(format!("run_{}_s{seed}.csv", sanitize(&config.schemes[0])));
    write_atomic(&path, &report.to_csv())?;
    println!(
        "{tag}[{spec}] seed {seed}: final error {:.6} ({} epochs, {:.2?}, {} clamps)",
        report.final_error,
        report.per_epoch_test_error.len(),
        report.wall_time,
        report.clamp_events,
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// `sweep --config <file>`: all schemes x runs in parallel, one CSV per
/// run plus the aggregate table.
pub fn run_sweep(
    config_path: &Path,
    seed_override: Option<u64>,
    jobs: usize,
    out: &Path,
) -> Result<()> {
    let config = SweepConfig::load(config_path)?;
    let master = seed_override.unwrap_or(config.seed);
    let loss = config.loss_kind()?;
    let (train_set, test_set) =
        make_toy_dataset(config.dataset_kind()?, config.n, config.dataset_seed)?;

    let mut jobs_list = Vec::new();
    for (s_idx, entry) in config.schemes.iter().enumerate() {
        let (tag, spec, scheme) = parse_scheme(entry, config.bins)?;
        for run in 0..config.runs {
            let seed = stream_seed(
                master,
                STREAM_SWEEP_RUN,
                ((s_idx as u64) << 32) | run as u64,
            );
            let train_config = build_train_config(&config, scheme.clone(), seed)?;
            jobs_list.push((
                s_idx,
                run,
                tag.clone(),
                spec.clone(),
                entry.clone(),
                train_config,
            ));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building the worker pool")?;
    let results: Vec<(usize, usize, String, String, String, Result<RunReport>)> =
        pool.install(|| {
            jobs_list
                .into_par_iter()
                .map(|(s_idx, run, tag, spec, entry, train_config)| {
                    let result =
                        train(&train_config, &train_set, &test_set).map_err(anyhow::Error::from);
                    (s_idx, run, tag, spec, entry, result)
                })
                .collect()
        });

    let mut by_scheme: Vec<Vec<RunReport>> = vec![Vec::new(); config.schemes.len()];
    let mut labels: Vec<(String, String)> =
        vec![(String::new(), String::new()); config.schemes.len()];
    for (s_idx, run, tag, spec, entry, result) in results {
        let report = result.with_context(|| format!("run {run} of `{entry}`"))?;
        let path = out.join(format!("run_{}_{run:02}.csv", sanitize(&entry)));
        write_atomic(&path, &report.to_csv())?;
        labels[s_idx] = (tag, spec);
        by_scheme[s_idx].push(report);
    }

    let mut table = String::from("model,policy,runs,mean,confint\n");
    println!("model,policy,runs,mean,confint");
    for (s_idx, reports) in by_scheme.iter().enumerate() {
        let summary = aggregate_runs(reports)?;
        let (tag, spec) = &labels[s_idx];
        let row = table_row(&format!("{tag}-{}", loss_suffix(loss)), spec, &summary);
        println!("{row}");
        table.push_str(&row);
        table.push('\n');
    }
    write_atomic(&out.join("aggregate.csv"), &table)?;
    println!("wrote {}", out.join("aggregate.csv").display());
    Ok(())
}
