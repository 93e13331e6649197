//! The subcommands: option structs, validation, computation and artifact output.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use htwave::checks::{quick_subset, run_criterion, CheckReport, CRITERION_COUNT};
use htwave::io::{csv_record, format_float, write_atomic, write_field, RunMetadata};
use htwave::multiplier::{
    condition_value, constant_multiplier, imaginary_power, oscillating_multiplier, sobolev_test_multiplier,
    ConditionReport, MultiplierOptions,
};
use htwave::phase::{curve as curve_point, hessian_determinant_check, HESSIAN_TAU_MAX};
use htwave::special::cutoff::standard_bump;
use htwave::subordination::{reconstruct_points, subordinate, SubordinationOptions};
use htwave::wave::{
    assemble_k0, assemble_kk_band, assemble_kkl, band_depth, l1_norm, linf_norm, scaling_study, singular_curve_distance,
    split_ab, KernelField, KernelOptions, StudyRequest, WaveContext, MAX_CELLS, MAX_LAMBDA,
};
use htwave::HTypeGroup;

use crate::config;
use crate::error::CliError;
use crate::{Global, GroupPreset};

/// A subcommand's resolved options plus the effective configuration they came from.
pub struct Run<A> {
    pub global: Global,
    pub args: A,
    /// `{"command": .., <every option>}`; hashed into the metadata.
    pub effective: Value,
}

/// Merges flags and config file (file wins) and reads the options back.
pub fn resolve<A: Serialize + DeserializeOwned>(
    global: &Global,
    args: &A,
    file: Option<Map<String, Value>>,
    command: &str,
) -> Result<Run<A>, CliError> {
    let merged = config::overlay(config::flag_object(global, args)?, file)?;
    let global: Global = config::extract(&merged)?;
    let args: A = config::extract(&merged)?;
    let mut effective = Map::new();
    effective.insert("command".into(), Value::from(command));
    effective.extend(merged);
    Ok(Run { global, args, effective: Value::Object(effective) })
}

impl<A> Run<A> {
    fn metadata(&self, tolerances: Value) -> Result<RunMetadata, CliError> {
        Ok(RunMetadata::new(&self.effective, self.global.seed, tolerances)?)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.global.out.join(name)
    }

    /// Writes `<stem>.csv` and its `<stem>.meta.json`.
    fn write_csv(&self, stem: &str, csv: &str, meta: &RunMetadata) -> Result<PathBuf, CliError> {
        let path = self.path(&format!("{stem}.csv"));
        write_atomic(&path, csv.as_bytes())?;
        let sidecar = json!({ "artifact": format!("{stem}.csv"), "config": self.effective, "metadata": meta });
        write_json(&self.path(&format!("{stem}.meta.json")), &sidecar)?;
        Ok(path)
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(htwave::Error::from)?;
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

fn group(preset: GroupPreset) -> Result<HTypeGroup, CliError> {
    Ok(match preset {
        GroupPreset::Heisenberg => HTypeGroup::heisenberg(1)?,
        GroupPreset::Quaternionic => HTypeGroup::quaternionic(),
    })
}

fn check_lambda(lambda: f64) -> Result<(), CliError> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(CliError::Validation(format!("lambda = {lambda} must be a finite number >= 1")));
    }
    if lambda > MAX_LAMBDA {
        return Err(htwave::Error::Budget(format!("lambda = {lambda} exceeds the budget of {MAX_LAMBDA}")).into());
    }
    Ok(())
}

fn check_count(name: &str, n: usize) -> Result<(), CliError> {
    if n == 0 || n > MAX_CELLS {
        return Err(CliError::Validation(format!("--{name} = {n} must lie in 1..={MAX_CELLS}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------------------
// kernel

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelComponent {
    /// The kernel itself.
    Full,
    /// The `A` part of the Bessel split.
    A,
    /// The `B` part of the Bessel split.
    B,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct KernelArgs {
    /// Frequency scale lambda (<= 1024).
    #[arg(long, default_value_t = 64.0)]
    pub lambda: f64,
    /// Band index k; 0 selects K^0.
    #[arg(long, default_value_t = 0)]
    pub k: u64,
    /// Sub-band index l >= 1; omitted with k >= 1 gives the full band K^k (all l down to
    /// the resolution scale).
    #[arg(long)]
    pub l: Option<u32>,
    /// Which part to store (A and B need k >= 1 and --l).
    #[arg(long, value_enum, default_value_t = KernelComponent::Full)]
    pub component: KernelComponent,
    /// The A/B region is v >= c_region / (lambda k).
    #[arg(long, default_value_t = 10.0)]
    pub c_region: f64,
    /// Certify the field: doubling the t density must change the L1 norm by <= 0.5%.
    #[arg(long)]
    pub certify: bool,
}

pub fn kernel(run: Run<KernelArgs>) -> Result<(), CliError> {
    let a = &run.args;
    check_lambda(a.lambda)?;
    let g = group(run.global.group)?;
    let opts = KernelOptions { certify: a.certify, ..KernelOptions::default() };
    let ctx = WaveContext::new(g.d1(), g.d2(), a.lambda, &opts)?;
    let field: KernelField = match (a.k, a.l, a.component) {
        (0, None, KernelComponent::Full) => assemble_k0(&ctx, &opts)?,
        (0, _, _) => return Err(CliError::Validation("K^0 (k = 0) takes neither --l nor an A/B component".into())),
        (k, None, KernelComponent::Full) => assemble_kk_band(&ctx, k, band_depth(a.lambda, k), &opts)?,
        (_, None, _) => return Err(CliError::Validation("the A/B split needs --l".into())),
        (k, Some(l), KernelComponent::Full) => assemble_kkl(&ctx, k, l, &opts)?,
        (k, Some(l), c) => {
            let s = split_ab(&ctx, k, l, a.c_region, &opts)?;
            if c == KernelComponent::A {
                s.a
            } else {
                s.b
            }
        }
    };
    let meta = run.metadata(json!({ "kernel": opts }))?;
    let path = run.path("kernel.htwk");
    write_field(&path, &field, &meta)?;
    let (i, j) = field.argmax();
    let mut summary = json!({
        "field": path.display().to_string(),
        "nr": field.grid.nr(),
        "nv": field.grid.nv,
        "l1": l1_norm(&field),
        "linf": linf_norm(&field),
        "argmax": { "r": field.grid.r[i], "v": field.grid.v(j) },
        "certificate": field.diagnostics.certificate,
        "config_hash": meta.config_hash,
    });
    if a.k >= 1 && a.component == KernelComponent::Full {
        summary["curve_distance_cells"] = json!(singular_curve_distance(&field)?);
    }
    println!("{summary}");
    Ok(())
}

// ---------------------------------------------------------------------------------------
// curve

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CurveArgs {
    /// Start of the t-range.
    #[arg(long, default_value_t = 0.0)]
    pub tmin: f64,
    /// End of the t-range.
    #[arg(long, default_value_t = 20.0)]
    pub tmax: f64,
    /// Number of cell-centred samples of the t-range.
    #[arg(long, default_value_t = 4000)]
    pub samples: usize,
}

pub fn curve(run: Run<CurveArgs>) -> Result<(), CliError> {
    let a = &run.args;
    if !(a.tmin >= 0.0 && a.tmax > a.tmin && a.tmax.is_finite()) {
        return Err(CliError::Validation(format!("need 0 <= tmin < tmax, got [{}, {}]", a.tmin, a.tmax)));
    }
    check_count("samples", a.samples)?;
    let dt = (a.tmax - a.tmin) / a.samples as f64;
    let mut csv = csv_record(&["t", "r", "v", "rp", "vp"]);
    let mut rows = 0;
    for i in 0..a.samples {
        let t = a.tmin + (i as f64 + 0.5) * dt;
        let p = curve_point(t)?;
        // Multiples of pi (corners of r) are excluded.
        let Some(d) = p.derivs else { continue };
        csv.push_str(&csv_record(&[t, p.r, p.v, d.rp, d.vp].map(format_float)));
        rows += 1;
    }
    let meta = run.metadata(json!({ "t_step": dt }))?;
    let path = run.write_csv("curve", &csv, &meta)?;
    println!("{}", json!({ "curve": path.display().to_string(), "rows": rows, "config_hash": meta.config_hash }));
    Ok(())
}

// ---------------------------------------------------------------------------------------
// scaling

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScalingArgs {
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
    pub lambda: Vec<f64>,
    /// Comma-separated band indices; 0 selects K^0.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k: Vec<u64>,
    /// Comma-separated sub-band indices (used for k >= 1).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub l: Vec<u32>,
    /// Certify every field (exit 3 if a certificate fails).
    #[arg(long)]
    pub certify: bool,
}

pub fn scaling(run: Run<ScalingArgs>) -> Result<(), CliError> {
    let a = &run.args;
    if a.lambda.is_empty() || a.k.is_empty() || (a.k.iter().any(|&k| k >= 1) && a.l.is_empty()) {
        return Err(CliError::Validation("--lambda, --k and (for k >= 1) --l need at least one value".into()));
    }
    for &lam in &a.lambda {
        check_lambda(lam)?;
    }
    if let Some(&l) = a.l.iter().find(|&&l| l == 0) {
        return Err(CliError::Validation(format!("--l = {l}: sub-band indices start at 1")));
    }
    let g = group(run.global.group)?;
    let opts = KernelOptions { certify: a.certify, ..KernelOptions::default() };
    let req = StudyRequest::product(g.d1(), g.d2(), &a.lambda, &a.k, &a.l);
    let table = scaling_study(&req, &opts)?;
    let meta = run.metadata(json!({ "kernel": opts }))?;
    let csv_path = run.write_csv("norms", &table.to_csv(), &meta)?;
    let slopes_path = run.path("slopes.json");
    write_json(&slopes_path, &json!({ "slopes": table.slopes, "config": run.effective, "metadata": meta }))?;
    for s in &table.slopes {
        println!(
            "{:?} slope {:.4} +- {:.4} ({} points, component {:?}, lambda {:?}, k {:?}, l {:?})",
            s.axis, s.slope, s.slope_ci95, s.points, s.component, s.lambda, s.k, s.l
        );
    }
    println!(
        "{}",
        json!({ "norms": csv_path.display().to_string(), "slopes": slopes_path.display().to_string(), "config_hash": meta.config_hash })
    );
    Ok(())
}

// ---------------------------------------------------------------------------------------
// subordination

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SubordinationArgs {
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',', default_value = "64,256")]
    pub lambda: Vec<f64>,
    /// Number of x points, uniform on [x_min, x_max].
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 0.125)]
    pub x_min: f64,
    #[arg(long, default_value_t = 8.0)]
    pub x_max: f64,
}

pub fn subordination(run: Run<SubordinationArgs>) -> Result<(), CliError> {
    let a = &run.args;
    if a.lambda.is_empty() {
        return Err(CliError::Validation("--lambda needs at least one value".into()));
    }
    for &lam in &a.lambda {
        check_lambda(lam)?;
    }
    check_count("points", a.points)?;
    if !(a.x_min > 0.0 && a.x_max > a.x_min && a.x_max.is_finite()) {
        return Err(CliError::Validation(format!("need 0 < x_min < x_max, got [{}, {}]", a.x_min, a.x_max)));
    }
    let n = a.points;
    let xs: Vec<f64> =
        (0..n).map(|i| if n == 1 { a.x_min } else { a.x_min + i as f64 * (a.x_max - a.x_min) / (n - 1) as f64 }).collect();
    let opts = SubordinationOptions::default();
    let mut csv = csv_record(&["lambda", "x", "exact_re", "exact_im", "reconstructed_re", "reconstructed_im", "abs_error"]);
    let mut worst = Vec::new();
    for &lam in &a.lambda {
        let res = subordinate(&standard_bump, lam, &opts)?;
        let pts = reconstruct_points(&res, &standard_bump, &xs, &opts.quad)?;
        let mut max_err: f64 = 0.0;
        for p in &pts {
            max_err = max_err.max(p.error());
            csv.push_str(&csv_record(
                &[lam, p.x, p.exact.re, p.exact.im, p.reconstructed.re, p.reconstructed.im, p.error()].map(format_float),
            ));
        }
        println!("lambda {lam}: max abs error {max_err:.3e}");
        worst.push(json!({ "lambda": lam, "max_abs_error": max_err }));
    }
    let meta = run.metadata(json!({ "subordination": opts }))?;
    let path = run.write_csv("subordination", &csv, &meta)?;
    println!("{}", json!({ "subordination": path.display().to_string(), "errors": worst, "config_hash": meta.config_hash }));
    Ok(())
}

// ---------------------------------------------------------------------------------------
// hessian

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct HessianArgs {
    /// Number of random cone samples (omega, sigma, x, y).
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Largest tau = |omega| / sigma (at most 3 pi / 4).
    #[arg(long, default_value_t = HESSIAN_TAU_MAX)]
    pub tau_max: f64,
}

pub fn hessian(run: Run<HessianArgs>) -> Result<(), CliError> {
    let a = &run.args;
    check_count("samples", a.samples)?;
    if !(a.tau_max > 0.0 && a.tau_max <= HESSIAN_TAU_MAX) {
        return Err(CliError::Validation(format!("--tau-max = {} must lie in (0, 3 pi / 4]", a.tau_max)));
    }
    let g = group(run.global.group)?;
    let (d1, d2) = (g.d1(), g.d2());
    let mut rng = ChaCha8Rng::seed_from_u64(run.global.seed);
    let mut csv = csv_record(&["sample", "tau", "sigma", "numeric", "closed_form", "rel_gap"]);
    let mut worst: f64 = 0.0;
    for i in 0..a.samples {
        let sigma = rng.random_range(0.5..2.0);
        let tau = rng.random_range(0.0..a.tau_max);
        let dir: Vec<f64> = (0..d2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nd = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let omega: Vec<f64> = dir.iter().map(|x| x / nd * tau * sigma).collect();
        let x: Vec<f64> = (0..d1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..d1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = hessian_determinant_check(&g, &omega, sigma, &x, &y)?;
        worst = worst.max(c.rel_gap);
        csv.push_str(&csv_record(&[
            i.to_string(),
            format_float(tau),
            format_float(sigma),
            format_float(c.numeric),
            format_float(c.closed_form),
            format_float(c.rel_gap),
        ]));
    }
    let meta = run.metadata(json!({ "sigma_range": [0.5, 2.0], "tau_max": a.tau_max }))?;
    let path = run.write_csv("hessian", &csv, &meta)?;
    println!("{}", json!({ "hessian": path.display().to_string(), "max_rel_gap": worst, "config_hash": meta.config_hash }));
    Ok(())
}

// ---------------------------------------------------------------------------------------
// multiplier

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierKind {
    /// m = 1.
    Constant,
    /// The Sobolev-regular test multiplier |sin(pi log2 xi)|^(beta - 1/2).
    Sobolev,
    /// xi^(i gamma).
    ImaginaryPower,
    /// e^(i xi), which violates the condition.
    Oscillating,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierArgs {
    #[arg(long, value_enum, default_value_t = MultiplierKind::Sobolev)]
    pub multiplier: MultiplierKind,
    /// Regularity of the Sobolev test multiplier (default (d + 1) / 2).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Exponent of the imaginary power.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Largest R of the R-grid (>= 1024).
    #[arg(long, default_value_t = 1024.0)]
    pub r_max: f64,
}

pub fn multiplier(run: Run<MultiplierArgs>) -> Result<(), CliError> {
    let a = &run.args;
    let g = group(run.global.group)?;
    let base = MultiplierOptions::default();
    // Same density of R-points per octave as the default grid.
    let base_octaves = (base.r_max / base.r_min).log2();
    let octaves = (a.r_max / base.r_min).log2();
    if !(a.r_max >= base.r_max && octaves.is_finite()) {
        return Err(CliError::Validation(format!("--r-max = {} must be >= {}", a.r_max, base.r_max)));
    }
    let per_octave = (base.r_points - 1) as f64 / base_octaves;
    let opts = MultiplierOptions {
        d: (g.d1() + g.d2()) as f64,
        r_max: a.r_max,
        r_points: (octaves * per_octave).round() as usize + 1,
        ..base
    };
    let beta = a.beta.unwrap_or((opts.d + 1.0) / 2.0);
    let report: ConditionReport = match a.multiplier {
        MultiplierKind::Constant => condition_value(&constant_multiplier, &opts)?,
        MultiplierKind::Sobolev => condition_value(&sobolev_test_multiplier(beta), &opts)?,
        MultiplierKind::ImaginaryPower => condition_value(&imaginary_power(a.gamma), &opts)?,
        MultiplierKind::Oscillating => condition_value(&oscillating_multiplier, &opts)?,
    };
    let p = &report.profile;
    let mut csv = csv_record(&["radius", "a_r", "floor", "argmax_t"]);
    for i in 0..p.radii.len() {
        csv.push_str(&csv_record(&[p.radii[i], p.values[i], p.floors[i], p.argmax_t[i]].map(format_float)));
    }
    let meta = run.metadata(json!({ "multiplier": opts }))?;
    let path = run.write_csv("multiplier_profile", &csv, &meta)?;
    let summary = json!({
        "multiplier": a.multiplier,
        "beta": (a.multiplier == MultiplierKind::Sobolev).then_some(beta),
        "sup_m": report.sup_m,
        "integral": report.integral,
        "tail": report.tail,
        "exponent": report.exponent,
        "exponent_ci95": report.exponent_ci95,
        "verdict": report.verdict,
        "t_unresolved": p.t_unresolved.len(),
        "max_alias": p.max_alias,
        "profile": path.display().to_string(),
    });
    write_json(&run.path("multiplier.json"), &json!({ "result": summary, "config": run.effective, "metadata": meta }))?;
    println!("{summary}");
    Ok(())
}

// ---------------------------------------------------------------------------------------
// checks

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ChecksArgs {
    /// Only the quick subset (under two minutes).
    #[arg(long)]
    pub quick: bool,
    /// Comma-separated criterion numbers to run (default: all, or the quick subset).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
}

pub fn checks(run: Run<ChecksArgs>) -> Result<(), CliError> {
    let a = &run.args;
    let mut selected: Vec<u32> = if a.quick { quick_subset() } else { (1..=CRITERION_COUNT).collect() };
    if !a.only.is_empty() {
        if let Some(bad) = a.only.iter().find(|&&n| n == 0 || n > CRITERION_COUNT) {
            return Err(CliError::Validation(format!("--only: criterion {bad} does not exist (1..={CRITERION_COUNT})")));
        }
        selected.retain(|n| a.only.contains(n));
    }
    let mut reports: Vec<CheckReport> = Vec::new();
    for n in selected {
        let r = run_criterion(n, run.global.seed)?;
        println!("{}", r.line());
        reports.push(r);
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("checks: {passed}/{} pass", reports.len());
    // The CSV leaves out timings so that equal seeds give identical files.
    let mut csv = csv_record(&["criterion", "name", "quick", "pass", "detail"]);
    for r in &reports {
        csv.push_str(&csv_record(&[r.number.to_string(), r.name.to_string(), r.quick.to_string(), r.pass.to_string(), r.detail.clone()]));
    }
    let meta = run.metadata(json!({ "criteria": "fixed bars of the acceptance suite" }))?;
    run.write_csv("checks", &csv, &meta)?;
    write_json(&run.path("checks.json"), &json!({ "reports": reports, "config": run.effective, "metadata": meta }))?;
    Ok(())
}
