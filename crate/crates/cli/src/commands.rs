use crate::manifest::RunManifest;
use crate::{
    manifest_path, BoundMode, CompareArgs, DecodeArgs, EncodeArgs, FamilyArg, FitArgs,
    GradcheckArgs, MismatchArgs, MuModeArg, ObjectiveArg, PdfplotArgs, SynthArgs,
};
use ggm_core::bench::{
    latent_from_bytes, latent_to_bytes, mismatch_delta_r, synth_roi_latents, BenchError, LatentSet,
    MismatchConfig, RoiLatentConfig,
};
use ggm_core::codec::{encode as codec_encode, Bitstream, CodecError, FrequencyTable};
use ggm_core::fit::{
    fit_mle, kl_divergence, Family, FitConfig, FitError, FitResult, Histogram, MuMode, Objective,
};
use ggm_core::ggm::{quantize_zero_center, GgmError, GgmParams};
use ggm_core::grad::gradcheck_sweep;
use ggm_core::models::{EntropyModel, ModelError};
use std::fmt;
use std::path::Path;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Flag(String),
    Input(String),
    Numeric(String),
    Stream(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Flag(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Stream(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Flag(_) => "flag",
            CliError::Input(_) => "input_format",
            CliError::Numeric(_) => "non_convergence",
            CliError::Stream(_) => "stream_corruption",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Flag(m) | CliError::Input(m) | CliError::Numeric(m) | CliError::Stream(m) => {
                write!(f, "{m}")
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("io: {e}"))
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidConfig(_) => CliError::Flag(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidConfig(_) => CliError::Flag(e.to_string()),
            FitError::DegenerateSample(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::InvalidBounds(_) => CliError::Flag(e.to_string()),
            CodecError::Corrupt(_) | CodecError::TableMismatch { .. } => {
                CliError::Stream(e.to_string())
            }
            CodecError::Model(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GgmError> for CliError {
    fn from(e: GgmError) -> Self {
        CliError::Flag(e.to_string())
    }
}

type CsvRows = Vec<Vec<String>>;

fn write_csv(path: &Path, header: &[&str], rows: &CsvRows) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Input(format!("csv: {e}"))
}

fn read_latents(path: &Path) -> Result<LatentSet, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(latent_from_bytes(&bytes)?)
}

fn parse_f64_list(list: &str, what: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Flag(format!("bad {what} value: {tok:?}")))
        })
        .collect()
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

impl FamilyArg {
    fn to_family(self, gmm_k: usize) -> Family {
        match self {
            FamilyArg::Ggm => Family::Ggm,
            FamilyArg::Gaussian => Family::Gaussian,
            FamilyArg::Laplace => Family::Laplace,
            FamilyArg::Logistic => Family::Logistic,
            FamilyArg::Gmm => Family::Gmm { k: gmm_k },
        }
    }
}

fn parse_family(token: &str, gmm_k: usize) -> Result<Family, CliError> {
    match token.trim() {
        "ggm" => Ok(Family::Ggm),
        "gaussian" => Ok(Family::Gaussian),
        "laplace" => Ok(Family::Laplace),
        "logistic" => Ok(Family::Logistic),
        "gmm" => Ok(Family::Gmm { k: gmm_k }),
        other => Err(CliError::Flag(format!("unknown family {other:?}"))),
    }
}

fn fit_config(
    max_steps: usize,
    learning_rate: f64,
    mu_mode: MuModeArg,
    objective: ObjectiveArg,
    seed: u64,
) -> FitConfig {
    FitConfig {
        max_steps,
        learning_rate,
        mu_mode: match mu_mode {
            MuModeArg::Median => MuMode::Median,
            MuModeArg::Mean => MuMode::Mean,
            MuModeArg::Gradient => MuMode::Gradient,
        },
        objective: match objective {
            ObjectiveArg::Continuous => Objective::Continuous,
            ObjectiveArg::Discrete => Objective::Discrete,
        },
        seed,
        ..FitConfig::default()
    }
}

/// Quantize latents against the model's offset, checked into i32 symbols.
fn symbols_for(model: &EntropyModel<f64>, ys: &[f64]) -> Result<Vec<i32>, CliError> {
    let offset = model.quantization_offset();
    ys.iter()
        .map(|&y| {
            let (k, _) = quantize_zero_center(y, offset);
            i32::try_from(k)
                .map_err(|_| CliError::Input(format!("symbol {k} exceeds 32-bit range")))
        })
        .collect()
}

fn coded_bits_per_symbol(
    model: &EntropyModel<f64>,
    ys: &[f64],
    s_min: i32,
    s_max: i32,
) -> Result<f64, CliError> {
    let symbols = symbols_for(model, ys)?;
    let table = FrequencyTable::build(model, s_min, s_max)?;
    let payload = codec_encode(&symbols, std::slice::from_ref(&table))?;
    Ok((payload.len() * 8) as f64 / ys.len().max(1) as f64)
}

// ---------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------

pub fn synth(a: &SynthArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let cfg = RoiLatentConfig {
        n: a.n,
        roi_fraction: a.roi_fraction,
        roi_params: GgmParams::new(a.mu, a.roi_alpha, a.roi_beta)?,
        bg_params: GgmParams::new(a.mu, a.bg_alpha, a.bg_beta)?,
        seed: a.seed,
    };
    let set = synth_roi_latents(&cfg)?;
    std::fs::write(&a.out, latent_to_bytes(&set))?;
    RunManifest::new("synth", argv, Some(a.seed), &[], &[&a.out], started)
        .write(&manifest_path(&a.out))?;
    Ok(())
}

fn fit_one(
    ys: &[f64],
    family: Family,
    cfg: &FitConfig,
    bins: usize,
) -> Result<(FitResult, f64), CliError> {
    let result = fit_mle(ys, family, cfg)?;
    let hist = Histogram::from_samples(ys, bins)?;
    let kl = kl_divergence(&hist, &result.model);
    Ok((result, kl))
}

pub fn fit(a: &FitArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let set = read_latents(&a.input)?;
    let ys = set.values_f64();
    let cfg = fit_config(a.max_steps, a.learning_rate, a.mu_mode, a.objective, a.seed);
    let (result, kl) = fit_one(&ys, a.family.to_family(a.gmm_k), &cfg, a.bins)?;

    let mut params_json = serde_json::to_vec(&result.model).expect("model serializes");
    params_json.push(b'\n');
    std::fs::write(&a.out, params_json)?;

    let mut outputs: Vec<&Path> = vec![&a.out];
    if let Some(csv_path) = &a.csv {
        let row = vec![
            result.model.family_name().to_string(),
            serde_json::to_string(&result.model).expect("model serializes"),
            fmt_f64(result.nll_bits),
            fmt_f64(kl),
            result.converged.to_string(),
            result.steps.to_string(),
        ];
        write_csv(
            csv_path,
            &[
                "family",
                "params",
                "nll_bits",
                "kl_bits",
                "converged",
                "steps",
            ],
            &vec![row],
        )?;
        outputs.push(csv_path);
    }
    RunManifest::new("fit", argv, Some(a.seed), &[&a.input], &outputs, started)
        .write(&manifest_path(&a.out))?;
    if !result.converged {
        return Err(CliError::Numeric(format!(
            "fit did not converge within {} steps (best parameters written)",
            result.steps
        )));
    }
    Ok(())
}

pub fn compare(a: &CompareArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let set = read_latents(&a.input)?;
    let ys = set.values_f64();
    let cfg = fit_config(
        2000,
        1e-2,
        MuModeArg::Median,
        ObjectiveArg::Continuous,
        a.seed,
    );

    let mut rows = Vec::new();
    for token in a.family.split(',') {
        let family = parse_family(token, a.gmm_k)?;
        let (result, kl) = fit_one(&ys, family, &cfg, a.bins)?;
        let bits = coded_bits_per_symbol(&result.model, &ys, a.s_min, a.s_max)?;
        rows.push(vec![
            result.model.family_name().to_string(),
            fmt_f64(result.nll_bits),
            fmt_f64(kl),
            fmt_f64(bits),
            serde_json::to_string(&result.model).expect("model serializes"),
        ]);
    }
    write_csv(
        &a.out,
        &[
            "family",
            "nll_bits",
            "kl_bits",
            "coded_bits_per_symbol",
            "params",
        ],
        &rows,
    )?;
    RunManifest::new(
        "compare",
        argv,
        Some(a.seed),
        &[&a.input],
        &[&a.out],
        started,
    )
    .write(&manifest_path(&a.out))?;
    Ok(())
}

fn model_from_flags(a: &EncodeArgs) -> Result<EntropyModel<f64>, CliError> {
    if let Some(path) = &a.params {
        let bytes = std::fs::read(path)?;
        let model: EntropyModel<f64> = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Input(format!("params json: {e}")))?;
        model.validate()?;
        return Ok(model);
    }
    let model = match a.family {
        FamilyArg::Ggm => EntropyModel::Ggm(GgmParams::new(a.mu, a.alpha, a.beta)?),
        FamilyArg::Gaussian => EntropyModel::Gaussian {
            mu: a.mu,
            sigma: a.alpha,
        },
        FamilyArg::Laplace => EntropyModel::Laplace {
            mu: a.mu,
            b: a.alpha,
        },
        FamilyArg::Logistic => EntropyModel::Logistic {
            mu: a.mu,
            s: a.alpha,
        },
        FamilyArg::Gmm => {
            return Err(CliError::Flag(
                "gmm encoding needs --params (no flag form for mixtures)".to_string(),
            ))
        }
    };
    model.validate()?;
    Ok(model)
}

pub fn encode(a: &EncodeArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let set = read_latents(&a.input)?;
    let ys = set.values_f64();
    let model = model_from_flags(a)?;
    let symbols = symbols_for(&model, &ys)?;
    let bs = Bitstream::encode_stream(model, &symbols, a.s_min, a.s_max)?;
    std::fs::write(&a.out, bs.to_bytes())?;
    let mut inputs: Vec<&Path> = vec![&a.input];
    if let Some(p) = &a.params {
        inputs.push(p);
    }
    RunManifest::new("encode", argv, None, &inputs, &[&a.out], started)
        .write(&manifest_path(&a.out))?;
    Ok(())
}

pub fn decode(a: &DecodeArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let bytes = std::fs::read(&a.input)?;
    let bs = Bitstream::from_bytes(&bytes)?;
    let symbols = bs.decode_stream()?;
    if symbols.len() != bs.count as usize {
        return Err(CliError::Stream("decoded count mismatch".to_string()));
    }
    let offset = bs.model.quantization_offset();
    let rows: CsvRows = symbols
        .iter()
        .enumerate()
        .map(|(i, &s)| vec![i.to_string(), s.to_string(), fmt_f64(s as f64 + offset)])
        .collect();
    write_csv(&a.out, &["index", "symbol", "reconstructed"], &rows)?;
    RunManifest::new("decode", argv, None, &[&a.input], &[&a.out], started)
        .write(&manifest_path(&a.out))?;
    Ok(())
}

pub fn mismatch(a: &MismatchArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let grid = parse_f64_list(&a.grid, "grid")?;
    let cfg = MismatchConfig {
        n_samples: a.n,
        n_noise: a.n_noise,
        seed: a.seed,
        ..MismatchConfig::default()
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &raw_alpha in &grid {
        let alpha = match a.bound {
            BoundMode::None => raw_alpha,
            BoundMode::Fixed => raw_alpha.max(0.11),
            BoundMode::Dynamic => raw_alpha.max(a.zeta * a.beta),
        };
        let p = GgmParams::new(a.mu, alpha, a.beta)?;
        let report = mismatch_delta_r(&p, &cfg)?;
        rows.push(vec![
            fmt_f64(alpha),
            fmt_f64(a.beta),
            fmt_f64(report.r_train),
            fmt_f64(report.r_test),
            fmt_f64(report.delta_r),
            a.n.to_string(),
            a.seed.to_string(),
        ]);
    }
    write_csv(
        &a.out,
        &[
            "alpha",
            "beta",
            "r_train",
            "r_test",
            "delta_r",
            "n_samples",
            "seed",
        ],
        &rows,
    )?;
    RunManifest::new("mismatch", argv, Some(a.seed), &[], &[&a.out], started)
        .write(&manifest_path(&a.out))?;
    Ok(())
}

pub fn gradcheck(a: &GradcheckArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let epsilons = parse_f64_list(&a.eps_fd, "eps-fd")?;
    for &e in &epsilons {
        if !(e > 0.0 && e < 1e-2) {
            return Err(CliError::Flag(format!("eps-fd {e} outside (0, 1e-2)")));
        }
    }
    let reports = gradcheck_sweep(a.n, a.seed, &epsilons);
    let rows: CsvRows = reports
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.epsilon),
                fmt_f64(r.max_rel_err_dy),
                fmt_f64(r.max_rel_err_dbeta),
                fmt_f64(r.max_rel_err_dalpha),
                fmt_f64(r.max_rel_err_dmu),
            ]
        })
        .collect();
    write_csv(
        &a.out,
        &[
            "epsilon",
            "max_rel_err_dy",
            "max_rel_err_dbeta",
            "max_rel_err_dalpha",
            "max_rel_err_dmu",
        ],
        &rows,
    )?;
    RunManifest::new("gradcheck", argv, Some(a.seed), &[], &[&a.out], started)
        .write(&manifest_path(&a.out))?;
    Ok(())
}

pub fn pdfplot(a: &PdfplotArgs, argv: &[String], started: Instant) -> Result<(), CliError> {
    let alphas = parse_f64_list(&a.alpha, "alpha")?;
    let betas = parse_f64_list(&a.beta, "beta")?;
    let parts: Vec<&str> = a.grid.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(CliError::Flag(format!(
            "grid must be start:stop:step, got {:?}",
            a.grid
        )));
    };
    let (start, stop, step) = (
        parse_f64_list(start, "grid")?[0],
        parse_f64_list(stop, "grid")?[0],
        parse_f64_list(step, "grid")?[0],
    );
    if step <= 0.0 || step.is_nan() || stop < start {
        return Err(CliError::Flag(
            "grid needs stop >= start and step > 0".to_string(),
        ));
    }

    let mut rows = Vec::new();
    for &alpha in &alphas {
        for &beta in &betas {
            let p = GgmParams::new(a.mu, alpha, beta)?;
            let steps = ((stop - start) / step).round() as usize;
            for i in 0..=steps {
                let y = start + step * i as f64;
                rows.push(vec![
                    fmt_f64(alpha),
                    fmt_f64(beta),
                    fmt_f64(y),
                    fmt_f64(ggm_core::ggm::pdf(y, &p)),
                    fmt_f64(ggm_core::ggm::cdf(y, &p)),
                ]);
            }
        }
    }
    write_csv(&a.out, &["alpha", "beta", "y", "pdf", "cdf"], &rows)?;
    RunManifest::new("pdfplot", argv, None, &[], &[&a.out], started)
        .write(&manifest_path(&a.out))?;
    Ok(())
}
