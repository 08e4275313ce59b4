//! Batch front end: parse a run configuration, dispatch to the classifier,
//! the quadratic forms or the harness, and serialize the results.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::geometry_engine::FdOptions;
use crate::spectral_forms::{self as sf, FormError, FormOptions, FunctionalId, ProductSpace, QuadraticFormReport, VariationDirection};
use crate::stability_classifier::{
    self as sc, ClassifierError, ClassifyOptions, ScanGrid, ScanRow, StabilityStatus, StabilityVerdict,
};
use crate::verification_harness::{self as vh, HarnessError, Verdict, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("could not write output: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Classify,
    Hessian,
    Verify,
    Region,
    Catalog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Continuation,
    Consistency,
}

/// Overrides of module defaults; absent fields keep the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criticality_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_bochner: Option<bool>,
}

impl Tolerances {
    fn fd_options(&self) -> FdOptions {
        let d = FdOptions::default();
        FdOptions {
            base_step: self.base_step.or(d.base_step),
            tolerance: self.fd_tolerance.unwrap_or(d.tolerance),
            criticality_tolerance: self.criticality_tolerance.unwrap_or(d.criticality_tolerance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<VariationDirection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ScanGrid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputFormat>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub auto_rescale: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Command-line flags; each one set overrides the config.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags {
    pub output: Option<OutputFormat>,
    pub strict: bool,
    pub auto_rescale: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// One catalog sample with the live classifier result beside the expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRow {
    pub id: String,
    pub family: String,
    pub predicate: String,
    pub functional: FunctionalId,
    pub expected: StabilityStatus,
    pub sample: ProductSpace,
    pub classified: Option<StabilityStatus>,
    pub agrees: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Ok(cfg)
}

/// JSON with every float written to 17 significant digits.
struct SigFigs<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident $(, $arg:ident: $ty:ty)*;)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for SigFigs<'_> {
    delegate! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        begin_object_value;
        end_object_value;
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt_float(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| CliError::Output(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
}

pub fn region_csv(rows: &[ScanRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let out = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(["n0", "n1", "mu_ratio", "t", "status", "error"]).map_err(out)?;
    for r in rows {
        w.write_record([
            r.n0.to_string(),
            r.n1.to_string(),
            r.mu_ratio.map(fmt_float).unwrap_or_default(),
            r.t.map(fmt_float).unwrap_or_default(),
            r.status.map(|s| format!("{s:?}")).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(out)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

fn need<T: Clone>(v: &Option<T>, field: &str, cmd: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Invalid(format!("`{field}` is required for {cmd}")))
}

struct Produced {
    stdout: String,
    refuted: bool,
    indeterminate: bool,
}

fn json_only(format: OutputFormat, cmd: &str) -> Result<(), CliError> {
    if format == OutputFormat::Csv {
        return Err(CliError::Invalid(format!("csv output is only available for region, not {cmd}")));
    }
    Ok(())
}

fn execute(cfg: &RunConfig, format: OutputFormat, copts: &ClassifyOptions) -> Result<Produced, CliError> {
    let mut p = Produced { stdout: String::new(), refuted: false, indeterminate: false };
    match cfg.command {
        Command::Classify => {
            json_only(format, "classify")?;
            let product = need(&cfg.product, "product", "classify")?;
            let functional = need(&cfg.functional, "functional", "classify")?;
            let v: StabilityVerdict = sc::classify(functional, &product, copts)?;
            p.indeterminate = v.status == StabilityStatus::Indeterminate;
            p.stdout = to_json(&v)?;
        }
        Command::Hessian => {
            json_only(format, "hessian")?;
            let product = need(&cfg.product, "product", "hessian")?;
            let functional = need(&cfg.functional, "functional", "hessian")?;
            if cfg.directions.is_empty() {
                return Err(CliError::Invalid("`directions` is required for hessian".into()));
            }
            let fopts = FormOptions { strict_bochner: cfg.tolerances.strict_bochner.unwrap_or(false) };
            let reports = cfg
                .directions
                .iter()
                .map(|d| match d {
                    VariationDirection::MixedTT { .. } => sf::hessian_mixed_tt_with(functional, &product, d, &fopts),
                    _ => sf::hessian(functional, &product, d),
                })
                .collect::<Result<Vec<QuadraticFormReport>, FormError>>()?;
            p.stdout = to_json(&reports)?;
        }
        Command::Verify => {
            json_only(format, "verify")?;
            let fd = cfg.tolerances.fd_options();
            let mut ids = cfg.cases.clone();
            if ids.is_empty() && cfg.suites.is_empty() {
                ids = vh::builtin_cases();
            }
            let mut reports: Vec<VerificationReport> =
                vh::verify_cases(&ids, &fd).into_iter().collect::<Result<_, HarnessError>>()?;
            for s in &cfg.suites {
                match s {
                    Suite::Continuation => reports.extend(vh::continuation_suite(&fd)?),
                    Suite::Consistency => reports.extend(vh::consistency_suite(
                        cfg.tolerances.identity_samples.unwrap_or(100),
                        cfg.tolerances.identity_seed.unwrap_or(0),
                    )?),
                }
            }
            p.refuted = reports.iter().any(|r| r.verdict == Verdict::Refuted);
            p.indeterminate = reports.iter().any(|r| r.verdict == Verdict::Inconclusive);
            p.stdout = to_json(&reports)?;
        }
        Command::Region => {
            let functional = need(&cfg.functional, "functional", "region")?;
            let grid = need(&cfg.grid, "grid", "region")?;
            let rows = sc::region_scan(functional, &grid, copts);
            p.indeterminate = rows.iter().any(|r| r.status == Some(StabilityStatus::Indeterminate));
            p.stdout = match format {
                OutputFormat::Json => to_json(&rows)?,
                OutputFormat::Csv => region_csv(&rows)?,
            };
        }
        Command::Catalog => {
            json_only(format, "catalog")?;
            let rows = catalog_rows(copts);
            p.indeterminate = rows.iter().any(|r| r.classified == Some(StabilityStatus::Indeterminate));
            p.stdout = to_json(&rows)?;
        }
    }
    Ok(p)
}

pub fn catalog_rows(copts: &ClassifyOptions) -> Vec<CatalogRow> {
    let mut rows = Vec::new();
    for e in sc::catalog() {
        for s in &e.samples {
            let live = sc::classify(e.functional, s, copts);
            let (classified, error) = match live {
                Ok(v) => (Some(v.status), None),
                Err(err) => (None, Some(err.to_string())),
            };
            rows.push(CatalogRow {
                id: e.id.clone(),
                family: e.family.clone(),
                predicate: e.predicate.clone(),
                functional: e.functional,
                expected: e.expected,
                sample: s.clone(),
                classified,
                agrees: classified == Some(e.expected),
                error,
            });
        }
    }
    rows
}

/// Run a parsed configuration; flags take precedence over config fields.
pub fn run(cfg: &RunConfig, flags: &Flags) -> RunOutcome {
    let format = flags.output.or(cfg.output).unwrap_or_default();
    let strict = flags.strict || cfg.strict;
    let copts = ClassifyOptions { auto_rescale: flags.auto_rescale || cfg.auto_rescale };
    match execute(cfg, format, &copts) {
        Ok(p) => {
            let exit_code = if p.refuted {
                EXIT_REFUTED
            } else if strict && p.indeterminate {
                EXIT_INDETERMINATE
            } else {
                EXIT_OK
            };
            RunOutcome { exit_code, stdout: p.stdout, stderr: String::new() }
        }
        Err(e) => RunOutcome { exit_code: EXIT_INVALID, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

/// Parse and run configuration text.
pub fn run_text(text: &str, flags: &Flags) -> RunOutcome {
    match parse_config(text) {
        Ok(cfg) => run(&cfg, flags),
        Err(e) => RunOutcome { exit_code: EXIT_INVALID, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLASSIFY: &str = r#"{
        "command": "classify",
        "functional": {"kind": "Ric"},
        "product": {"factors": [
            {"kind": "Sphere", "dim": 5, "sectional": 1.0},
            {"kind": "HyperbolicQuotient", "dim": 5, "sectional": -1.0, "mu_fn": 10.0}
        ]}
    }"#;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_float(39.0), "3.9000000000000000e1");
        assert_eq!(fmt_float(-0.1), "-1.0000000000000001e-1");
        let s = to_json(&vec![0.1f64, f64::NEG_INFINITY]).unwrap();
        assert!(s.contains("1.0000000000000001e-1") && s.contains("null"));
        let back: Vec<f64> = serde_json::from_str(&to_json(&vec![0.1f64, 1.0 / 3.0]).unwrap()).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn classify_example() {
        let out = run_text(CLASSIFY, &Flags::default());
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.stderr);
        let v: StabilityVerdict = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v.status, StabilityStatus::Stable);
        assert!(!v.assumptions.is_empty());
    }

    #[test]
    fn unknown_field_and_missing_dim_are_rejected() {
        let out = run_text(r#"{"command": "catalog", "colour": 1}"#, &Flags::default());
        assert_eq!(out.exit_code, EXIT_INVALID);
        assert!(out.stderr.contains("colour"));
        let bad = CLASSIFY.replace(r#""dim": 5, "sectional": 1.0"#, r#""sectional": 1.0"#);
        let out = run_text(&bad, &Flags::default());
        assert_eq!(out.exit_code, EXIT_INVALID);
        assert!(out.stderr.contains("product.factors[0]") && out.stderr.contains("dim"), "{}", out.stderr);
    }

    #[test]
    fn csv_is_region_only() {
        let flags = Flags { output: Some(OutputFormat::Csv), ..Flags::default() };
        assert_eq!(run_text(CLASSIFY, &flags).exit_code, EXIT_INVALID);
    }

    #[test]
    fn config_round_trip() {
        let cfg = parse_config(CLASSIFY).unwrap();
        let again = parse_config(&to_json(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn strict_flags_indeterminate() {
        let cfg = r#"{"command": "classify", "functional": {"kind": "S"}, "product": {"factors": [
            {"kind": "Sphere", "dim": 3, "sectional": 1.0},
            {"kind": "Sphere", "dim": 4, "sectional": 1.0}]}}"#;
        let lax = run_text(cfg, &Flags::default());
        let strict = run_text(cfg, &Flags { strict: true, ..Flags::default() });
        let v: StabilityVerdict = serde_json::from_str(&lax.stdout).unwrap();
        if v.status == StabilityStatus::Indeterminate {
            assert_eq!((lax.exit_code, strict.exit_code), (EXIT_OK, EXIT_INDETERMINATE));
        } else {
            assert_eq!(strict.exit_code, EXIT_OK);
        }
    }
}
