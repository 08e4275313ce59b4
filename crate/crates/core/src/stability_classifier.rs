//! Stability verdicts for products of Einstein manifolds.
//!
//! Verdicts follow the closed-form thresholds; every threshold test is
//! cross-checked against the quadratic form itself whenever the relevant
//! eigenvalue is known, and witnesses always carry form values.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral_forms::{
    self as sf, approx_eq, EinsteinFactor, FactorKind, FormError, FunctionalId, ProductSpace, SignCase, TriState,
    VariationDirection, REL_TOL, UNSTABLE_FACTOR_SENTINEL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("invalid scan grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityStatus {
    Stable,
    Unstable,
    Marginal,
    NotCritical,
    Indeterminate,
}

impl fmt::Display for StabilityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StabilityStatus::Stable => "Stable",
            StabilityStatus::Unstable => "Unstable",
            StabilityStatus::Marginal => "Marginal",
            StabilityStatus::NotCritical => "NotCritical",
            StabilityStatus::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub direction: VariationDirection,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    UserSupplied,
    KnownCaseTable,
}

/// A factor-level stability fact the verdict depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorFact {
    pub factor: usize,
    pub property: String,
    pub status: TriState,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub functional: FunctionalId,
    pub status: StabilityStatus,
    pub witnesses: Vec<Witness>,
    pub assumptions: Vec<FactorFact>,
    /// Least quadratic-form value among the evaluated directions.
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl StabilityVerdict {
    fn bare(functional: FunctionalId, status: StabilityStatus, note: impl Into<String>) -> Self {
        StabilityVerdict {
            functional,
            status,
            witnesses: Vec::new(),
            assumptions: Vec::new(),
            margin: None,
            missing: Vec::new(),
            notes: vec![note.into()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyOptions {
    /// Rescale factor 1 so that |λ_1| = |λ_0| before the Ric criticality test.
    #[serde(default)]
    pub auto_rescale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FactorStatus {
    Yes,
    No,
    Boundary,
    Unknown,
}

fn hyperbolic_status(f: &EinsteinFactor) -> FactorStatus {
    match f.dim {
        3 | 4 => FactorStatus::Yes,
        0..=2 => FactorStatus::Unknown,
        n => {
            let Some(mu) = f.mu_fn else { return FactorStatus::Unknown };
            let x = mu / f.einstein_const.abs();
            let thr = 2.0 * (n as f64 - 4.0) / n as f64;
            if approx_eq(x, thr, REL_TOL) {
                FactorStatus::Boundary
            } else if x > thr {
                FactorStatus::Yes
            } else {
                FactorStatus::No
            }
        }
    }
}

fn factor_ric_status(f: &EinsteinFactor) -> (FactorStatus, Provenance) {
    let table = |s| (s, Provenance::KnownCaseTable);
    match f.kind {
        FactorKind::Sphere if f.dim >= 3 => table(FactorStatus::Yes),
        FactorKind::ComplexProjective if f.dim >= 4 => table(FactorStatus::Yes),
        FactorKind::SpaceForm => match f.sectional {
            Some(k) if k > 0.0 && f.dim >= 3 => table(FactorStatus::Yes),
            Some(k) if k < 0.0 => table(hyperbolic_status(f)),
            _ => table(FactorStatus::Unknown),
        },
        FactorKind::HyperbolicQuotient => table(hyperbolic_status(f)),
        FactorKind::AbstractEinstein => (tri_to_status(f.ric_stable), Provenance::UserSupplied),
        _ => table(FactorStatus::Unknown),
    }
}

fn tri_to_status(t: TriState) -> FactorStatus {
    match t {
        TriState::Yes => FactorStatus::Yes,
        TriState::No => FactorStatus::No,
        TriState::Unknown => FactorStatus::Unknown,
    }
}

/// Known-case Ric stability of a single factor.
pub fn factor_ric_stability(factor: &EinsteinFactor) -> TriState {
    match factor_ric_status(factor).0 {
        FactorStatus::Yes => TriState::Yes,
        FactorStatus::No => TriState::No,
        FactorStatus::Boundary | FactorStatus::Unknown => TriState::Unknown,
    }
}

/// Outcome of one test feeding a verdict.
#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Pass(Option<f64>),
    Fail(Witness),
    Boundary(Witness),
    Missing(String),
    Unresolved(String, Option<f64>),
}

/// Eigenvalue condition on the conformal direction f·g_target, f on `source`:
/// μ_source/scale must exceed `threshold` (−∞ when the theorem imposes none).
#[derive(Debug, Clone, Copy)]
struct Condition {
    source: usize,
    target: usize,
    threshold: f64,
    scale: f64,
}

/// Direction whose form is negative for every eigenvalue; `fallback` stands
/// in for an unknown eigenvalue.
#[derive(Debug, Clone, Copy)]
struct Blanket {
    source: usize,
    target: usize,
    fallback: f64,
}

struct Builder<'a> {
    functional: FunctionalId,
    product: &'a ProductSpace,
    cells: Vec<Cell>,
    assumptions: Vec<FactorFact>,
    notes: Vec<String>,
}

impl<'a> Builder<'a> {
    fn new(functional: FunctionalId, product: &'a ProductSpace) -> Self {
        Builder { functional, product, cells: Vec::new(), assumptions: Vec::new(), notes: Vec::new() }
    }

    fn evaluate(&self, direction: &VariationDirection) -> Option<(f64, f64)> {
        match sf::hessian(self.functional, self.product, direction) {
            Ok(r) if r.defined => Some((r.value, r.magnitude())),
            _ => None,
        }
    }

    fn factor(&mut self, k: usize, property: &str, status: FactorStatus, provenance: Provenance) {
        let tri = match status {
            FactorStatus::Yes => TriState::Yes,
            FactorStatus::No => TriState::No,
            _ => TriState::Unknown,
        };
        self.assumptions.push(FactorFact { factor: k, property: property.to_string(), status: tri, provenance });
        let bound = |b: f64| VariationDirection::FactorTT { factor: k, factor_hessian_lower_bound: Some(b) };
        self.cells.push(match status {
            FactorStatus::Yes => Cell::Pass(None),
            FactorStatus::No => Cell::Fail(Witness { direction: bound(UNSTABLE_FACTOR_SENTINEL), value: UNSTABLE_FACTOR_SENTINEL }),
            FactorStatus::Boundary => Cell::Boundary(Witness { direction: bound(0.0), value: 0.0 }),
            FactorStatus::Unknown => Cell::Missing(format!("{property} of factor {k}")),
        });
    }

    fn condition(&mut self, c: Condition) {
        let f = &self.product.factors[c.source];
        let vacuous = c.threshold == f64::NEG_INFINITY;
        let Some(mu) = f.mu_fn else {
            self.cells.push(if vacuous {
                Cell::Pass(None)
            } else {
                Cell::Missing(format!("first eigenvalue mu_fn of factor {}", c.source))
            });
            return;
        };
        let x = mu / c.scale;
        let theorem = if vacuous || (x > c.threshold && !approx_eq(x, c.threshold, REL_TOL)) {
            Cell::Pass(None)
        } else if approx_eq(x, c.threshold, REL_TOL) {
            Cell::Boundary(Witness { direction: VariationDirection::conformal(c.source, c.target, mu), value: 0.0 })
        } else {
            Cell::Fail(Witness { direction: VariationDirection::conformal(c.source, c.target, mu), value: 0.0 })
        };
        let direction = VariationDirection::conformal(c.source, c.target, mu);
        let Some((value, mag)) = self.evaluate(&direction) else {
            self.cells.push(match theorem {
                Cell::Pass(_) => Cell::Pass(None),
                _ => Cell::Unresolved(format!("no closed form for f on factor {} scaling factor {}", c.source, c.target), None),
            });
            return;
        };
        let zero = REL_TOL * mag.max(f64::MIN_POSITIVE);
        let witness = Witness { direction, value };
        let cell = if value < -zero {
            if matches!(theorem, Cell::Pass(_)) {
                self.notes.push(format!(
                    "form is negative ({value:e}) for f on factor {} scaling factor {} although the eigenvalue criterion is met",
                    c.source, c.target
                ));
            }
            Cell::Fail(witness)
        } else if value.abs() <= zero {
            Cell::Boundary(witness)
        } else {
            match theorem {
                Cell::Pass(_) => Cell::Pass(Some(value)),
                _ => Cell::Unresolved(
                    format!(
                        "eigenvalue threshold fails for f on factor {} scaling factor {} but the form is positive ({value:e})",
                        c.source, c.target
                    ),
                    Some(value),
                ),
            }
        };
        self.cells.push(cell);
    }

    fn blanket(&mut self, b: Blanket) {
        let f = &self.product.factors[b.source];
        let mu = f.mu_fn.unwrap_or(b.fallback);
        if f.mu_fn.is_none() {
            self.notes.push(format!(
                "witness on factor {} evaluated at the eigenvalue lower bound {mu}; negative for every eigenvalue",
                b.source
            ));
        }
        let direction = VariationDirection::conformal(b.source, b.target, mu);
        self.cells.push(match self.evaluate(&direction) {
            Some((value, _)) if value < 0.0 => Cell::Fail(Witness { direction, value }),
            Some((value, _)) => Cell::Unresolved(format!("expected a negative form, found {value:e}"), Some(value)),
            None => Cell::Unresolved("no closed form for the blanket witness".into(), None),
        });
    }

    fn finish(self) -> StabilityVerdict {
        let mut witnesses_fail = Vec::new();
        let mut witnesses_edge = Vec::new();
        let mut missing = Vec::new();
        let mut notes = self.notes;
        let mut unresolved = false;
        let mut margin: Option<f64> = None;
        let mut track = |v: f64| margin = Some(margin.map_or(v, |m: f64| m.min(v)));
        for c in self.cells {
            match c {
                Cell::Pass(v) => v.into_iter().for_each(&mut track),
                Cell::Fail(w) => {
                    track(w.value);
                    witnesses_fail.push(w);
                }
                Cell::Boundary(w) => {
                    track(w.value);
                    witnesses_edge.push(w);
                }
                Cell::Missing(m) => missing.push(m),
                Cell::Unresolved(n, v) => {
                    v.into_iter().for_each(&mut track);
                    unresolved = true;
                    notes.push(n);
                }
            }
        }
        let (status, witnesses) = if !witnesses_fail.is_empty() {
            (StabilityStatus::Unstable, witnesses_fail)
        } else if unresolved || !missing.is_empty() {
            (StabilityStatus::Indeterminate, witnesses_edge)
        } else if !witnesses_edge.is_empty() {
            (StabilityStatus::Marginal, witnesses_edge)
        } else {
            (StabilityStatus::Stable, Vec::new())
        };
        StabilityVerdict { functional: self.functional, status, witnesses, assumptions: self.assumptions, margin, missing, notes }
    }
}

fn two_factor_dims_ok(product: &ProductSpace) -> bool {
    product.factors.len() == 2 && product.factors.iter().all(|f| f.dim >= 3)
}

/// Conformal-direction conditions of the warped-product Ric analysis.
fn warped_conditions(b: &mut Builder, case: SignCase) -> Result<()> {
    let f = &b.product.factors;
    match case {
        SignCase::Equal(l) if l > 0.0 => {
            for j in 0..2 {
                b.condition(Condition { source: j, target: 1 - j, threshold: f64::NEG_INFINITY, scale: l });
            }
        }
        SignCase::Equal(l) => {
            let dims = [f[0].dim, f[1].dim];
            for j in 0..2 {
                let threshold = sf::threshold_c(dims[1 - j])?;
                b.condition(Condition { source: j, target: 1 - j, threshold, scale: l.abs() });
            }
        }
        SignCase::Opposite { positive, lambda } => {
            let neg = 1 - positive;
            let threshold = sf::opposite_threshold(f[positive].dim)?;
            b.condition(Condition { source: neg, target: positive, threshold, scale: lambda });
            b.condition(Condition { source: positive, target: neg, threshold: f64::NEG_INFINITY, scale: lambda });
        }
    }
    Ok(())
}

fn ric_precheck(product: &ProductSpace, functional: FunctionalId) -> Option<StabilityVerdict> {
    if !two_factor_dims_ok(product) {
        return Some(StabilityVerdict::bare(
            functional,
            StabilityStatus::Indeterminate,
            "warped-product analysis covers two factors of dimension at least 3",
        ));
    }
    match product.sign_case() {
        None => Some(StabilityVerdict::bare(functional, StabilityStatus::NotCritical, "critical for Ric only when |λ_0| = |λ_1|")),
        Some(SignCase::Equal(l)) if l == 0.0 => {
            Some(StabilityVerdict::bare(functional, StabilityStatus::Indeterminate, "Ricci-flat products are not covered"))
        }
        _ => None,
    }
}

/// Ric restricted to doubly warped product directions.
pub fn classify_warped(product: &ProductSpace) -> Result<StabilityVerdict> {
    product.validate()?;
    if let Some(v) = ric_precheck(product, FunctionalId::Ric) {
        return Ok(v);
    }
    let case = product.sign_case().expect("checked");
    let mut b = Builder::new(FunctionalId::Ric, product);
    warped_conditions(&mut b, case)?;
    Ok(b.finish())
}

fn rescale_for_ric(product: &ProductSpace, notes: &mut Vec<String>) -> ProductSpace {
    let (l0, l1) = product.lambdas();
    if product.factors.len() != 2 || product.sign_case().is_some() || l0 == 0.0 || l1 == 0.0 {
        return product.clone();
    }
    let c = l1.abs() / l0.abs();
    notes.push(format!("factor 1 metric rescaled by {c} so that |λ_1| = |λ_0|"));
    ProductSpace::pair(product.factors[0].clone(), product.factors[1].rescaled(c))
}

fn classify_ric(product: &ProductSpace, opts: &ClassifyOptions, functional: FunctionalId) -> Result<StabilityVerdict> {
    let mut pre_notes = Vec::new();
    let rescaled;
    let product = if opts.auto_rescale {
        rescaled = rescale_for_ric(product, &mut pre_notes);
        &rescaled
    } else {
        product
    };
    if product.factors.len() > 2 {
        return Ok(classify_multi(product, functional));
    }
    if let Some(mut v) = ric_precheck(product, functional) {
        v.notes.splice(0..0, pre_notes);
        return Ok(v);
    }
    let case = product.sign_case().expect("checked");
    let mut b = Builder::new(functional, product);
    b.notes = pre_notes;
    for (k, f) in product.factors.iter().enumerate() {
        let (s, p) = factor_ric_status(f);
        b.factor(k, "ric_stable", s, p);
    }
    warped_conditions(&mut b, case)?;
    Ok(b.finish())
}

/// Products of three or more factors: only equal positive Einstein constants.
fn classify_multi(product: &ProductSpace, functional: FunctionalId) -> StabilityVerdict {
    let l0 = product.factors[0].einstein_const;
    let equal = l0 > 0.0 && product.factors.iter().all(|f| approx_eq(f.einstein_const, l0, REL_TOL));
    if !equal || product.factors.iter().any(|f| f.dim < 3) {
        return StabilityVerdict::bare(
            functional,
            StabilityStatus::Indeterminate,
            "products of more than two factors are classified only for equal positive Einstein constants",
        );
    }
    let mut b = Builder::new(functional, product);
    for (k, f) in product.factors.iter().enumerate() {
        let (s, p) = factor_ric_status(f);
        b.factor(k, "ric_stable", s, p);
    }
    b.notes.push("iterated pairing of Einstein products with equal positive constants".into());
    b.finish()
}

fn classify_ft(product: &ProductSpace, t: f64, opts: &ClassifyOptions) -> Result<StabilityVerdict> {
    let functional = FunctionalId::Ft { t };
    if t == 0.0 {
        let mut v = classify_ric(product, opts, functional)?;
        v.notes.push("F_0 coincides with Ric".into());
        return Ok(v);
    }
    if product.factors.len() != 2 {
        return Ok(StabilityVerdict::bare(functional, StabilityStatus::Indeterminate, "F_t is classified for two factors only"));
    }
    if !product.is_ft_critical(t) {
        return Ok(StabilityVerdict::bare(
            functional,
            StabilityStatus::NotCritical,
            "critical for F_t (t ≠ 0) only when |λ_0| = |λ_1| and, for opposite signs, n_0 = n_1",
        ));
    }
    let Some(SignCase::Opposite { positive, lambda }) = product.sign_case() else {
        return Ok(StabilityVerdict::bare(
            functional,
            StabilityStatus::Indeterminate,
            "F_t with t ≠ 0 is classified for Einstein constants of opposite signs only",
        ));
    };
    let n = product.factors[0].dim;
    if n < 3 {
        return Ok(StabilityVerdict::bare(functional, StabilityStatus::Indeterminate, "factor dimension below 3"));
    }
    let neg = 1 - positive;
    let mut b = Builder::new(functional, product);
    for (k, f) in product.factors.iter().enumerate() {
        b.factor(k, &format!("ft_stable(t={t})"), tri_to_status(f.ft_fact(t)), Provenance::UserSupplied);
    }
    let nf = n as f64;
    let c = sf::ft_coefficients(n, t)?;
    let t1 = -(nf + 1.0) / (4.0 * nf);
    let t2 = -(9.0 * nf * nf - 20.0 * nf - 28.0) / (4.0 * nf * (8.0 * nf - 7.0));
    let t3 = -11.0 / (16.0 * nf);
    let root = |bi: f64| if c.d >= 0.0 { (-bi + c.d.sqrt()) / (2.0 * c.a) } else { f64::NEG_INFINITY };
    let on_negative = |thr| Condition { source: neg, target: positive, threshold: thr, scale: lambda };
    let on_positive = |thr| Condition { source: positive, target: neg, threshold: thr, scale: lambda };
    let free = f64::NEG_INFINITY;
    if t <= t1 {
        b.blanket(Blanket { source: positive, target: neg, fallback: nf * lambda / (nf - 1.0) });
        b.condition(on_negative(free));
    } else if n == 3 || (n <= 21 && t < t2) {
        b.condition(on_negative(free));
        b.condition(on_positive(free));
    } else if n == 4 || t >= t3 {
        b.condition(on_negative(root(c.b0)));
        b.condition(on_positive(free));
    } else {
        b.condition(on_negative(root(c.b0)));
        b.condition(on_positive(root(c.b1)));
    }
    Ok(b.finish())
}

/// Constant-curvature pair (sphere-like index, hyperbolic-like index, |K|).
fn space_form_pair(product: &ProductSpace) -> Option<(usize, usize, f64)> {
    if product.factors.len() != 2 {
        return None;
    }
    let k: Vec<f64> = product
        .factors
        .iter()
        .map(|f| if f.is_constant_curvature() { f.sectional.unwrap_or(0.0) } else { 0.0 })
        .collect();
    let pos = if k[0] > 0.0 && k[1] < 0.0 {
        0
    } else if k[1] > 0.0 && k[0] < 0.0 {
        1
    } else {
        return None;
    };
    approx_eq(k[pos], -k[1 - pos], REL_TOL).then_some((pos, 1 - pos, k[pos]))
}

fn classify_r(product: &ProductSpace) -> Result<StabilityVerdict> {
    let functional = FunctionalId::R;
    let scope = "the R criterion covers S^n × H^n with curvatures ±K only";
    let Some((pos, neg, k)) = space_form_pair(product) else {
        return Ok(StabilityVerdict::bare(functional, StabilityStatus::Indeterminate, scope));
    };
    let n = product.factors[pos].dim;
    if n != product.factors[neg].dim || n < 3 {
        return Ok(StabilityVerdict::bare(functional, StabilityStatus::Indeterminate, scope));
    }
    let nf = n as f64;
    let threshold = if n <= 4 { f64::NEG_INFINITY } else { ((nf - 1.0) * (nf - 4.0)).sqrt() };
    let mut b = Builder::new(functional, product);
    b.condition(Condition { source: neg, target: pos, threshold, scale: k });
    b.condition(Condition { source: pos, target: neg, threshold: f64::NEG_INFINITY, scale: k });
    Ok(b.finish())
}

fn classify_weyl(product: &ProductSpace, functional: FunctionalId) -> StabilityVerdict {
    if product.factors.len() == 2 && product.factors.iter().any(|f| f.dim == 1) {
        return StabilityVerdict::bare(
            functional,
            StabilityStatus::Indeterminate,
            "circle factor: the mixed TT form is positive but no stability theorem covers this case",
        );
    }
    let Some((pos, neg, _)) = space_form_pair(product) else {
        return StabilityVerdict::bare(
            functional,
            StabilityStatus::Indeterminate,
            "Weyl functionals are classified on S^k × H^(n−k) with curvatures ±K only",
        );
    };
    let (k, m) = (product.factors[pos].dim, product.factors[neg].dim);
    if k < 3 || m < 3 || k + m < 6 {
        return StabilityVerdict::bare(functional, StabilityStatus::Indeterminate, "factor dimensions below 3");
    }
    StabilityVerdict::bare(functional, StabilityStatus::Stable, "conformally flat S^k × H^(n−k), k, n−k ≥ 3")
}

/// Verdict for `functional` at `product`.
pub fn classify(functional: FunctionalId, product: &ProductSpace, opts: &ClassifyOptions) -> Result<StabilityVerdict> {
    product.validate()?;
    match functional {
        FunctionalId::Ric => classify_ric(product, opts, functional),
        FunctionalId::Ft { t } => classify_ft(product, t, opts),
        FunctionalId::R => classify_r(product),
        FunctionalId::W2 | FunctionalId::WnHalf => Ok(classify_weyl(product, functional)),
        FunctionalId::S => Ok(if product.factors.len() == 2 && !product.is_s_critical() {
            StabilityVerdict::bare(functional, StabilityStatus::NotCritical, "critical for S only when Einstein or scalar-flat")
        } else {
            StabilityVerdict::bare(functional, StabilityStatus::Indeterminate, "no stability theorem for S")
        }),
    }
}

/// Product family swept by [`region_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanFamily {
    /// S^{n0} rescaled to λ = n1 − 1 times H^{n1} (K = −1), μ = mu_ratio·(n1 − 1).
    SphereHyperbolic,
    /// H^{n0} × H^{n1} rescaled to λ = −1, both with μ/|λ| = mu_ratio.
    HyperbolicPair,
    /// Abstract λ = 1 and λ = −1 factors flagged Ric- and F_t-stable; μ_1 = mu_ratio.
    OppositeAbstract,
    /// S^{n0} (K = 1) × H^{n1} (K = −1) with μ = mu_ratio.
    SpaceFormPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    pub family: ScanFamily,
    pub n0: Vec<u32>,
    pub n1: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_ratio: Option<Vec<f64>>,
    /// Overrides the F_t parameter of the scanned functional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n0: u32,
    pub n1: u32,
    pub mu_ratio: Option<f64>,
    pub t: Option<f64>,
    pub status: Option<StabilityStatus>,
    pub error: Option<String>,
}

impl ScanFamily {
    pub fn product(self, n0: u32, n1: u32, mu_ratio: Option<f64>) -> ProductSpace {
        match self {
            ScanFamily::SphereHyperbolic => {
                let lam = n1 as f64 - 1.0;
                let r = ((n0 as f64 - 1.0) / lam).sqrt();
                ProductSpace::pair(
                    EinsteinFactor::sphere(n0, r),
                    EinsteinFactor::hyperbolic(n1, -1.0, mu_ratio.map(|x| x * lam)),
                )
            }
            ScanFamily::HyperbolicPair => {
                let h = |n: u32| {
                    let k = -1.0 / (n as f64 - 1.0);
                    EinsteinFactor::hyperbolic(n, k, mu_ratio)
                };
                ProductSpace::pair(h(n0), h(n1))
            }
            ScanFamily::OppositeAbstract => {
                let stable = |f: EinsteinFactor| {
                    f.with_ric_stable(TriState::Yes).with_ft_rule(sf::FtRule::all(TriState::Yes))
                };
                let mut neg = stable(EinsteinFactor::abstract_einstein(n1, -1.0));
                neg.mu_fn = mu_ratio;
                ProductSpace::pair(stable(EinsteinFactor::abstract_einstein(n0, 1.0)), neg)
            }
            ScanFamily::SpaceFormPair => ProductSpace::pair(
                EinsteinFactor::space_form(n0, 1.0).with_mu_fn(n0 as f64),
                EinsteinFactor::hyperbolic(n1, -1.0, mu_ratio),
            ),
        }
    }
}

/// One verdict per grid point, rows in grid order (n0, n1, mu_ratio, t; last fastest).
pub fn region_scan(functional: FunctionalId, grid: &ScanGrid, opts: &ClassifyOptions) -> Vec<ScanRow> {
    let mus: Vec<Option<f64>> = grid.mu_ratio.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let ts: Vec<Option<f64>> = grid.t.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let mut points = Vec::new();
    for &n0 in &grid.n0 {
        for &n1 in &grid.n1 {
            for &mu in &mus {
                for &t in &ts {
                    points.push((n0, n1, mu, t));
                }
            }
        }
    }
    points
        .into_par_iter()
        .map(|(n0, n1, mu, t)| {
            let f = match (functional, t) {
                (FunctionalId::Ft { .. }, Some(t)) => FunctionalId::Ft { t },
                _ => functional,
            };
            let t_shown = match f {
                FunctionalId::Ft { t } => Some(t),
                _ => None,
            };
            let product = grid.family.product(n0, n1, mu);
            let (status, error) = match classify(f, &product, opts) {
                Ok(v) => (Some(v.status), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ScanRow { n0, n1, mu_ratio: mu, t: t_shown, status, error }
        })
        .collect()
}

/// Example family with its expected verdict and sample members inside the
/// family's parameter predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub family: String,
    pub predicate: String,
    pub functional: FunctionalId,
    pub expected: StabilityStatus,
    pub samples: Vec<ProductSpace>,
}

fn sphere_lambda(n: u32, lambda: f64) -> EinsteinFactor {
    EinsteinFactor::sphere(n, ((n as f64 - 1.0) / lambda).sqrt())
}

fn hyperbolic_lambda(n: u32, lambda: f64, mu_ratio: Option<f64>) -> EinsteinFactor {
    EinsteinFactor::hyperbolic(n, -lambda / (n as f64 - 1.0), mu_ratio.map(|x| x * lambda))
}

fn entry(id: &str, family: &str, predicate: &str, expected: StabilityStatus, samples: Vec<ProductSpace>) -> CatalogEntry {
    CatalogEntry {
        id: id.into(),
        family: family.into(),
        predicate: predicate.into(),
        functional: FunctionalId::Ric,
        expected,
        samples,
    }
}

/// Known stable and unstable Ric families among products of Einstein manifolds.
pub fn catalog() -> Vec<CatalogEntry> {
    use StabilityStatus::{Stable, Unstable};
    let s = sphere_lambda;
    let h = hyperbolic_lambda;
    let cp = |m: u32| EinsteinFactor::complex_projective(m, 1.0);
    let pair = ProductSpace::pair;
    let sh_window = |n: u32, m: u32| {
        let lo = 2.0 * (m as f64 - 4.0) / m as f64;
        let hi = sf::opposite_threshold(n).expect("n ≥ 3");
        0.5 * (lo + hi)
    };
    let sh_stable = |n: u32, m: u32| {
        let lo = 2.0 * (m as f64 - 4.0) / m as f64;
        1.05 * lo.max(sf::opposite_threshold(n).expect("n ≥ 3"))
    };
    let hh_stable = |n: u32, m: u32| 1.05 * sf::threshold_c(m).unwrap().max(2.0 - 8.0 / n as f64);
    vec![
        entry(
            "stable-1",
            "S^{n_1} × … × S^{n_k}",
            "n_i ≥ 3",
            Stable,
            vec![
                pair(s(3, 1.0), s(3, 1.0)),
                pair(s(3, 1.0), s(6, 1.0)),
                ProductSpace::new(vec![s(3, 1.0), s(4, 1.0), s(5, 1.0)]),
            ],
        ),
        entry(
            "stable-2",
            "CP^{n_1} × … × CP^{n_k}",
            "n_i ≥ 2",
            Stable,
            vec![pair(cp(2), cp(2)), pair(cp(2), cp(3)), ProductSpace::new(vec![cp(2), cp(3), cp(4)])],
        ),
        entry(
            "stable-3",
            "H_1 × H_2 compact hyperbolic",
            "dim H_i ∈ {3, 4}",
            Stable,
            vec![pair(h(3, 1.0, None), h(3, 1.0, None)), pair(h(3, 1.0, None), h(4, 1.0, None)), pair(h(4, 1.0, None), h(4, 1.0, None))],
        ),
        entry(
            "stable-4",
            "products of the families above",
            "sphere of dimension 3 with hyperbolic dimension 3 or 4, or positive factors",
            Stable,
            vec![
                pair(s(3, 1.0), cp(2)),
                ProductSpace::new(vec![s(3, 1.0), s(4, 1.0), cp(2)]),
                pair(s(3, 2.0), h(3, 2.0, None)),
                pair(s(3, 3.0), h(4, 3.0, None)),
            ],
        ),
        entry(
            "stable-5",
            "H^n × H^m compact hyperbolic",
            "n, m ≥ 4, μ_1/(n−1) > max{c(m), 2 − 8/n}, μ_2/(m−1) > max{c(n), 2 − 8/m}",
            Stable,
            vec![
                pair(h(5, 1.0, Some(hh_stable(5, 5))), h(5, 1.0, Some(hh_stable(5, 5)))),
                pair(h(5, 1.0, Some(hh_stable(5, 7))), h(7, 1.0, Some(hh_stable(7, 5)))),
                pair(h(4, 1.0, Some(hh_stable(4, 9))), h(9, 1.0, Some(hh_stable(9, 4)))),
            ],
        ),
        entry(
            "stable-6",
            "S^n × H^m",
            "n, m ≥ 3, one above 4, μ/(m−1) > max{2(m−4)/m, ((n+2)+√(9n²−20n−28))/(2(n+1))}",
            Stable,
            vec![
                pair(s(5, 4.0), h(5, 4.0, Some(sh_stable(5, 5)))),
                pair(s(6, 2.0), h(3, 2.0, Some(sh_stable(6, 3)))),
                pair(s(3, 7.0), h(8, 7.0, Some(sh_stable(3, 8)))),
            ],
        ),
        entry(
            "stable-7",
            "S^n × H^m",
            "n, m ≥ 3, μ > 2(m−1)",
            Stable,
            vec![
                pair(s(5, 4.0), h(5, 4.0, Some(2.01))),
                pair(s(12, 6.0), h(7, 6.0, Some(2.5))),
                pair(s(30, 3.0), h(4, 3.0, Some(2.0001))),
            ],
        ),
        entry(
            "unstable-1",
            "H^n × H^m with factor-stable hyperbolic manifolds",
            "n, m ≥ 4, 2 − 8/n < μ_1/(n−1) < c(m)",
            Unstable,
            vec![
                pair(h(5, 1.0, Some(0.45)), h(5, 1.0, Some(2.5))),
                pair(h(6, 1.0, Some(0.8)), h(9, 1.0, Some(2.5))),
            ],
        ),
        entry(
            "unstable-2",
            "S^n × H^m with factor-stable H^m",
            "2(m−4)/m < μ/(m−1) < ((n+2)+√(9n²−20n−28))/(2(n+1))",
            Unstable,
            vec![
                pair(s(5, 4.0), h(5, 4.0, Some(sh_window(5, 5)))),
                pair(s(8, 5.0), h(6, 5.0, Some(sh_window(8, 6)))),
                pair(s(20, 3.0), h(4, 3.0, Some(sh_window(20, 4)))),
            ],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ClassifyOptions {
        ClassifyOptions::default()
    }

    fn status(f: FunctionalId, p: &ProductSpace) -> StabilityStatus {
        classify(f, p, &opts()).unwrap().status
    }

    fn sphere_hyperbolic(n: u32, m: u32, ratio: f64) -> ProductSpace {
        ScanFamily::SphereHyperbolic.product(n, m, Some(ratio))
    }

    #[test]
    fn factor_table() {
        assert_eq!(factor_ric_stability(&EinsteinFactor::hyperbolic(4, -1.0, None)), TriState::Yes);
        assert_eq!(factor_ric_stability(&EinsteinFactor::hyperbolic(6, -1.0, Some(3.0))), TriState::No);
        assert_eq!(factor_ric_stability(&EinsteinFactor::hyperbolic(6, -1.0, Some(3.4))), TriState::Yes);
        assert_eq!(factor_ric_stability(&EinsteinFactor::hyperbolic(6, -1.0, None)), TriState::Unknown);
        assert_eq!(factor_ric_stability(&EinsteinFactor::sphere(7, 1.0)), TriState::Yes);
        assert_eq!(factor_ric_stability(&EinsteinFactor::complex_projective(2, 6.0)), TriState::Yes);
        let a = EinsteinFactor::abstract_einstein(5, 1.0).with_ric_stable(TriState::No);
        assert_eq!(factor_ric_stability(&a), TriState::No);
    }

    #[test]
    fn warped_examples() {
        let s3s3 = ProductSpace::pair(EinsteinFactor::sphere(3, 1.0), EinsteinFactor::sphere(3, 1.0));
        assert_eq!(classify_warped(&s3s3).unwrap().status, StabilityStatus::Stable);
        assert_eq!(classify_warped(&sphere_hyperbolic(5, 5, 2.5)).unwrap().status, StabilityStatus::Stable);
        let v = classify_warped(&sphere_hyperbolic(5, 5, 1.0)).unwrap();
        assert_eq!(v.status, StabilityStatus::Unstable);
        assert_eq!(v.witnesses.len(), 1);
        let w = &v.witnesses[0];
        assert!(matches!(w.direction, VariationDirection::ConformalScale { source_factor: 1, target_factor: 0, .. }));
        assert!(w.value < 0.0);
        let flat = ProductSpace::pair(EinsteinFactor::sphere(3, 1.0), EinsteinFactor::sphere(4, 1.0));
        assert_eq!(classify_warped(&flat).unwrap().status, StabilityStatus::NotCritical);
    }

    #[test]
    fn equal_negative_uses_cross_coupling() {
        // f on the 3-dimensional factor scaling the 5-dimensional one is tested against c(5) = 0.5;
        // the reverse direction meets the vacuous c(3)
        let p = ProductSpace::pair(EinsteinFactor::hyperbolic(5, -0.25, None), EinsteinFactor::hyperbolic(3, -0.5, Some(0.6)));
        assert_eq!(classify_warped(&p).unwrap().status, StabilityStatus::Stable);
        let q = ProductSpace::pair(EinsteinFactor::hyperbolic(3, -0.5, Some(0.3)), EinsteinFactor::hyperbolic(5, -0.25, None));
        assert_eq!(classify_warped(&q).unwrap().status, StabilityStatus::Unstable);
        let r = ProductSpace::pair(EinsteinFactor::hyperbolic(5, -0.25, Some(0.55)), EinsteinFactor::hyperbolic(5, -0.25, None));
        let v = classify_warped(&r).unwrap();
        assert_eq!(v.status, StabilityStatus::Indeterminate);
        assert_eq!(v.missing.len(), 1);
    }

    #[test]
    fn classify_examples() {
        let s3h4 = ProductSpace::pair(EinsteinFactor::sphere(3, (2.0f64 / 3.0).sqrt()), EinsteinFactor::hyperbolic(4, -1.0, Some(0.2)));
        assert_eq!(status(FunctionalId::Ric, &s3h4), StabilityStatus::Stable);
        let opp = ScanFamily::OppositeAbstract.product(3, 3, None);
        assert_eq!(status(FunctionalId::Ft { t: -0.2 }, &opp), StabilityStatus::Stable);
        let s6h6 = ProductSpace::pair(EinsteinFactor::space_form(6, 1.0), EinsteinFactor::hyperbolic(6, -1.0, Some(3.0)));
        let v = classify(FunctionalId::R, &s6h6, &opts()).unwrap();
        assert_eq!(v.status, StabilityStatus::Unstable);
        assert!(v.witnesses[0].value < 0.0);
        let s6h6 = ProductSpace::pair(EinsteinFactor::space_form(6, 1.0), EinsteinFactor::hyperbolic(6, -1.0, Some(3.2)));
        assert_eq!(status(FunctionalId::R, &s6h6), StabilityStatus::Stable);
        let s4h4 = ProductSpace::pair(EinsteinFactor::space_form(4, 1.0), EinsteinFactor::hyperbolic(4, -1.0, None));
        assert_eq!(status(FunctionalId::R, &s4h4), StabilityStatus::Stable);
    }

    #[test]
    fn rescaling_is_opt_in() {
        let p = ProductSpace::pair(EinsteinFactor::sphere(3, 1.0), EinsteinFactor::hyperbolic(4, -1.0, None));
        assert_eq!(status(FunctionalId::Ric, &p), StabilityStatus::NotCritical);
        let v = classify(FunctionalId::Ric, &p, &ClassifyOptions { auto_rescale: true }).unwrap();
        assert_eq!(v.status, StabilityStatus::Stable);
        assert!(v.notes[0].contains("rescaled"));
    }

    #[test]
    fn boundaries_are_marginal() {
        let thr = sf::opposite_threshold(5).unwrap();
        let v = classify(FunctionalId::Ric, &sphere_hyperbolic(5, 5, thr), &opts()).unwrap();
        assert_eq!(v.status, StabilityStatus::Marginal);
        assert!(v.witnesses.iter().all(|w| w.value.abs() < 1e-9));
        let p = ScanFamily::HyperbolicPair.product(5, 5, Some(0.5));
        assert_eq!(status(FunctionalId::Ric, &p), StabilityStatus::Marginal);
        let h = ScanFamily::SphereHyperbolic.product(3, 6, Some(2.0 / 3.0));
        assert_eq!(status(FunctionalId::Ric, &h), StabilityStatus::Marginal);
    }

    #[test]
    fn ft_case_tree() {
        let opp = |n: u32, mu: Option<f64>| ScanFamily::OppositeAbstract.product(n, n, mu);
        for t in [-0.33, -0.1, 0.2, 0.33] {
            assert_eq!(status(FunctionalId::Ft { t }, &opp(3, None)), StabilityStatus::Stable, "t = {t}");
        }
        for t in [-1.0 / 3.0, -0.4, -2.0] {
            assert_eq!(status(FunctionalId::Ft { t }, &opp(3, None)), StabilityStatus::Unstable, "t = {t}");
        }
        // inside the D < 0 window for n = 4: unconditional
        assert_eq!(status(FunctionalId::Ft { t: -0.15 }, &opp(4, None)), StabilityStatus::Stable);
        // above it the negative factor's eigenvalue matters
        let v = classify(FunctionalId::Ft { t: 0.0 + 1e-3 }, &opp(4, None), &opts()).unwrap();
        assert_eq!(v.status, StabilityStatus::Indeterminate);
        assert_eq!(status(FunctionalId::Ft { t: 1e-3 }, &opp(4, Some(5.0))), StabilityStatus::Stable);
        // n ≥ 22 below −(n+1)/(4n)
        assert_eq!(status(FunctionalId::Ft { t: -0.3 }, &opp(22, Some(5.0))), StabilityStatus::Unstable);
        // factor facts are required
        let mut p = opp(3, None);
        p.factors[1].ft_stable.clear();
        assert_eq!(status(FunctionalId::Ft { t: 0.1 }, &p), StabilityStatus::Indeterminate);
        p.factors[1] = p.factors[1].clone().with_ft_rule(sf::FtRule::all(TriState::No));
        assert_eq!(status(FunctionalId::Ft { t: 0.1 }, &p), StabilityStatus::Unstable);
        // unequal dimensions are not critical for t ≠ 0
        let q = ScanFamily::OppositeAbstract.product(3, 4, None);
        assert_eq!(status(FunctionalId::Ft { t: 0.1 }, &q), StabilityStatus::NotCritical);
    }

    #[test]
    fn known_eigenvalue_overrides_vacuous_threshold() {
        // below −7/48 the n = 3 branch polynomial has a positive root
        let v = classify(FunctionalId::Ft { t: -0.3 }, &ScanFamily::OppositeAbstract.product(3, 3, Some(0.1)), &opts()).unwrap();
        assert_eq!(v.status, StabilityStatus::Unstable);
        assert!(!v.notes.is_empty());
        let v = classify(FunctionalId::Ft { t: -0.1 }, &ScanFamily::OppositeAbstract.product(3, 3, Some(0.1)), &opts()).unwrap();
        assert_eq!(v.status, StabilityStatus::Stable);
    }

    #[test]
    fn weyl_and_scalar() {
        let s3h3 = ProductSpace::pair(EinsteinFactor::space_form(3, 1.0), EinsteinFactor::hyperbolic(3, -1.0, None));
        assert_eq!(status(FunctionalId::W2, &s3h3), StabilityStatus::Stable);
        assert_eq!(status(FunctionalId::WnHalf, &s3h3), StabilityStatus::Stable);
        let circle = ProductSpace::pair(EinsteinFactor::space_form(5, 1.0), EinsteinFactor::space_form(1, 0.0));
        assert_eq!(status(FunctionalId::W2, &circle), StabilityStatus::Indeterminate);
        let s2h4 = ProductSpace::pair(EinsteinFactor::space_form(2, 1.0), EinsteinFactor::hyperbolic(4, -1.0, None));
        assert_eq!(status(FunctionalId::W2, &s2h4), StabilityStatus::Indeterminate);
        let s3s4 = ProductSpace::pair(EinsteinFactor::sphere(3, 1.0), EinsteinFactor::sphere(4, 1.0));
        assert_eq!(status(FunctionalId::S, &s3s4), StabilityStatus::NotCritical);
        assert_eq!(status(FunctionalId::S, &s3h3), StabilityStatus::Indeterminate);
    }

    #[test]
    fn multi_factor_products() {
        let hyp = ProductSpace::new(vec![
            EinsteinFactor::hyperbolic(3, -0.5, None),
            EinsteinFactor::hyperbolic(3, -0.5, None),
            EinsteinFactor::hyperbolic(3, -0.5, None),
        ]);
        assert_eq!(status(FunctionalId::Ric, &hyp), StabilityStatus::Indeterminate);
        let bad = ProductSpace::new(vec![
            sphere_lambda(3, 1.0),
            sphere_lambda(4, 1.0),
            EinsteinFactor::abstract_einstein(5, 1.0).with_ric_stable(TriState::No),
        ]);
        let v = classify(FunctionalId::Ric, &bad, &opts()).unwrap();
        assert_eq!(v.status, StabilityStatus::Unstable);
        assert_eq!(v.witnesses[0].value, UNSTABLE_FACTOR_SENTINEL);
    }

    #[test]
    fn region_scan_examples() {
        let grid = ScanGrid {
            family: ScanFamily::SphereHyperbolic,
            n0: vec![5],
            n1: vec![5],
            mu_ratio: Some((1..=6).map(|k| 0.5 * k as f64).collect()),
            t: None,
        };
        let rows = region_scan(FunctionalId::Ric, &grid, &opts());
        let st: Vec<_> = rows.iter().map(|r| r.status.unwrap()).collect();
        use StabilityStatus::*;
        assert_eq!(st, vec![Unstable, Unstable, Stable, Stable, Stable, Stable]);
        let grid = ScanGrid {
            family: ScanFamily::OppositeAbstract,
            n0: vec![3],
            n1: vec![3],
            mu_ratio: None,
            t: Some(vec![-0.4, -0.33, 0.0]),
        };
        let rows = region_scan(FunctionalId::Ft { t: 0.0 }, &grid, &opts());
        let st: Vec<_> = rows.iter().map(|r| r.status.unwrap()).collect();
        assert_eq!(st, vec![Unstable, Stable, Stable]);
        assert_eq!(rows[1].t, Some(-0.33));
        let empty = ScanGrid { family: ScanFamily::HyperbolicPair, n0: vec![], n1: vec![3], mu_ratio: None, t: None };
        assert!(region_scan(FunctionalId::Ric, &empty, &opts()).is_empty());
    }

    #[test]
    fn region_scan_reports_errors_per_cell() {
        let grid = ScanGrid { family: ScanFamily::HyperbolicPair, n0: vec![0, 3], n1: vec![3], mu_ratio: None, t: None };
        let rows = region_scan(FunctionalId::Ric, &grid, &opts());
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_some() && rows[0].status.is_none());
        assert_eq!(rows[1].status, Some(StabilityStatus::Stable));
    }

    #[test]
    fn catalog_is_reproduced() {
        let cat = catalog();
        assert_eq!(cat.iter().filter(|e| e.expected == StabilityStatus::Stable).count(), 7);
        assert_eq!(cat.iter().filter(|e| e.expected == StabilityStatus::Unstable).count(), 2);
        for e in &cat {
            for p in &e.samples {
                assert_eq!(classify(e.functional, p, &opts()).unwrap().status, e.expected, "{}", e.id);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn family() -> impl Strategy<Value = ScanFamily> {
            prop_oneof![Just(ScanFamily::SphereHyperbolic), Just(ScanFamily::HyperbolicPair)]
        }

        proptest! {
            #[test]
            fn stability_is_monotone_in_mu(fam in family(), n0 in 3u32..12, n1 in 3u32..12, mut ratios in prop::collection::vec(0.01f64..4.0, 2..8)) {
                ratios.sort_by(f64::total_cmp);
                let mut seen_stable = false;
                for r in ratios {
                    let s = status(FunctionalId::Ric, &fam.product(n0, n1, Some(r)));
                    if seen_stable {
                        prop_assert_eq!(s, StabilityStatus::Stable);
                    }
                    seen_stable |= s == StabilityStatus::Stable;
                }
            }

            #[test]
            fn unstable_witnesses_are_negative(fam in family(), n0 in 3u32..12, n1 in 3u32..12, r in 0.01f64..4.0) {
                let p = fam.product(n0, n1, Some(r));
                let v = classify(FunctionalId::Ric, &p, &opts()).unwrap();
                if v.status == StabilityStatus::Unstable {
                    prop_assert!(!v.witnesses.is_empty());
                    for w in &v.witnesses {
                        let value = sf::hessian(FunctionalId::Ric, &p, &w.direction).unwrap().value;
                        prop_assert!(value < 0.0);
                    }
                }
            }

            #[test]
            fn ft_zero_matches_ric(fam in family(), n0 in 3u32..12, n1 in 3u32..12, r in 0.01f64..4.0) {
                let p = fam.product(n0, n1, Some(r));
                prop_assert_eq!(status(FunctionalId::Ft { t: 0.0 }, &p), status(FunctionalId::Ric, &p));
            }

            #[test]
            fn ft_unstable_witnesses_are_negative(n in 3u32..30, t in -1.0f64..0.5, r in 0.01f64..6.0) {
                let p = ScanFamily::OppositeAbstract.product(n, n, Some(r));
                let f = FunctionalId::Ft { t };
                let v = classify(f, &p, &opts()).unwrap();
                if v.status == StabilityStatus::Unstable {
                    for w in &v.witnesses {
                        prop_assert!(sf::hessian(f, &p, &w.direction).unwrap().value < 0.0);
                    }
                }
            }
        }
    }
}
