//! Poles, Riesz projectors, Bromwich inversion and the decomposition
//! `T_t = P_t + Σ_j e^{t z_j}(Π_j + t N_j + … )`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cluster_eigenvalues, identity, real, spectral_norm, CMatrix, CVector, C64, I,
};
use crate::models::{GeneratorModel, SemigroupEvaluator, EIGEN_CONDITION_LIMIT};
use crate::params::AssumptionParams;
use crate::quadrature::{integrate_matrix, Simpson};
use crate::resolvent::{resolvent_matrix, resolvent_solve};

/// Eigenvalues closer than this to a contour are rejected.
pub const CONTOUR_CLEARANCE: f64 = 1e-6;
/// Eigenvalues within this distance of `Re = −λ` make the strip ambiguous.
pub const STRIP_CLEARANCE: f64 = 1e-9;
pub const DEFAULT_CIRCLE_NODES: usize = 128;
pub const DEFAULT_BROMWICH_STEP: f64 = 0.01;
/// Relative threshold for `‖N^m‖` in [`pole_order`].
pub const NILPOTENT_TOL: f64 = 1e-10;

/// Power of the smoothing factor `((Z−c)/(z−c))^n` applied on shifted and
/// curved contours.
const SMOOTHING_POWER: i32 = 8;
/// Target for the truncated tail of a smoothed contour integral.
const CONTOUR_TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContourKind {
    /// `Re z = a > 0`, integrated raw with a fixed step.
    BromwichLine {
        a: f64,
        #[serde(default)]
        b_cut: Option<f64>,
        #[serde(default)]
        step: Option<f64>,
    },
    /// `Re z = −ℓ`.
    ShiftedLine {
        ell: f64,
        #[serde(default)]
        b_cut: Option<f64>,
    },
    /// `ib − min(ε, |b|^{−C12})`. `ε = None` picks half the distance from
    /// the imaginary axis to the nearest eigenvalue in the left half-plane.
    CurvedRapid {
        #[serde(default)]
        epsilon: Option<f64>,
        c12: f64,
        beta: f64,
        #[serde(default)]
        b_cut: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    #[serde(flatten)]
    pub kind: ContourKind,
    /// Trapezoid nodes on each Riesz circle.
    #[serde(default = "default_nodes")]
    pub node_count: usize,
}

fn default_nodes() -> usize {
    DEFAULT_CIRCLE_NODES
}

impl ContourSpec {
    pub fn bromwich(a: f64) -> Self {
        Self::from_kind(ContourKind::BromwichLine {
            a,
            b_cut: None,
            step: None,
        })
    }

    pub fn shifted(ell: f64) -> Self {
        Self::from_kind(ContourKind::ShiftedLine { ell, b_cut: None })
    }

    pub fn curved(epsilon: Option<f64>, c12: f64, beta: f64) -> Self {
        Self::from_kind(ContourKind::CurvedRapid {
            epsilon,
            c12,
            beta,
            b_cut: None,
        })
    }

    fn from_kind(kind: ContourKind) -> Self {
        Self {
            kind,
            node_count: DEFAULT_CIRCLE_NODES,
        }
    }

    pub fn with_b_cut(mut self, cut: f64) -> Self {
        match &mut self.kind {
            ContourKind::BromwichLine { b_cut, .. }
            | ContourKind::ShiftedLine { b_cut, .. }
            | ContourKind::CurvedRapid { b_cut, .. } => *b_cut = Some(cut),
        }
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.node_count = nodes;
        self
    }

    fn b_cut(&self) -> Option<f64> {
        match self.kind {
            ContourKind::BromwichLine { b_cut, .. }
            | ContourKind::ShiftedLine { b_cut, .. }
            | ContourKind::CurvedRapid { b_cut, .. } => b_cut,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ContourKind::BromwichLine { .. } => "bromwich-line",
            ContourKind::ShiftedLine { .. } => "shifted-line",
            ContourKind::CurvedRapid { .. } => "curved-rapid",
        }
    }
}

/// Default cutoff `max(10³, 10/t)`.
pub fn default_b_cut(t: f64) -> f64 {
    1e3_f64.max(10.0 / t)
}

/// A contour parametrized by `b = Im z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum ContourPath {
    Line { re: f64 },
    Curve { epsilon: f64, c12: f64 },
}

impl ContourPath {
    pub fn real_part(&self, b: f64) -> f64 {
        match *self {
            Self::Line { re } => re,
            Self::Curve { epsilon, c12 } => {
                if b == 0.0 {
                    -epsilon
                } else {
                    -epsilon.min(b.abs().powf(-c12))
                }
            }
        }
    }

    pub fn point(&self, b: f64) -> C64 {
        C64::new(self.real_part(b), b)
    }

    /// `dz/db`.
    pub fn tangent(&self, b: f64) -> C64 {
        match *self {
            Self::Line { .. } => I,
            Self::Curve { epsilon, c12 } => {
                if b.abs().powf(-c12) < epsilon {
                    C64::new(c12 * b.signum() * b.abs().powf(-c12 - 1.0), 1.0)
                } else {
                    I
                }
            }
        }
    }

    /// Points where the tangent jumps.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Self::Line { .. } => Vec::new(),
            Self::Curve { epsilon, c12 } => {
                let k = epsilon.powf(-1.0 / c12);
                vec![-k, k]
            }
        }
    }

    /// Horizontal distance from `w` to the contour.
    pub fn distance(&self, w: C64) -> f64 {
        (w.re - self.real_part(w.im)).abs()
    }

    pub fn lies_right(&self, w: C64) -> bool {
        w.re > self.real_part(w.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatedPole {
    pub value: C64,
    pub multiplicity: usize,
}

/// Eigenvalues in the half-plane `Re > −λ`, plus those that break the
/// `|Im| ≤ β` confinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub poles: Vec<LocatedPole>,
    pub violations: Vec<C64>,
}

impl PoleReport {
    pub fn values(&self) -> Vec<C64> {
        self.poles.iter().map(|p| p.value).collect()
    }
}

fn cluster_tol(model: &GeneratorModel) -> f64 {
    1e-6 * model.generator_norm().max(1.0)
}

pub fn locate_poles(model: &GeneratorModel, lambda: f64, beta: f64) -> Result<PoleReport> {
    if !(lambda > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter("lambda and beta must be > 0".into()));
    }
    let values = model.eigenvalues()?;
    if let Some(&ev) = values
        .iter()
        .find(|ev| (ev.re + lambda).abs() < STRIP_CLEARANCE)
    {
        return Err(Error::StripBoundary {
            eigenvalue: ev,
            lambda,
        });
    }
    let inside: Vec<C64> = values.iter().copied().filter(|ev| ev.re > -lambda).collect();
    let poles: Vec<LocatedPole> = cluster_eigenvalues(&inside, cluster_tol(model))
        .into_iter()
        .map(|(value, multiplicity)| LocatedPole {
            value,
            multiplicity,
        })
        .collect();
    let violations = poles
        .iter()
        .map(|p| p.value)
        .filter(|v| v.im.abs() > beta)
        .collect();
    Ok(PoleReport { poles, violations })
}

/// `(1/2πi)∮ R(z) dz` over the circle `|z − center| = radius` by the
/// `nodes`-point trapezoid rule.
pub fn riesz_projector(
    model: &GeneratorModel,
    center: C64,
    radius: f64,
    nodes: usize,
) -> Result<CMatrix> {
    if !(radius > 0.0) || nodes == 0 {
        return Err(Error::InvalidParameter(
            "radius and node count must be positive".into(),
        ));
    }
    let same = cluster_tol(model);
    for &ev in model.eigenvalues()? {
        let d = (ev - center).norm();
        if d > same && d <= radius + CONTOUR_CLEARANCE {
            return Err(Error::ContourOverlap {
                center,
                radius,
                other: ev,
            });
        }
        if (d - radius).abs() < CONTOUR_CLEARANCE {
            return Err(Error::ContourThroughPole {
                eigenvalue: ev,
                distance: (d - radius).abs(),
            });
        }
    }
    let n = model.dim();
    let scale = 1.0 / nodes as f64;
    if let Some(d) = model.diagonal() {
        let mut acc = CVector::zeros(n);
        for k in 0..nodes {
            let offset = C64::from_polar(radius, std::f64::consts::TAU * k as f64 * scale);
            let z = center + offset;
            acc += d.map(|v| offset / (z - v));
        }
        return Ok(CMatrix::from_diagonal(&(acc * real(scale))));
    }
    let mut acc = CMatrix::zeros(n, n);
    for k in 0..nodes {
        let offset = C64::from_polar(radius, std::f64::consts::TAU * k as f64 * scale);
        acc += resolvent_matrix(model, center + offset)? * offset;
    }
    Ok(acc * real(scale))
}

/// `N = (Z − z_j)Π_j` and the smallest `m` with `‖N^m‖ ≤ 1e−10·max(1, ‖Z‖)`.
/// `N` is returned as exactly zero when the order is 1.
pub fn pole_order(model: &GeneratorModel, pole: C64, projector: &CMatrix) -> Result<(usize, CMatrix)> {
    let n = model.dim();
    let nil = match model.diagonal() {
        Some(d) => CMatrix::from_diagonal(&d.zip_map(&projector.diagonal(), |v, p| (v - pole) * p)),
        None => (model.generator() - identity(n) * pole) * projector,
    };
    let tol = NILPOTENT_TOL * model.generator_norm().max(1.0);
    if spectral_norm(&nil) <= tol {
        return Ok((1, CMatrix::zeros(n, n)));
    }
    let mut power = nil.clone();
    for order in 2..=n + 1 {
        power = &power * &nil;
        if spectral_norm(&power) <= tol {
            return Ok((order, nil));
        }
    }
    Err(Error::Numerical(format!(
        "nilpotent part at {pole} is not nilpotent within tolerance"
    )))
}

#[derive(Debug, Clone)]
pub struct BromwichResult {
    pub matrix: CMatrix,
    pub b_cut: f64,
    pub step: f64,
}

/// `(1/2π) ∫_{−b_cut}^{b_cut} e^{(a+ib)t} R(a+ib) db`, unsmoothed.
pub fn bromwich_reconstruct(model: &GeneratorModel, t: f64, contour: &ContourSpec) -> Result<BromwichResult> {
    let ContourKind::BromwichLine { a, b_cut, step } = contour.kind else {
        return Err(Error::InvalidParameter(format!(
            "bromwich_reconstruct needs a bromwich-line contour, got {}",
            contour.label()
        )));
    };
    if !(a > 0.0) {
        return Err(Error::Domain(format!("the Bromwich line needs a > 0, got {a}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("the Bromwich integral needs t > 0, got {t}")));
    }
    let b_cut = b_cut.unwrap_or_else(|| default_b_cut(t));
    let step = step.unwrap_or(DEFAULT_BROMWICH_STEP);
    if !(b_cut > 0.0 && step > 0.0) {
        return Err(Error::InvalidParameter("b_cut and step must be > 0".into()));
    }
    let path = ContourPath::Line { re: a };
    guard_contour(model, &path)?;
    let rule = [Simpson::with_step(-b_cut, b_cut, step)];
    let matrix = contour_integral(model, t, &path, &rule, None)?;
    Ok(BromwichResult {
        matrix,
        b_cut,
        step: rule[0].step(),
    })
}

fn guard_contour(model: &GeneratorModel, path: &ContourPath) -> Result<()> {
    for &ev in model.eigenvalues()? {
        let distance = path.distance(ev);
        if distance < CONTOUR_CLEARANCE {
            return Err(Error::ContourThroughPole {
                eigenvalue: ev,
                distance,
            });
        }
    }
    Ok(())
}

/// `(1/2πi) ∫ e^{zt} K(z) dz` along `path`, where `K = R` when
/// `shift = None` and `K(z) = R(z)(Z−c)^n/(z−c)^n` for `shift = Some(c)`.
/// For `c` right of the path the two agree on the infinite contour, since
/// the difference is a sum of `e^{zt}/(z−c)^{j+1}` terms.
fn contour_integral(
    model: &GeneratorModel,
    t: f64,
    path: &ContourPath,
    segments: &[Simpson],
    shift: Option<f64>,
) -> Result<CMatrix> {
    let n = model.dim();
    let norm = 1.0 / std::f64::consts::TAU;
    let weight = |b: f64| -> (C64, C64) {
        let z = path.point(b);
        let w = (z * t).exp() * path.tangent(b) * (-I) * norm;
        (z, w)
    };
    if let Some(d) = model.diagonal() {
        let column = integrate_matrix(segments, n, 1, |b| {
            let (z, w) = weight(b);
            Ok(CMatrix::from_iterator(
                n,
                1,
                d.iter().map(|&v| {
                    let base = w / (z - v);
                    match shift {
                        Some(c) => base * ((v - c) / (z - c)).powi(SMOOTHING_POWER),
                        None => base,
                    }
                }),
            ))
        })?;
        return Ok(CMatrix::from_diagonal(&column.column(0).into_owned()));
    }
    let smoothing = shift.map(|c| {
        let shifted = model.generator() - identity(n) * real(c);
        crate::linalg::matrix_power(&shifted, SMOOTHING_POWER as u32)
    });
    integrate_matrix(segments, n, n, |b| {
        let (z, w) = weight(b);
        Ok(match (&smoothing, shift) {
            (Some(m), Some(c)) => {
                resolvent_solve(model, z, m)? * (w / (z - c).powi(SMOOTHING_POWER))
            }
            _ => resolvent_matrix(model, z)? * w,
        })
    })
}

/// Quadrature segments for a smoothed contour integral at time `t`:
/// unit pieces over the spectral band, refined near eigenvalues that sit
/// close to the contour, then a uniform outer rule out to `b_cut`.
fn contour_segments(model: &GeneratorModel, t: f64, path: &ContourPath, b_cut: f64) -> Result<Vec<Simpson>> {
    let eigen = model.eigenvalues()?;
    let near: Vec<(f64, f64)> = eigen.iter().map(|&ev| (ev.im, path.distance(ev))).collect();
    let max_im = eigen.iter().map(|ev| ev.im.abs()).fold(0.0, f64::max);
    let band = (max_im + 5.0).ceil().min(b_cut);
    let base = (std::f64::consts::TAU / (40.0 * t)).min(0.02);
    let outer = (std::f64::consts::TAU / (40.0 * t)).min(0.05);

    let mut cuts: Vec<f64> = Vec::new();
    let mut b = -band;
    while b <= band + 1e-12 {
        cuts.push(b);
        b += 1.0;
    }
    cuts.extend(path.kinks().into_iter().filter(|k| k.abs() < band));
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);

    let mut segments = Vec::new();
    if b_cut > band {
        segments.extend(outer_segments(path, -b_cut, -band, outer));
    }
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let local = near
            .iter()
            .map(|&(im, d)| {
                let gap = if im < lo {
                    lo - im
                } else if im > hi {
                    im - hi
                } else {
                    0.0
                };
                (d + gap) / 30.0
            })
            .fold(base, f64::min);
        segments.push(Simpson::with_step(lo, hi, local));
    }
    if b_cut > band {
        segments.extend(outer_segments(path, band, b_cut, outer));
    }
    Ok(detach_kinks(segments, &path.kinks()))
}

/// Moves segment endpoints that sit on a kink inward by a relative `1e−12`,
/// so each side evaluates its own one-sided tangent.
fn detach_kinks(segments: Vec<Simpson>, kinks: &[f64]) -> Vec<Simpson> {
    segments
        .into_iter()
        .map(|s| {
            let mut a = s.a;
            let mut b = s.b;
            for &k in kinks {
                let delta = 1e-12 * k.abs().max(1.0);
                if (a - k).abs() < 1e-9 {
                    a = k + delta;
                }
                if (b - k).abs() < 1e-9 {
                    b = k - delta;
                }
            }
            Simpson::new(a, b, s.intervals)
        })
        .collect()
}

fn outer_segments(path: &ContourPath, lo: f64, hi: f64, step: f64) -> Vec<Simpson> {
    let mut cuts = vec![lo, hi];
    cuts.extend(path.kinks().into_iter().filter(|k| *k > lo && *k < hi));
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.windows(2)
        .map(|p| Simpson::with_step(p[0], p[1], step))
        .collect()
}

/// Cutoff for a smoothed contour integral: the tail beyond `B ≥ 2‖Z‖` is
/// at most `(2/π)‖Z−c‖^n/(n B^n)`.
fn smoothed_b_cut(model: &GeneratorModel, t: f64, shift: f64) -> f64 {
    let n = SMOOTHING_POWER as f64;
    let w = model.generator_norm() + shift;
    let tail = w * (2.0 / (std::f64::consts::PI * n * CONTOUR_TAIL_TOL)).powf(1.0 / n);
    default_b_cut(t).max(tail).max(2.0 * model.generator_norm())
}

/// A pole together with its spectral data.
#[derive(Debug, Clone)]
pub struct PoleComponent {
    pub value: C64,
    pub multiplicity: usize,
    pub projector: CMatrix,
    pub order: usize,
    pub nilpotent: CMatrix,
    pub radius: f64,
}

impl PoleComponent {
    /// `e^{tz}(Π + Σ_{k<m} t^k N^k/k!)`.
    pub fn term(&self, t: f64) -> CMatrix {
        let mut total = self.projector.clone();
        let mut power = self.projector.clone();
        let mut factor = 1.0;
        for k in 1..self.order {
            power = &self.nilpotent * &power;
            factor *= t / k as f64;
            total += &power * real(factor);
        }
        total * (self.value * t).exp()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition<'a> {
    model: &'a GeneratorModel,
    semigroup: SemigroupEvaluator<'a>,
    pub poles: Vec<PoleComponent>,
    /// Strip poles outside `|Im| ≤ β`; their presence means the model fails
    /// the exponential holomorphy hypothesis. Always empty for curved
    /// contours, which reject uncovered eigenvalues with `RegionViolation`.
    pub violations: Vec<C64>,
    pub contour: ContourSpec,
    pub path: ContourPath,
}

pub fn decompose<'a>(
    model: &'a GeneratorModel,
    params: &AssumptionParams,
    contour: &ContourSpec,
) -> Result<SpectralDecomposition<'a>> {
    let (lambda, beta) = (params.lambda, params.beta);
    let path = match contour.kind {
        ContourKind::BromwichLine { .. } => {
            return Err(Error::InvalidParameter(
                "decompose needs a shifted-line or curved-rapid contour".into(),
            ))
        }
        ContourKind::ShiftedLine { ell, .. } => {
            if !(ell > 0.0 && ell < lambda) {
                return Err(Error::InvalidParameter(format!(
                    "ell must lie in (0, lambda) = (0, {lambda}), got {ell}"
                )));
            }
            ContourPath::Line { re: -ell }
        }
        ContourKind::CurvedRapid { epsilon, c12, .. } => {
            if !(c12 > 0.0) {
                return Err(Error::InvalidParameter("c12 must be > 0".into()));
            }
            let epsilon = match epsilon {
                Some(e) => e,
                None => default_epsilon(model, params.ell)?,
            };
            if !(epsilon > 0.0 && epsilon < params.ell) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must lie in (0, ell) = (0, {}), got {epsilon}",
                    params.ell
                )));
            }
            ContourPath::Curve { epsilon, c12 }
        }
    };
    let report = locate_poles(model, lambda, beta)?;
    guard_contour(model, &path)?;

    let selected: Vec<LocatedPole> = match contour.kind {
        ContourKind::CurvedRapid { beta: strip, .. } => {
            let chosen: Vec<LocatedPole> = report
                .poles
                .iter()
                .copied()
                .filter(|p| p.value.im.abs() <= strip)
                .collect();
            let tol = cluster_tol(model);
            for &ev in model.eigenvalues()? {
                let covered = chosen.iter().any(|p| (p.value - ev).norm() <= tol * p.multiplicity as f64);
                if path.lies_right(ev) && !covered {
                    return Err(Error::RegionViolation { eigenvalue: ev });
                }
            }
            chosen
        }
        _ => report.poles.clone(),
    };

    let eigen = model.eigenvalues()?;
    let tol = cluster_tol(model);
    let mut poles = Vec::with_capacity(selected.len());
    for pole in selected {
        let gap = eigen
            .iter()
            .map(|&ev| (ev - pole.value).norm())
            .filter(|&d| d > tol * pole.multiplicity as f64)
            .fold(f64::INFINITY, f64::min);
        let radius = (0.5 * gap).min(1.0);
        let projector = riesz_projector(model, pole.value, radius, contour.node_count)?;
        let (order, nilpotent) = pole_order(model, pole.value, &projector)?;
        poles.push(PoleComponent {
            value: pole.value,
            multiplicity: pole.multiplicity,
            projector,
            order,
            nilpotent,
            radius,
        });
    }
    Ok(SpectralDecomposition {
        model,
        semigroup: SemigroupEvaluator::new(model)?,
        poles,
        // curved contours enforce their own region above
        violations: match path {
            ContourPath::Line { .. } => report.violations,
            ContourPath::Curve { .. } => Vec::new(),
        },
        contour: *contour,
        path,
    })
}

/// Half the distance from the imaginary axis to the nearest eigenvalue with
/// negative real part, capped at `ℓ/2`.
pub fn default_epsilon(model: &GeneratorModel, ell: f64) -> Result<f64> {
    let gap = model
        .eigenvalues()?
        .iter()
        .filter(|ev| ev.re < -CONTOUR_CLEARANCE)
        .map(|ev| -ev.re)
        .fold(f64::INFINITY, f64::min);
    Ok((0.5 * gap).min(0.5 * ell))
}

/// Contour evaluation of `P_t` on a curved-rapid contour.
pub fn curved_remainder(
    model: &GeneratorModel,
    params: &AssumptionParams,
    t: f64,
    contour: &ContourSpec,
) -> Result<CMatrix> {
    if !matches!(contour.kind, ContourKind::CurvedRapid { .. }) {
        return Err(Error::InvalidParameter(format!(
            "curved_remainder needs a curved-rapid contour, got {}",
            contour.label()
        )));
    }
    decompose(model, params, contour)?.remainder_contour(t)
}

impl<'a> SpectralDecomposition<'a> {
    pub fn model(&self) -> &'a GeneratorModel {
        self.model
    }

    pub fn pole_values(&self) -> Vec<C64> {
        self.poles.iter().map(|p| p.value).collect()
    }

    pub fn projectors(&self) -> Vec<&CMatrix> {
        self.poles.iter().map(|p| &p.projector).collect()
    }

    pub fn pole_orders(&self) -> Vec<usize> {
        self.poles.iter().map(|p| p.order).collect()
    }

    pub fn nilpotent_parts(&self) -> Vec<&CMatrix> {
        self.poles.iter().map(|p| &p.nilpotent).collect()
    }

    /// Whether `T_t = P_t + Σ e^{t z_j} Π_j` holds without polynomial terms.
    pub fn projector_form_holds(&self) -> bool {
        self.poles.iter().all(|p| p.order == 1)
    }

    pub fn pole_sum(&self, t: f64) -> CMatrix {
        let n = self.model.dim();
        self.poles
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, p| acc + p.term(t))
    }

    /// `T_t − Σ_j pole terms`.
    pub fn remainder_subtraction(&self, t: f64) -> Result<CMatrix> {
        Ok(self.semigroup.evaluate(t)? - self.pole_sum(t))
    }

    /// Eigen-expansion of `P_t` over non-pole eigenvalues, available when the
    /// eigenbasis is well conditioned. Avoids the cancellation floor of the
    /// subtraction path at large `t`.
    pub fn remainder_spectral(&self, t: f64) -> Result<Option<CMatrix>> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let eig = self.model.eigen()?;
        let inverse = match &eig.inverse {
            Some(inv) if eig.condition < EIGEN_CONDITION_LIMIT => inv,
            _ => return Ok(None),
        };
        let factors = self.spectral_factors(t)?;
        if self.model.diagonal().is_some() {
            return Ok(Some(CMatrix::from_diagonal(&factors)));
        }
        let mut v = eig.vectors.clone();
        for (j, mut col) in v.column_iter_mut().enumerate() {
            col *= factors[j];
        }
        Ok(Some(v * inverse))
    }

    fn spectral_factors(&self, t: f64) -> Result<CVector> {
        let tol = cluster_tol(self.model);
        let values = self.model.eigenvalues()?;
        Ok(CVector::from_iterator(
            values.len(),
            values.iter().map(|&ev| {
                let is_pole = self
                    .poles
                    .iter()
                    .any(|p| (p.value - ev).norm() <= tol * p.multiplicity as f64);
                if is_pole {
                    real(0.0)
                } else {
                    (ev * t).exp()
                }
            }),
        ))
    }

    /// `P_t` from the contour integral, minus the residue terms of poles
    /// lying to the left of the contour.
    pub fn remainder_contour(&self, t: f64) -> Result<CMatrix> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("contour evaluation needs t > 0, got {t}")));
        }
        let shift = self.model.generator_norm() + 1.0;
        let b_cut = self
            .contour
            .b_cut()
            .unwrap_or_else(|| smoothed_b_cut(self.model, t, shift));
        let segments = contour_segments(self.model, t, &self.path, b_cut)?;
        let mut total = contour_integral(self.model, t, &self.path, &segments, Some(shift))?;
        for p in &self.poles {
            if !self.path.lies_right(p.value) {
                total -= p.term(t);
            }
        }
        Ok(total)
    }

    /// Best available evaluation of `P_t`.
    pub fn remainder(&self, t: f64) -> Result<CMatrix> {
        match self.remainder_spectral(t)? {
            Some(m) => Ok(m),
            None => self.remainder_subtraction(t),
        }
    }

    /// `P_t μ`; never forms `P_t` for diagonal generators.
    pub fn apply_remainder(&self, t: f64, mu: &CVector) -> Result<CVector> {
        self.model.check_vector(mu)?;
        if self.model.diagonal().is_some() {
            if !(t >= 0.0) {
                return Err(Error::NegativeTime(t));
            }
            return Ok(self.spectral_factors(t)?.component_mul(mu));
        }
        Ok(self.remainder(t)? * mu)
    }

    /// `‖P_t^{subtraction} − P_t^{contour}‖_2`.
    pub fn path_agreement(&self, t: f64) -> Result<f64> {
        let a = self.remainder_subtraction(t)?;
        let b = self.remainder_contour(t)?;
        Ok(spectral_norm(&(a - b)))
    }

    /// `‖P_t + Σ pole terms − T_t‖_2` with `P_t` from [`Self::remainder`].
    pub fn reconstruction_residual(&self, t: f64) -> Result<f64> {
        let total = self.remainder(t)? + self.pole_sum(t);
        Ok(spectral_norm(&(total - self.semigroup.evaluate(t)?)))
    }

    /// `max_j ‖Π_j² − Π_j‖_2`.
    pub fn idempotence_defect(&self) -> f64 {
        if self.model.diagonal().is_some() {
            return self
                .poles
                .iter()
                .flat_map(|p| p.projector.diagonal().iter().map(|v| (v * v - v).norm()).collect::<Vec<_>>())
                .fold(0.0, f64::max);
        }
        self.poles
            .iter()
            .map(|p| spectral_norm(&(&p.projector * &p.projector - &p.projector)))
            .fold(0.0, f64::max)
    }

    /// `max_{j≠k} ‖Π_j Π_k‖_2`.
    pub fn annihilation_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        if self.model.diagonal().is_some() {
            let diags: Vec<_> = self.poles.iter().map(|p| p.projector.diagonal()).collect();
            for (j, a) in diags.iter().enumerate() {
                for (k, b) in diags.iter().enumerate() {
                    if j != k {
                        worst = a.iter().zip(b.iter()).map(|(x, y)| (x * y).norm()).fold(worst, f64::max);
                    }
                }
            }
            return worst;
        }
        for (j, a) in self.poles.iter().enumerate() {
            for (k, b) in self.poles.iter().enumerate() {
                if j != k {
                    worst = worst.max(spectral_norm(&(&a.projector * &b.projector)));
                }
            }
        }
        worst
    }

    /// `max_j |trace(Π_j) − multiplicity_j|`.
    pub fn trace_defect(&self) -> f64 {
        self.poles
            .iter()
            .map(|p| (p.projector.trace() - real(p.multiplicity as f64)).norm())
            .fold(0.0, f64::max)
    }
}
