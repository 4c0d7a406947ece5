//! Finite-dimensional semigroup models: generators, the strong/weak norm
//! pair, and exact evaluation of `T_t = exp(tZ)`.

use std::sync::OnceLock;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, from_real_rows, hermitian_sqrt_pair, identity, is_diagonal, real, spectral_norm,
    CMatrix, CVector, Eigen, C64,
};

/// Eigenvector condition number above which `exp(tZ)` switches from the
/// eigendecomposition to scaling-and-squaring.
pub const EIGEN_CONDITION_LIMIT: f64 = 1e6;

const CTMC_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDescriptor {
    Explicit {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
    Ctmc {
        rates: Vec<Vec<f64>>,
    },
    Jordan {
        eigenvalue: C64,
        size: usize,
    },
    DiagonalRapid {
        c: f64,
        k_max: usize,
    },
    RandomStable {
        dimension: usize,
        abscissa: f64,
        seed: u64,
    },
}

impl ModelDescriptor {
    /// Replaces the seed of a random descriptor; other kinds are unchanged.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Self::RandomStable {
                dimension,
                abscissa,
                ..
            } => Self::RandomStable {
                dimension,
                abscissa,
                seed,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum ModelKind {
    General,
    Ctmc,
    Jordan,
    DiagonalRapid { c: f64, k_max: usize },
}

/// A generator matrix `Z` together with lazily computed spectral data.
#[derive(Debug, Clone)]
pub struct GeneratorModel {
    z: CMatrix,
    kind: ModelKind,
    diagonal: Option<CVector>,
    norm: f64,
    eigen: OnceLock<std::result::Result<Eigen, Error>>,
    norms: OnceLock<NormPair>,
}

impl GeneratorModel {
    pub fn new(z: CMatrix, kind: ModelKind) -> Result<Self> {
        if z.nrows() != z.ncols() {
            return Err(Error::NonSquare {
                rows: z.nrows(),
                cols: z.ncols(),
            });
        }
        if z.nrows() == 0 {
            return Err(Error::EmptyModel);
        }
        if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("generator has non-finite entries".into()));
        }
        if kind == ModelKind::Ctmc {
            check_ctmc(&z)?;
        }
        let diagonal = is_diagonal(&z).then(|| z.diagonal());
        let norm = match &diagonal {
            Some(d) => d.iter().map(|v| v.norm()).fold(0.0, f64::max),
            None => spectral_norm(&z),
        };
        Ok(Self {
            z,
            kind,
            diagonal,
            norm,
            eigen: OnceLock::new(),
            norms: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    pub fn generator(&self) -> &CMatrix {
        &self.z
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Diagonal of `Z` when `Z` is diagonal.
    pub fn diagonal(&self) -> Option<&CVector> {
        self.diagonal.as_ref()
    }

    /// `‖Z‖_2`.
    pub fn generator_norm(&self) -> f64 {
        self.norm
    }

    pub fn eigen(&self) -> Result<&Eigen> {
        self.eigen
            .get_or_init(|| match &self.diagonal {
                Some(d) => Ok(Eigen::of_diagonal(d)),
                None => Eigen::general(&self.z),
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn eigenvalues(&self) -> Result<&[C64]> {
        Ok(&self.eigen()?.values)
    }

    pub fn spectral_abscissa(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .map(|v| v.re)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn norm_pair(&self) -> &NormPair {
        self.norms.get_or_init(|| NormPair::for_generator(self))
    }

    /// Nearest eigenvalue to `z` and its distance.
    pub fn nearest_eigenvalue(&self, z: C64) -> Result<(C64, f64)> {
        Ok(self
            .eigenvalues()?
            .iter()
            .map(|&ev| (ev, (ev - z).norm()))
            .fold((C64::new(f64::NAN, f64::NAN), f64::INFINITY), |acc, x| {
                if x.1 < acc.1 {
                    x
                } else {
                    acc
                }
            }))
    }

    pub fn apply(&self, mu: &CVector) -> Result<CVector> {
        self.check_vector(mu)?;
        Ok(match &self.diagonal {
            Some(d) => d.component_mul(mu),
            None => &self.z * mu,
        })
    }

    pub(crate) fn check_vector(&self, mu: &CVector) -> Result<()> {
        if mu.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: mu.len(),
            });
        }
        Ok(())
    }
}

fn check_ctmc(z: &CMatrix) -> Result<()> {
    let n = z.nrows();
    for i in 0..n {
        let mut sum = 0.0;
        let mut scale: f64 = 1.0;
        for j in 0..n {
            let v = z[(i, j)];
            if v.im != 0.0 {
                return Err(Error::InvalidParameter("ctmc rates must be real".into()));
            }
            if i != j && v.re < 0.0 {
                return Err(Error::CtmcNegativeRate {
                    row: i,
                    col: j,
                    value: v.re,
                });
            }
            sum += v.re;
            scale = scale.max(v.re.abs());
        }
        if sum.abs() > CTMC_ROW_TOL * scale {
            return Err(Error::CtmcRowSum { row: i, sum });
        }
    }
    Ok(())
}

/// Frequencies `k` used by the diagonal-rapid model, in the order of the
/// diagonal: `-K, …, -1, 1, …, K`.
pub fn diagonal_rapid_frequencies(k_max: usize) -> Vec<i64> {
    let k = k_max as i64;
    (-k..=-1).chain(1..=k).collect()
}

pub fn build_model(spec: &ModelDescriptor) -> Result<GeneratorModel> {
    match spec {
        ModelDescriptor::Explicit { re, im } => {
            let mut z = from_real_rows(re)?;
            if let Some(im) = im {
                let zi = from_real_rows(im)?;
                if zi.shape() != z.shape() {
                    return Err(Error::DimensionMismatch {
                        expected: z.nrows(),
                        got: zi.nrows(),
                    });
                }
                z += zi * c(0.0, 1.0);
            }
            GeneratorModel::new(z, ModelKind::General)
        }
        ModelDescriptor::Ctmc { rates } => GeneratorModel::new(from_real_rows(rates)?, ModelKind::Ctmc),
        ModelDescriptor::Jordan { eigenvalue, size } => {
            if *size == 0 {
                return Err(Error::EmptyModel);
            }
            let z = CMatrix::from_fn(*size, *size, |i, j| {
                if i == j {
                    *eigenvalue
                } else if j == i + 1 {
                    real(1.0)
                } else {
                    real(0.0)
                }
            });
            GeneratorModel::new(z, ModelKind::Jordan)
        }
        ModelDescriptor::DiagonalRapid { c: exponent, k_max } => {
            if !(*exponent > 0.0 && *exponent < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "diagonal-rapid exponent c must lie in (0, 1), got {exponent}"
                )));
            }
            if *k_max == 0 {
                return Err(Error::EmptyModel);
            }
            let diag: Vec<C64> = diagonal_rapid_frequencies(*k_max)
                .into_iter()
                .map(|k| c(-((k.unsigned_abs() as f64).powf(-exponent)), k as f64))
                .collect();
            let z = CMatrix::from_diagonal(&CVector::from_vec(diag));
            GeneratorModel::new(
                z,
                ModelKind::DiagonalRapid {
                    c: *exponent,
                    k_max: *k_max,
                },
            )
        }
        ModelDescriptor::RandomStable {
            dimension,
            abscissa,
            seed,
        } => random_stable(*dimension, *abscissa, *seed),
    }
}

/// Gaussian matrix with entries `N(0, 1/n)`, shifted so that its spectral
/// abscissa equals `abscissa`.
fn random_stable(n: usize, abscissa: f64, seed: u64) -> Result<GeneratorModel> {
    if n == 0 {
        return Err(Error::EmptyModel);
    }
    if !abscissa.is_finite() {
        return Err(Error::InvalidParameter("abscissa must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let a = CMatrix::from_fn(n, n, |_, _| {
        let x: f64 = StandardNormal.sample(&mut rng);
        real(x * scale)
    });
    let current = Eigen::general(&a)?
        .values
        .iter()
        .map(|v| v.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let z = a + identity(n) * real(abscissa - current);
    GeneratorModel::new(z, ModelKind::General)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    /// Strong norm `‖μ‖_B = ‖Sμ‖_2`.
    B,
    /// Weak norm `‖μ‖_A = ‖μ‖_2`.
    A,
}

/// The strong norm `‖μ‖_B = sqrt(‖μ‖² + ‖Zμ‖²)` and the Euclidean weak norm.
///
/// `S` is the Hermitian square root of `Id + Z*Z`, so `‖μ‖_B = ‖Sμ‖_2` and every
/// induced operator norm is a largest singular value.
#[derive(Debug, Clone)]
pub struct NormPair {
    s: CMatrix,
    s_inv: CMatrix,
    s_diag: Option<DVector<f64>>,
}

impl NormPair {
    pub fn for_generator(model: &GeneratorModel) -> Self {
        match model.diagonal() {
            Some(d) => {
                let s_diag = d.map(|v| (1.0 + v.norm_sqr()).sqrt());
                Self {
                    s: CMatrix::from_diagonal(&s_diag.map(real)),
                    s_inv: CMatrix::from_diagonal(&s_diag.map(|v| real(1.0 / v))),
                    s_diag: Some(s_diag),
                }
            }
            None => {
                let z = model.generator();
                let h = identity(z.nrows()) + z.adjoint() * z;
                let (s, s_inv) = hermitian_sqrt_pair(&h);
                Self {
                    s,
                    s_inv,
                    s_diag: None,
                }
            }
        }
    }

    pub fn strong_factor(&self) -> &CMatrix {
        &self.s
    }

    pub fn strong_factor_inverse(&self) -> &CMatrix {
        &self.s_inv
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn strong_norm(&self, mu: &CVector) -> f64 {
        match &self.s_diag {
            Some(d) => mu
                .iter()
                .zip(d.iter())
                .map(|(m, s)| m.norm_sqr() * s * s)
                .sum::<f64>()
                .sqrt(),
            None => (&self.s * mu).norm(),
        }
    }

    pub fn weak_norm(&self, mu: &CVector) -> f64 {
        mu.norm()
    }

    pub fn norm(&self, mu: &CVector, kind: NormKind) -> f64 {
        match kind {
            NormKind::A => self.weak_norm(mu),
            NormKind::B => self.strong_norm(mu),
        }
    }

    fn scale_left(&self, m: &CMatrix, inverse: bool) -> CMatrix {
        match &self.s_diag {
            Some(d) => {
                let mut out = m.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    row *= real(if inverse { 1.0 / d[i] } else { d[i] });
                }
                out
            }
            None => (if inverse { &self.s_inv } else { &self.s }) * m,
        }
    }

    fn scale_right(&self, m: &CMatrix, inverse: bool) -> CMatrix {
        match &self.s_diag {
            Some(d) => {
                let mut out = m.clone();
                for (j, mut col) in out.column_iter_mut().enumerate() {
                    col *= real(if inverse { 1.0 / d[j] } else { d[j] });
                }
                out
            }
            None => m * (if inverse { &self.s_inv } else { &self.s }),
        }
    }

    /// Matrix whose largest singular value is `‖T‖_{from→to}`.
    pub fn conjugated(&self, t: &CMatrix, from: NormKind, to: NormKind) -> CMatrix {
        let m = match from {
            NormKind::B => self.scale_right(t, true),
            NormKind::A => t.clone(),
        };
        match to {
            NormKind::B => self.scale_left(&m, false),
            NormKind::A => m,
        }
    }

    pub fn op_norm(&self, t: &CMatrix, from: NormKind, to: NormKind) -> Result<f64> {
        if t.nrows() != t.ncols() {
            return Err(Error::NonSquare {
                rows: t.nrows(),
                cols: t.ncols(),
            });
        }
        if t.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.nrows(),
            });
        }
        if self.s_diag.is_some() && is_diagonal(t) {
            if let Some(v) = self.diagonal_op_norm(&t.diagonal(), from, to) {
                return Ok(v);
            }
        }
        Ok(spectral_norm(&self.conjugated(t, from, to)))
    }

    /// `‖diag(d)‖_{from→to}`, available when `S` is diagonal.
    pub fn diagonal_op_norm(&self, d: &CVector, from: NormKind, to: NormKind) -> Option<f64> {
        let s = self.s_diag.as_ref()?;
        let mut worst: f64 = 0.0;
        for (i, v) in d.iter().enumerate() {
            let mut x = v.norm();
            if from == NormKind::B {
                x /= s[i];
            }
            if to == NormKind::B {
                x *= s[i];
            }
            worst = worst.max(x);
        }
        Some(worst)
    }
}

/// `‖T‖_{from→to}` for the model's norm pair.
pub fn op_norm(model: &GeneratorModel, t: &CMatrix, from: NormKind, to: NormKind) -> Result<f64> {
    model.norm_pair().op_norm(t, from, to)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Eigendecomposition,
    ScalingAndSquaring,
}

/// Evaluates `T_t = exp(tZ)` for `t >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct SemigroupEvaluator<'a> {
    model: &'a GeneratorModel,
    method: EvalMethod,
}

impl<'a> SemigroupEvaluator<'a> {
    pub fn new(model: &'a GeneratorModel) -> Result<Self> {
        let eig = model.eigen()?;
        let method = if eig.inverse.is_some() && eig.condition < EIGEN_CONDITION_LIMIT {
            EvalMethod::Eigendecomposition
        } else {
            EvalMethod::ScalingAndSquaring
        };
        Ok(Self { model, method })
    }

    pub fn with_method(model: &'a GeneratorModel, method: EvalMethod) -> Result<Self> {
        if method == EvalMethod::Eigendecomposition && model.eigen()?.inverse.is_none() {
            return Err(Error::Numerical("eigenvector matrix is singular".into()));
        }
        Ok(Self { model, method })
    }

    pub fn method(&self) -> EvalMethod {
        self.method
    }

    pub fn evaluate(&self, t: f64) -> Result<CMatrix> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let n = self.model.dim();
        if t == 0.0 {
            return Ok(identity(n));
        }
        if let Some(d) = self.model.diagonal() {
            return Ok(CMatrix::from_diagonal(&d.map(|v| (v * t).exp())));
        }
        match self.method {
            EvalMethod::Eigendecomposition => {
                let eig = self.model.eigen()?;
                let inv = eig.inverse.as_ref().expect("checked at construction");
                let mut v = eig.vectors.clone();
                for (j, mut col) in v.column_iter_mut().enumerate() {
                    col *= (eig.values[j] * t).exp();
                }
                Ok(v * inv)
            }
            EvalMethod::ScalingAndSquaring => Ok((self.model.generator() * real(t)).exp()),
        }
    }

    /// `T_t μ`; avoids forming `T_t` for diagonal generators.
    pub fn apply(&self, t: f64, mu: &CVector) -> Result<CVector> {
        self.model.check_vector(mu)?;
        if let Some(d) = self.model.diagonal() {
            if !(t >= 0.0) {
                return Err(Error::NegativeTime(t));
            }
            return Ok(d.zip_map(mu, |z, m| (z * t).exp() * m));
        }
        Ok(self.evaluate(t)? * mu)
    }
}

pub fn evolve(model: &GeneratorModel, t: f64) -> Result<CMatrix> {
    SemigroupEvaluator::new(model)?.evaluate(t)
}

/// Random complex vector with standard normal components.
pub fn random_vector(n: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re, im)
    })
}

/// Random complex matrix with standard normal components.
pub fn random_matrix(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re, im)
    })
}
