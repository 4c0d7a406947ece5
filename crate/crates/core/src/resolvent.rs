//! The resolvent `R(z) = (z·Id − Z)^{-1}`, its Laplace-integral
//! representation, and the identities it satisfies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, inverse, real, spectral_norm, CMatrix, CVector, C64};
use crate::models::{GeneratorModel, NormKind, SemigroupEvaluator};
use crate::quadrature::{integrate_matrix, linspace, Simpson};

/// Relative radius of the near-pole guard for direct inversion.
pub const POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventMethod {
    Direct,
    Laplace,
    PresExtension,
    Neumann,
}

#[derive(Debug, Clone)]
pub struct ResolventEvaluation {
    /// Point at which the resolvent was evaluated.
    pub z: C64,
    pub matrix: CMatrix,
    pub method: ResolventMethod,
    /// Frobenius defect `‖(z − Z)·matrix − Id‖_F` for the direct method,
    /// otherwise the Frobenius distance to the direct inverse.
    pub residual: Option<f64>,
    /// Certified truncation tail (Laplace: integral tail; Neumann: series tail).
    pub tail_bound: Option<f64>,
    /// Number of series terms summed (Neumann only).
    pub terms: Option<usize>,
    pub warnings: Vec<String>,
}

impl ResolventEvaluation {
    fn new(z: C64, matrix: CMatrix, method: ResolventMethod) -> Self {
        Self {
            z,
            matrix,
            method,
            residual: None,
            tail_bound: None,
            terms: None,
            warnings: Vec::new(),
        }
    }
}

fn pole_guard(model: &GeneratorModel, z: C64) -> Result<()> {
    let (eigenvalue, distance) = model.nearest_eigenvalue(z)?;
    if distance <= POLE_GUARD * model.generator_norm().max(1.0) {
        return Err(Error::Pole { z, eigenvalue });
    }
    Ok(())
}

/// `(z·Id − Z)^{-1}` without bookkeeping; used by the contour integrators.
pub fn resolvent_matrix(model: &GeneratorModel, z: C64) -> Result<CMatrix> {
    pole_guard(model, z)?;
    if let Some(d) = model.diagonal() {
        return Ok(CMatrix::from_diagonal(&d.map(|v| C64::new(1.0, 0.0) / (z - v))));
    }
    let n = model.dim();
    inverse(&(identity(n) * z - model.generator())).map_err(|_| Error::Pole {
        z,
        eigenvalue: model.nearest_eigenvalue(z).map(|p| p.0).unwrap_or(z),
    })
}

/// `R(z)·rhs` by an LU solve.
pub fn resolvent_solve(model: &GeneratorModel, z: C64, rhs: &CMatrix) -> Result<CMatrix> {
    pole_guard(model, z)?;
    if let Some(d) = model.diagonal() {
        let mut out = rhs.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row /= z - d[i];
        }
        return Ok(out);
    }
    let n = model.dim();
    crate::linalg::solve(&(identity(n) * z - model.generator()), rhs)
}

pub fn resolvent_direct(model: &GeneratorModel, z: C64) -> Result<ResolventEvaluation> {
    let r = resolvent_matrix(model, z)?;
    let n = model.dim();
    let defect = ((identity(n) * z - model.generator()) * &r - identity(n)).norm();
    let mut eval = ResolventEvaluation::new(z, r, ResolventMethod::Direct);
    eval.residual = Some(defect);
    Ok(eval)
}

/// `∫_0^{t_max} e^{-zt} T_t dt` by composite Simpson.
///
/// The reported `tail_bound` is `C1·e^{-Re(z)·t_max}/Re(z)` with `C1`
/// sampled from `‖T_t‖_2` on the quadrature interval; the remaining error is
/// the `O(step⁴)` Simpson term.
pub fn resolvent_laplace(
    model: &GeneratorModel,
    z: C64,
    t_max: f64,
    step: f64,
) -> Result<ResolventEvaluation> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!(
            "the Laplace integral needs Re(z) > 0, got {z}"
        )));
    }
    if !(t_max > 0.0 && step > 0.0) {
        return Err(Error::InvalidParameter("t_max and step must be > 0".into()));
    }
    let semigroup = SemigroupEvaluator::new(model)?;
    let n = model.dim();
    let rule = Simpson::with_step(0.0, t_max, step);
    let matrix = integrate_matrix(&[rule], n, n, |t| {
        Ok(semigroup.evaluate(t)? * (-z * t).exp())
    })?;

    let mut c1: f64 = 0.0;
    for t in linspace(0.0, t_max, 41) {
        c1 = c1.max(spectral_norm(&semigroup.evaluate(t)?));
    }
    let mut eval = ResolventEvaluation::new(z, matrix, ResolventMethod::Laplace);
    eval.tail_bound = Some(c1 * (-z.re * t_max).exp() / z.re);
    if let Ok(direct) = resolvent_matrix(model, z) {
        eval.residual = Some((&eval.matrix - direct).norm());
    }
    Ok(eval)
}

/// `‖(z−ζ)R(ζ)R(z) − R(ζ) + R(z)‖_{B→B}`.
pub fn resolvent_identity_residual(model: &GeneratorModel, z: C64, zeta: C64) -> Result<f64> {
    let rz = resolvent_matrix(model, z)?;
    let rzeta = resolvent_matrix(model, zeta)?;
    let defect = &rzeta * &rz * (z - zeta) - &rzeta + &rz;
    model.norm_pair().op_norm(&defect, NormKind::B, NormKind::B)
}

/// Evaluates the meromorphic extension at `z + 1/η` from `R(z)`, `Re(z) > 0`,
/// through `R(z + 1/η) = η R(z) (η·Id + R(z))^{-1}`.
pub fn pres_extension(model: &GeneratorModel, z: C64, eta: C64) -> Result<ResolventEvaluation> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("extension base needs Re(z) > 0, got {z}")));
    }
    if eta.norm() == 0.0 {
        return Err(Error::Domain("eta must be nonzero".into()));
    }
    let target = z + C64::new(1.0, 0.0) / eta;
    let rz = resolvent_matrix(model, z)?;
    let n = model.dim();
    let m = identity(n) * eta + &rz;
    let sv = m.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= POLE_GUARD * smax.max(1.0) {
        return Err(Error::ExtensionPole { target });
    }
    let m_inv = inverse(&m).map_err(|_| Error::ExtensionPole { target })?;
    let matrix = rz * m_inv * eta;
    let mut eval = ResolventEvaluation::new(target, matrix, ResolventMethod::PresExtension);
    if let Ok(direct) = resolvent_matrix(model, target) {
        eval.residual = Some((&eval.matrix - direct).norm());
    }
    Ok(eval)
}

const NEUMANN_MAX_TERMS: usize = 1_000_000;
const NEUMANN_MAX_POWER: usize = 100_000;

/// `R(−ℓ+ib) = R(α+ib) Σ_n (α+ℓ)^n R(α+ib)^n`, truncated with a certified
/// tail: once `‖M^p‖_B ≤ 1/2` for `M = (α+ℓ)R(α+ib)`, the tail after a term
/// `X` is bounded by `‖X‖_B · Σ_{j<p}‖M^j‖_B / (1 − ‖M^p‖_B)`.
///
/// `beta` only gates a warning: the identity is stated for `|b| ≥ β` but
/// the series may still converge below it.
pub fn neumann_extension(
    model: &GeneratorModel,
    alpha: f64,
    ell: f64,
    b: f64,
    tail_tol: f64,
    beta: Option<f64>,
) -> Result<ResolventEvaluation> {
    if !(alpha > 0.0 && ell > 0.0 && tail_tol > 0.0) {
        return Err(Error::InvalidParameter(
            "alpha, ell and tail_tol must be > 0".into(),
        ));
    }
    let base = C64::new(alpha, b);
    let target = C64::new(-ell, b);
    let weight = alpha + ell;
    let ratio = model
        .eigenvalues()?
        .iter()
        .map(|&ev| weight / (base - ev).norm())
        .fold(0.0, f64::max);
    if ratio >= 1.0 - 1e-12 {
        return Err(Error::SeriesDivergence { ratio });
    }

    let norms = model.norm_pair();
    let bnorm = |m: &CMatrix| norms.op_norm(m, NormKind::B, NormKind::B);
    let r_base = resolvent_matrix(model, base)?;
    let step = &r_base * real(weight);

    // Σ_{j<p} ‖M^j‖ and ‖M^p‖ ≤ 1/2
    let mut power = identity(model.dim());
    let mut partial = 0.0;
    let mut contraction = f64::INFINITY;
    for _ in 0..NEUMANN_MAX_POWER {
        partial += bnorm(&power)?;
        power = &power * &step;
        contraction = bnorm(&power)?;
        if contraction <= 0.5 {
            break;
        }
    }
    if contraction > 0.5 {
        return Err(Error::SeriesDivergence { ratio });
    }
    let tail_factor = partial / (1.0 - contraction);

    let mut sum = CMatrix::zeros(model.dim(), model.dim());
    let mut term = r_base;
    let mut count = 0;
    let tail = loop {
        sum += &term;
        count += 1;
        term = &term * &step;
        let bound = bnorm(&term)? * tail_factor;
        if bound < tail_tol {
            break bound;
        }
        if count >= NEUMANN_MAX_TERMS {
            return Err(Error::SeriesDivergence { ratio });
        }
    };

    let mut eval = ResolventEvaluation::new(target, sum, ResolventMethod::Neumann);
    eval.tail_bound = Some(tail);
    eval.terms = Some(count);
    if let Some(beta) = beta {
        if b.abs() < beta {
            eval.warnings.push(format!(
                "|b| = {} is below beta = {beta}; the extension is only asserted for |b| >= beta",
                b.abs()
            ));
        }
    }
    if let Ok(direct) = resolvent_matrix(model, target) {
        eval.residual = Some((&eval.matrix - direct).norm());
    }
    Ok(eval)
}

/// `‖R(z) − z^{-n} R(z) Z^n − Σ_{j<n} z^{-(j+1)} Z^j‖_{B→B}`.
pub fn generator_identity_residual(model: &GeneratorModel, z: C64, n: u32) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("the generator identity needs z != 0".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let r = resolvent_matrix(model, z)?;
    let zmat = model.generator();
    let dim = model.dim();
    let mut power = identity(dim);
    let mut expansion = CMatrix::zeros(dim, dim);
    for j in 0..n {
        expansion += &power / z.powu(j + 1);
        power = &power * zmat;
    }
    let defect = &r - &r * &power / z.powu(n) - expansion;
    model.norm_pair().op_norm(&defect, NormKind::B, NormKind::B)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradedNorm {
    pub q: u32,
    pub value: f64,
}

/// `‖μ‖_{Z^q} = Σ_{n≤q} ‖Z^n μ‖_B`.
pub fn graded_norm(model: &GeneratorModel, mu: &CVector, q: u32) -> Result<GradedNorm> {
    model.check_vector(mu)?;
    let norms = model.norm_pair();
    let mut v = mu.clone();
    let mut value = norms.strong_norm(&v);
    for _ in 0..q {
        v = model.apply(&v)?;
        value += norms.strong_norm(&v);
    }
    Ok(GradedNorm { q, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::models::{build_model, ModelDescriptor};

    fn explicit(rows: Vec<Vec<f64>>) -> GeneratorModel {
        build_model(&ModelDescriptor::Explicit { re: rows, im: None }).unwrap()
    }

    fn random_stable(dim: usize, abscissa: f64, seed: u64) -> GeneratorModel {
        build_model(&ModelDescriptor::RandomStable {
            dimension: dim,
            abscissa,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn direct_examples() {
        let m = explicit(vec![vec![-1.0]]);
        let r = resolvent_direct(&m, real(2.0)).unwrap();
        assert!((r.matrix[(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.residual.unwrap() < 1e-15);

        let d = explicit(vec![vec![-0.1, 0.0], vec![0.0, -2.0]]);
        let r = resolvent_direct(&d, real(1.0)).unwrap();
        assert!((r.matrix[(0, 0)].re - 1.0 / 1.1).abs() < 1e-15);
        assert!((r.matrix[(1, 1)].re - 1.0 / 3.0).abs() < 1e-15);

        match resolvent_direct(&m, real(-1.0)) {
            Err(Error::Pole { eigenvalue, .. }) => assert_eq!(eigenvalue, real(-1.0)),
            other => panic!("expected pole error, got {other:?}"),
        }
    }

    #[test]
    fn direct_defect_is_small_on_dense_models() {
        let m = random_stable(15, -0.5, 2);
        let r = resolvent_direct(&m, c(0.3, 1.7)).unwrap();
        assert!(r.residual.unwrap() < 1e-10);
    }

    #[test]
    fn laplace_examples() {
        let m = explicit(vec![vec![-1.0]]);
        let r = resolvent_laplace(&m, real(2.0), 20.0, 0.01).unwrap();
        assert!((r.matrix[(0, 0)].re - 1.0 / 3.0).abs() < 1e-8);
        assert!(r.residual.unwrap() < 1e-8);
        assert!(matches!(
            resolvent_laplace(&m, real(-0.5), 20.0, 0.01),
            Err(Error::Domain(_))
        ));

        // Re(z) = 5 over [0, 10]: tail C1·e^{-50}/5 is negligible, so the
        // residual is the Simpson term alone.
        let m = random_stable(6, -0.2, 11);
        let r = resolvent_laplace(&m, c(5.0, 1.0), 10.0, 0.005).unwrap();
        assert!(r.tail_bound.unwrap() < 1e-20);
        assert!(r.residual.unwrap() < r.tail_bound.unwrap() + 1e-8);
    }

    #[test]
    fn identity_residual_examples() {
        let m = explicit(vec![vec![-1.0]]);
        assert!(resolvent_identity_residual(&m, real(2.0), real(3.0)).unwrap() < 1e-16);
        assert_eq!(resolvent_identity_residual(&m, real(2.0), real(2.0)).unwrap(), 0.0);
        let m = random_stable(20, -0.3, 4);
        let v = resolvent_identity_residual(&m, c(0.7, 2.0), c(1.3, -4.0)).unwrap();
        assert!(v <= 1e-10, "{v}");
    }

    #[test]
    fn pres_extension_examples() {
        let m = explicit(vec![vec![-1.0]]);
        let e = pres_extension(&m, real(1.0), real(-1.0)).unwrap();
        assert_eq!(e.z, real(0.0));
        assert!((e.matrix[(0, 0)] - real(1.0)).norm() < 1e-15);

        // 1 + 1/eta = -1
        let err = pres_extension(&m, real(1.0), real(-0.5));
        assert!(matches!(err, Err(Error::ExtensionPole { .. })));

        let m = random_stable(8, -0.4, 9);
        let e = pres_extension(&m, c(1.0, 3.0), c(0.0, 2.0)).unwrap();
        assert!((e.z - c(1.0, 2.5)).norm() < 1e-15);
        assert!(e.residual.unwrap() <= 1e-8);
    }

    #[test]
    fn neumann_examples() {
        let m = explicit(vec![vec![-2.0]]);
        let e = neumann_extension(&m, 1.0, 1.0, 10.0, 1e-14, Some(1.0)).unwrap();
        let expected = C64::new(1.0, 0.0) / c(1.0, 10.0);
        assert!((e.matrix[(0, 0)] - expected).norm() < 1e-13);
        assert!(e.warnings.is_empty());

        let m = explicit(vec![vec![-0.5]]);
        let err = neumann_extension(&m, 1.0, 1.0, 0.1, 1e-12, Some(1.0));
        assert!(matches!(err, Err(Error::SeriesDivergence { .. })));
    }

    #[test]
    fn neumann_warns_below_beta() {
        let m = explicit(vec![vec![-3.0]]);
        let e = neumann_extension(&m, 1.0, 1.0, 0.5, 1e-12, Some(2.0)).unwrap();
        assert_eq!(e.warnings.len(), 1);
        assert!(e.residual.unwrap() < 1e-10);
    }

    #[test]
    fn generator_identity_examples() {
        let m = explicit(vec![vec![-1.0]]);
        assert!(generator_identity_residual(&m, real(2.0), 1).unwrap() < 1e-16);
        assert!(matches!(
            generator_identity_residual(&m, real(0.0), 1),
            Err(Error::Domain(_))
        ));

        let nil = explicit(vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(generator_identity_residual(&nil, real(1.0), 3).unwrap(), 0.0);
        let r1 = resolvent_matrix(&nil, real(1.0)).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[real(1.0), real(1.0), real(0.0), real(1.0)]);
        assert!((r1 - expected).norm() < 1e-15);
    }

    #[test]
    fn second_order_identity_is_the_first_iterated() {
        let m = random_stable(7, -0.2, 3);
        let z = c(0.4, 1.1);
        assert!(generator_identity_residual(&m, z, 1).unwrap() < 1e-10);
        assert!(generator_identity_residual(&m, z, 2).unwrap() < 1e-10);
        // substitute R = Id/z + R Z/z into its own right-hand side
        let r = resolvent_matrix(&m, z).unwrap();
        let zm = m.generator();
        let id = identity(m.dim());
        let once = &id / z + &r * zm / z;
        let twice = &id / z + (&id / z + &r * zm / z) * zm / z;
        let n2 = &r * zm * zm / (z * z) + &id / z + zm / (z * z);
        assert!((&once - &r).norm() < 1e-10);
        assert!((&twice - &n2).norm() < 1e-10);
    }

    #[test]
    fn graded_norm_examples() {
        let m = explicit(vec![vec![-1.0]]);
        let mu = CVector::from_vec(vec![real(1.0)]);
        let g0 = graded_norm(&m, &mu, 0).unwrap();
        assert!((g0.value - 2f64.sqrt()).abs() < 1e-15);
        let g2 = graded_norm(&m, &mu, 2).unwrap();
        assert!((g2.value - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        let zero = CVector::zeros(1);
        assert_eq!(graded_norm(&m, &zero, 4).unwrap().value, 0.0);
    }
}
