//! Metrics induced by the kinetic Hamiltonians, closed-form and numeric
//! curvature evaluators, and the geodesic polar machinery.
//!
//! Normalization: the stored line element carries a global factor 2
//! relative to the kinetic-energy metric (`ds² = 2 Σ t_ii dq_i²` with
//! `H = ½ Σ p_i²/t_ii`). Every curvature formula and every polar-form
//! identity below refers to the line-element normalization; equivalence
//! checks against the inducing Hamiltonian carry the explicit factors
//! (`H̃ = 2H`, quadratic integrals scale by 4).

pub mod kappa;
pub mod polar;

use crate::algebra::sinhc;
use crate::error::{BuildError, EvalError};
use crate::hamiltonians::{DeformedFamily, FKind, UKind};
use crate::scalar::{Dual, Scalar, D2};

/// A diagonal position-dependent metric, evaluable on any scalar type so
/// the curvature formulas can differentiate it exactly.
pub trait DiagonalMetric: Send + Sync {
    fn dim(&self) -> usize;
    fn components<S: Scalar>(&self, q: &[S]) -> Vec<S>;
}

/// Diagonal metric induced by a purely kinetic member of the deformed
/// family, in the line-element normalization.
pub struct MetricField {
    n: usize,
    z: f64,
    f: FKind,
    provenance: String,
}

impl MetricField {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Which Hamiltonian induced this metric.
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    fn coefficients<S: Scalar>(&self, q: &[S]) -> Vec<S> {
        // coefficient a_i of p_i² in 2H = J₊ f(zJ₋): the metric inverts it
        let n = self.n;
        let mut qsq_total = S::zero();
        for &qi in q {
            qsq_total = qsq_total + qi.sq();
        }
        let f_value = self.f.apply(self.z, qsq_total);
        let zs = S::from_f64(self.z);
        let mut before = S::zero();
        let mut out = Vec::with_capacity(n);
        for &qi in q.iter().take(n) {
            let qsq = qi.sq();
            let after = qsq_total - before - qsq;
            let weight = (zs * (after - before)).exp();
            out.push(sinhc(self.z, qsq) * weight * f_value);
            before = before + qsq;
        }
        out
    }

    /// Kinetic normalization `t_ii`: `H = ½ Σ p_i²/t_ii` exactly, and the
    /// flat limit is the identity.
    pub fn kinetic_components(&self, q: &[f64]) -> Vec<f64> {
        self.coefficients(q).iter().map(|a| 1.0 / a).collect()
    }

    /// Line-element components (twice the kinetic ones).
    pub fn ds2_components(&self, q: &[f64]) -> Vec<f64> {
        self.coefficients(q).iter().map(|a| 2.0 / a).collect()
    }
}

impl DiagonalMetric for MetricField {
    fn dim(&self) -> usize {
        self.n
    }
    fn components<S: Scalar>(&self, q: &[S]) -> Vec<S> {
        self.coefficients(q)
            .into_iter()
            .map(|a| S::from_f64(2.0) / a)
            .collect()
    }
}

/// Invert the diagonal quadratic form of a purely kinetic Hamiltonian.
/// Rejects potentials and centrifugal terms.
pub fn metric_from_kinetic(family: &DeformedFamily) -> Result<MetricField, BuildError> {
    if !matches!(family.u, UKind::None) {
        return Err(BuildError::NotKinetic("drop the potential term"));
    }
    if family.params.b.iter().any(|&b| b != 0.0) {
        return Err(BuildError::NotKinetic(
            "centrifugal coefficients must vanish",
        ));
    }
    family
        .params
        .validate(family.n)
        .map_err(|e| BuildError::InvalidParameter(e.to_string()))?;
    let provenance = format!(
        "half J+ with {:?}, N={}, z={}",
        family.f, family.n, family.params.z
    );
    Ok(MetricField {
        n: family.n,
        z: family.params.z,
        f: family.f.clone(),
        provenance,
    })
}

fn d2_seed_direction(values: &[f64], direction: usize) -> Vec<D2> {
    values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let on = j == direction;
            D2 {
                re: Dual {
                    re: v,
                    eps: if on { 1.0 } else { 0.0 },
                },
                eps: Dual {
                    re: if on { 1.0 } else { 0.0 },
                    eps: 0.0,
                },
            }
        })
        .collect()
}

/// Gaussian curvature of a 2D diagonal metric with exact derivatives:
/// `K = −1/√(g₁₁g₂₂) [ ∂₁((1/√g₁₁) ∂₁√g₂₂) + ∂₂((1/√g₂₂) ∂₂√g₁₁) ]`.
pub fn gaussian_curvature_2d<M: DiagonalMetric>(metric: &M, q: &[f64]) -> Result<f64, EvalError> {
    if metric.dim() != 2 || q.len() != 2 {
        return Err(EvalError::DimensionMismatch {
            state: q.len(),
            expected: 2,
        });
    }
    let probe = metric.components(q);
    if probe.iter().any(|&g| g <= 0.0 || !g.is_finite()) {
        return Err(EvalError::Domain(format!(
            "metric not Riemannian at {q:?}: components {probe:?}"
        )));
    }
    let mut terms = 0.0;
    for direction in 0..2 {
        let comps = metric.components(&d2_seed_direction(q, direction));
        // √g of the other coordinate, differentiated twice along `direction`
        let own = comps[direction].sqrt();
        let other = comps[1 - direction].sqrt();
        let inv_own = D2 {
            re: Dual { re: 1.0, eps: 0.0 },
            eps: Dual { re: 0.0, eps: 0.0 },
        } / own;
        terms += inv_own.re.eps * other.re.eps + inv_own.re.re * other.eps.eps;
    }
    Ok(-terms / (probe[0] * probe[1]).sqrt())
}

/// Gaussian curvature of the 2D family as a function of `x = zJ₋`, for a
/// kinetic factor `f` with its derivatives:
/// `K(x) = z ( f′ cosh x + (f″ − f − f′²/f) sinh x )`.
pub fn curvature_of_family(f: &FKind, z: f64, x: f64) -> Result<f64, EvalError> {
    let (f0, f1, f2) = f.eval2(x);
    if f0 == 0.0 {
        return Err(EvalError::Domain(format!(
            "kinetic factor vanishes at x={x}"
        )));
    }
    Ok(z * (f1 * x.cosh() + (f2 - f0 - f1 * f1 / f0) * x.sinh()))
}

/// Closed-form Gaussian curvature of the two catalogue metrics in 2D.
pub fn closed_form_gaussian_2d(kind: CurvatureFamily, z: f64, q: &[f64]) -> f64 {
    match kind {
        CurvatureFamily::Variable => {
            let qsq: f64 = q.iter().map(|x| x * x).sum();
            -z * (z * qsq).sinh()
        }
        CurvatureFamily::Constant => z,
    }
}

/// Which kinetic member induced the space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureFamily {
    /// `f ≡ 1`: curvature varies with the radial coordinate.
    Variable,
    /// `f = e^{zJ₋}`: all sectional curvatures equal `z`.
    Constant,
}

/// Sectional curvatures of the 3D coordinate planes plus the scalar
/// curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sectional3 {
    pub k12: f64,
    pub k13: f64,
    pub k23: f64,
    pub scalar: f64,
}

impl Sectional3 {
    pub fn sum(&self) -> f64 {
        self.k12 + self.k13 + self.k23
    }
}

/// Closed-form sectional curvatures of the 3D catalogue metrics.
///
/// For the variable family the three plane curvatures satisfy
/// `K₁₂+K₁₃+K₂₃ = −(5/2) z sinh(z q²) = K/2`. The `K₂₃` closed form here is
/// the one consistent with that identity, with the flat `q = 0` limit and
/// with the numeric curvature of the metric (see the tests); a common
/// transcription replaces its single `e^{2zq²}` term with `2e^{2zq²}`,
/// which breaks all three checks.
pub fn sectional_curvatures_3d(kind: CurvatureFamily, z: f64, q: &[f64]) -> Sectional3 {
    match kind {
        CurvatureFamily::Constant => Sectional3 {
            k12: z,
            k13: z,
            k23: z,
            scalar: 6.0 * z,
        },
        CurvatureFamily::Variable => {
            let qsq: f64 = q.iter().map(|x| x * x).sum();
            let e2 = (2.0 * z * q[1] * q[1]).exp();
            let e3 = (2.0 * z * q[2] * q[2]).exp();
            let etot = (2.0 * z * qsq).exp();
            let w = 0.25 * z * (-z * qsq).exp();
            let k12 = w * (1.0 + e3 - 2.0 * etot);
            let k13 = w * (2.0 - e3 + e2 * e3 - 2.0 * etot);
            let k23 = w * (2.0 - e2 * e3 - etot);
            Sectional3 {
                k12,
                k13,
                k23,
                scalar: 2.0 * (k12 + k13 + k23),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// finite-difference curvature oracle
// ---------------------------------------------------------------------------

fn christoffel(g: &dyn Fn(&[f64]) -> Vec<f64>, q: &[f64], h: f64) -> Vec<Vec<Vec<f64>>> {
    let n = q.len();
    let center = g(q);
    let mut dg = vec![vec![0.0; n]; n]; // dg[c][i] = ∂_c g_ii
    for c in 0..n {
        let mut hi = q.to_vec();
        let mut lo = q.to_vec();
        hi[c] += h;
        lo[c] -= h;
        let gh = g(&hi);
        let gl = g(&lo);
        for i in 0..n {
            dg[c][i] = (gh[i] - gl[i]) / (2.0 * h);
        }
    }
    // diagonal metric: Γ^a_{bc} = ½ g^{aa}(∂_b g_{ac} + ∂_c g_{ab} − ∂_a g_{bc})
    let mut gamma = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = 0.0;
                if a == c {
                    v += dg[b][a];
                }
                if a == b {
                    v += dg[c][a];
                }
                if b == c {
                    v -= dg[a][b];
                }
                gamma[a][b][c] = 0.5 * v / center[a];
            }
        }
    }
    gamma
}

/// Plane sectional curvature `K_ij = R_{ijij}/(g_ii g_jj)` of a diagonal
/// metric, from finite differences of the metric components alone.
fn fd_sectional_once(g: &dyn Fn(&[f64]) -> Vec<f64>, q: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let n = q.len();
    let center = g(q);
    let gamma = christoffel(g, q, h);
    // ∂_c Γ^a_{bd} by differencing the Christoffel function
    let dgamma = |c: usize, a: usize, b: usize, d: usize| -> f64 {
        let mut hi = q.to_vec();
        let mut lo = q.to_vec();
        hi[c] += h;
        lo[c] -= h;
        let gh = christoffel(g, &hi, h);
        let gl = christoffel(g, &lo, h);
        (gh[a][b][d] - gl[a][b][d]) / (2.0 * h)
    };
    // R^i_{jij} = ∂_i Γ^i_{jj} − ∂_j Γ^i_{ij} + Σ_e (Γ^i_{ie} Γ^e_{jj} − Γ^i_{je} Γ^e_{ij})
    let mut riem = dgamma(i, i, j, j) - dgamma(j, i, i, j);
    for (e, ge) in gamma.iter().enumerate().take(n) {
        riem += gamma[i][i][e] * ge[j][j] - gamma[i][j][e] * ge[i][j];
    }
    center[i] * riem / (center[i] * center[j])
}

/// Richardson-extrapolated finite-difference sectional curvature: the
/// independent numeric oracle for the closed forms.
pub fn numeric_sectional_curvature(
    g: &dyn Fn(&[f64]) -> Vec<f64>,
    q: &[f64],
    i: usize,
    j: usize,
    step: f64,
) -> f64 {
    let coarse = fd_sectional_once(g, q, i, j, step);
    let fine = fd_sectional_once(g, q, i, j, step / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Numeric Gaussian curvature of a 2D metric via the same oracle.
pub fn numeric_gaussian_2d(g: &dyn Fn(&[f64]) -> Vec<f64>, q: &[f64], step: f64) -> f64 {
    numeric_sectional_curvature(g, q, 0, 1, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ModelParams;

    fn variable_metric(n: usize, z: f64) -> MetricField {
        metric_from_kinetic(&DeformedFamily::free(n, ModelParams::free(n, z))).unwrap()
    }

    fn constant_metric(n: usize, z: f64) -> MetricField {
        metric_from_kinetic(&DeformedFamily::const_curvature(n, ModelParams::free(n, z))).unwrap()
    }

    #[test]
    fn rejects_non_kinetic_input() {
        let with_potential = DeformedFamily::oscillator(2, ModelParams::free(2, 0.5));
        assert!(matches!(
            metric_from_kinetic(&with_potential),
            Err(BuildError::NotKinetic(_))
        ));
        let with_barrier =
            DeformedFamily::free(2, ModelParams::free(2, 0.5).with_b(vec![0.1, 0.0]));
        assert!(metric_from_kinetic(&with_barrier).is_err());
    }

    #[test]
    fn flat_limit_kinetic_components_are_identity() {
        let m = variable_metric(3, 0.0);
        let t = m.kinetic_components(&[0.4, 0.9, 1.3]);
        assert_eq!(t, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn line_element_matches_transcription_2d() {
        // g₁₁ = 2zq₁²/sinh(zq₁²) e^{−zq₂²}, g₂₂ = 2zq₂²/sinh(zq₂²) e^{zq₁²}
        let z = 1.0;
        let (q1, q2) = (0.5, 0.5);
        let m = variable_metric(2, z);
        let g = m.ds2_components(&[q1, q2]);
        let want1 = 2.0 * z * q1 * q1 / (z * q1 * q1).sinh() * (-z * q2 * q2).exp();
        let want2 = 2.0 * z * q2 * q2 / (z * q2 * q2).sinh() * (z * q1 * q1).exp();
        assert!((g[0] - want1).abs() < 1e-14);
        assert!((g[1] - want2).abs() < 1e-14);
    }

    #[test]
    fn constant_family_line_element_matches_transcription_2d() {
        // g₁₁ = 2zq₁²/sinh(zq₁²) e^{−zq₁²} e^{−2zq₂²}, g₂₂ = 2zq₂²/sinh(zq₂²) e^{−zq₂²}
        let z = 0.7;
        let (q1, q2) = (0.6, 0.9);
        let m = constant_metric(2, z);
        let g = m.ds2_components(&[q1, q2]);
        let s1 = (z * q1 * q1).sinh();
        let s2 = (z * q2 * q2).sinh();
        let want1 = 2.0 * z * q1 * q1 / s1 * (-z * q1 * q1).exp() * (-2.0 * z * q2 * q2).exp();
        let want2 = 2.0 * z * q2 * q2 / s2 * (-z * q2 * q2).exp();
        assert!((g[0] - want1).abs() < 1e-14);
        assert!((g[1] - want2).abs() < 1e-14);
    }

    #[test]
    fn kinetic_components_invert_the_hamiltonian() {
        use crate::hamiltonians::build_deformed;
        use crate::state::StateSampler;
        for (family, n) in [
            (DeformedFamily::free(3, ModelParams::free(3, 0.8)), 3),
            (
                DeformedFamily::const_curvature(4, ModelParams::free(4, -0.5)),
                4,
            ),
        ] {
            let m = metric_from_kinetic(&family).unwrap();
            let h = build_deformed(&family).unwrap();
            let mut sampler = StateSampler::new(n, 3);
            for _ in 0..10 {
                let s = sampler.next_state();
                let t = m.kinetic_components(s.q());
                let direct: f64 = s
                    .p()
                    .iter()
                    .zip(t.iter())
                    .map(|(p, t)| 0.5 * p * p / t)
                    .sum();
                let want = h.eval(&s).unwrap();
                assert!(
                    ((direct - want) / want).abs() < 1e-12,
                    "n={n}: {direct} vs {want}"
                );
            }
        }
    }

    #[test]
    fn gaussian_curvature_on_round_sphere_chart() {
        // Unit-sphere polar chart g = diag(1, sin²θ): K ≡ 1. Fixes the sign
        // convention of both the exact and the finite-difference paths.
        struct Sphere;
        impl DiagonalMetric for Sphere {
            fn dim(&self) -> usize {
                2
            }
            fn components<S: Scalar>(&self, q: &[S]) -> Vec<S> {
                vec![S::one(), q[0].sin().sq()]
            }
        }
        let point = [0.9, 0.4];
        let exact = gaussian_curvature_2d(&Sphere, &point).unwrap();
        assert!((exact - 1.0).abs() < 1e-11, "exact {exact}");
        let numeric = numeric_gaussian_2d(&|q| vec![1.0, q[0].sin().powi(2)], &point, 1e-4);
        assert!((numeric - 1.0).abs() < 1e-7, "numeric {numeric}");
    }

    #[test]
    fn variable_family_curvature_closed_form() {
        let z = 1.0;
        let m = variable_metric(2, z);
        // at q₁²+q₂² = ln 2: K = −z sinh(z ln 2) = −0.75
        let half = (0.5 * std::f64::consts::LN_2).sqrt();
        let k = gaussian_curvature_2d(&m, &[half, half]).unwrap();
        assert!((k + 0.75).abs() < 1e-11, "{k}");
        // vanishes with the deformation exponent at the origin
        let k0 = closed_form_gaussian_2d(CurvatureFamily::Variable, z, &[0.0, 0.0]);
        assert_eq!(k0, 0.0);
        let k0_exact = gaussian_curvature_2d(&m, &[0.0, 0.0]).unwrap();
        assert!(k0_exact.abs() < 1e-12, "{k0_exact}");
        // closed form matches the exact-derivative evaluation on a grid
        for &(a, b) in &[(0.3, 0.4), (0.7, 0.2), (1.0, 0.9)] {
            let got = gaussian_curvature_2d(&m, &[a, b]).unwrap();
            let want = closed_form_gaussian_2d(CurvatureFamily::Variable, z, &[a, b]);
            assert!((got - want).abs() < 1e-10, "at ({a},{b}): {got} vs {want}");
        }
    }

    #[test]
    fn constant_family_curvature_is_z_2d() {
        for &z in &[0.8, -0.6] {
            let m = constant_metric(2, z);
            for &(a, b) in &[(0.3, 0.4), (0.9, 0.2), (0.5, 1.1), (1.2, 0.7), (0.2, 0.2)] {
                let k = gaussian_curvature_2d(&m, &[a, b]).unwrap();
                assert!((k - z).abs() < 1e-8, "z={z} at ({a},{b}): {k}");
            }
        }
    }

    #[test]
    fn family_curvature_function_examples() {
        // f ≡ 1 at x = 0
        assert_eq!(curvature_of_family(&FKind::One, 2.0, 0.0).unwrap(), 0.0);
        // f = e^{±x} gives ±z for any x
        for &x in &[-1.0, 0.3, 2.0] {
            let kp = curvature_of_family(&FKind::ExpPlus, 0.37, x).unwrap();
            assert!((kp - 0.37).abs() < 1e-13, "{kp}");
            let km = curvature_of_family(&FKind::ExpMinus, 0.37, x).unwrap();
            assert!((km + 0.37).abs() < 1e-13, "{km}");
        }
        // f ≡ 1: K = −z sinh x; cross-check against the 2D evaluator
        let k = curvature_of_family(&FKind::One, 1.0, std::f64::consts::LN_2).unwrap();
        assert!((k + 0.75).abs() < 1e-13);
    }

    #[test]
    fn sectional_3d_closed_forms() {
        // flat limit at the origin
        let at0 = sectional_curvatures_3d(CurvatureFamily::Variable, 0.5, &[0.0, 0.0, 0.0]);
        assert_eq!(
            at0,
            Sectional3 {
                k12: 0.0,
                k13: 0.0,
                k23: 0.0,
                scalar: 0.0
            }
        );
        // scalar identity: K₁₂+K₁₃+K₂₃ = −(5/2) z sinh(z q²)
        let z = 0.5;
        let q = [0.4, 0.3, 0.2];
        let s = sectional_curvatures_3d(CurvatureFamily::Variable, z, &q);
        let qsq: f64 = q.iter().map(|x| x * x).sum();
        let identity = s.sum() + 2.5 * z * (z * qsq).sinh();
        assert!(identity.abs() < 1e-12, "{identity}");
        // constant family
        let ms = sectional_curvatures_3d(CurvatureFamily::Constant, -0.6, &q);
        assert_eq!(ms.k12, -0.6);
        assert!((ms.scalar + 3.6).abs() < 1e-15);
    }

    #[test]
    fn sectional_3d_closed_vs_numeric() {
        let z = 0.5;
        let q = [0.4, 0.3, 0.2];
        let m = variable_metric(3, z);
        let closed = sectional_curvatures_3d(CurvatureFamily::Variable, z, &q);
        let g = |pt: &[f64]| m.ds2_components(pt);
        let pairs = [(0, 1, closed.k12), (0, 2, closed.k13), (1, 2, closed.k23)];
        for (i, j, want) in pairs {
            let got = numeric_sectional_curvature(&g, &q, i, j, 1e-4);
            assert!(
                (got - want).abs() < 1e-5,
                "K{}{}: numeric {got} vs closed {want}",
                i + 1,
                j + 1
            );
        }
    }

    #[test]
    fn constant_family_3d_numeric_curvatures_equal_z() {
        for &z in &[0.4, -0.3] {
            let m = constant_metric(3, z);
            let g = |pt: &[f64]| m.ds2_components(pt);
            let q = [0.5, 0.8, 0.3];
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let got = numeric_sectional_curvature(&g, &q, i, j, 1e-4);
                assert!((got - z).abs() < 1e-5, "z={z} K{}{}: {got}", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn constant_family_nd_numeric_curvatures_equal_z() {
        // the N-D constant-curvature claim, spot-checked at N = 4
        let z = 0.3;
        let m = constant_metric(4, z);
        let g = |pt: &[f64]| m.ds2_components(pt);
        let q = [0.5, 0.7, 0.4, 0.6];
        for (i, j) in [(0, 1), (1, 3), (2, 3), (0, 3)] {
            let got = numeric_sectional_curvature(&g, &q, i, j, 1e-4);
            assert!((got - z).abs() < 1e-5, "K{}{}: {got}", i + 1, j + 1);
        }
    }

    #[test]
    fn catalogue_metrics_stay_riemannian_for_both_deformation_signs() {
        // the sinhc ratio is even in z, so the built-in kinetic factors
        // keep every component positive
        for &z in &[1.0, -1.0] {
            for m in [variable_metric(2, z), constant_metric(2, z)] {
                let g = m.ds2_components(&[2.0, 2.0]);
                assert!(g.iter().all(|&x| x > 0.0), "z={z}: {g:?}");
            }
        }
    }

    #[test]
    fn sign_flipped_metric_is_reported_not_repaired() {
        // a user kinetic factor that crosses zero makes the metric lose
        // signature; the curvature evaluator reports the domain violation
        use std::sync::Arc;
        let linear = FKind::Custom(Arc::new(crate::scalar::SmoothFn {
            value: |x: f64| 1.0 + x,
            first: |_: f64| 1.0,
            second: |_: f64| 0.0,
        }));
        let family = DeformedFamily::new(
            2,
            linear,
            UKind::None,
            ModelParams::free(2, -1.0),
        );
        let m = metric_from_kinetic(&family).unwrap();
        // x = zJ₋ = −q² < −1 here, so f < 0 and the metric flips sign
        let g = m.ds2_components(&[1.2, 1.2]);
        assert!(g[0] < 0.0, "{g:?}");
        assert!(gaussian_curvature_2d(&m, &[1.2, 1.2]).is_err());
    }
}
