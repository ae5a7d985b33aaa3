//! Deformed sl(2,R) generators, Casimir functions and the universal
//! integral chains for an arbitrary number of sites.
//!
//! Everything is written over [`Scalar`] so the observable layer obtains
//! exact gradients. The `z = 0` branch reproduces the undeformed formulas
//! bit for bit: all deformation factors collapse to exact `1.0`.

use crate::error::EvalError;
use crate::scalar::Scalar;
use crate::state::{ModelParams, PhaseState};

/// Switch to the Taylor branch of `sinh(u)/u` below this `|u|`.
pub const SINHC_SERIES_THRESHOLD: f64 = 1e-4;

/// `sinh(z·x)/(z·x)`, smooth through `z·x = 0` and exactly `1` there.
///
/// A four-term Taylor branch removes the removable singularity; the
/// truncation error below the threshold is far under machine precision.
pub fn sinhc<S: Scalar>(z: f64, x: S) -> S {
    let u = x * S::from_f64(z);
    if u.primal().abs() < SINHC_SERIES_THRESHOLD {
        let u2 = u.sq();
        let c6 = S::from_f64(1.0 / 5040.0);
        let c4 = S::from_f64(1.0 / 120.0);
        let c2 = S::from_f64(1.0 / 6.0);
        S::one() + u2 * (c2 + u2 * (c4 + u2 * c6))
    } else {
        u.sinh() / u
    }
}

/// `(exp(z·x) - 1)/(z·x)`, smooth through `z·x = 0` and exactly `1` there.
pub fn expc<S: Scalar>(z: f64, x: S) -> S {
    let u = x * S::from_f64(z);
    if u.primal().abs() < SINHC_SERIES_THRESHOLD {
        let c4 = S::from_f64(1.0 / 24.0);
        let c3 = S::from_f64(1.0 / 6.0);
        let c2 = S::from_f64(0.5);
        S::one() + u * (c2 + u * (c3 + u * c4))
    } else {
        u.exp_m1() / u
    }
}

/// Exponent for one site inside a window of sites: later sites in the window
/// count positively, earlier ones negatively.
///
/// With 0-based site `i` in the window `lo..hi` and `prefix[k] = Σ_{j<k} q_j²`,
/// this is `(prefix[hi] - prefix[i+1]) - (prefix[i] - prefix[lo])`.
fn window_exponent<S: Scalar>(i: usize, lo: usize, hi: usize, prefix: &[S]) -> S {
    (prefix[hi] - prefix[i + 1]) - (prefix[i] - prefix[lo])
}

fn prefix_squares<S: Scalar>(q: &[S]) -> Vec<S> {
    let mut prefix = Vec::with_capacity(q.len() + 1);
    let mut acc = S::zero();
    prefix.push(acc);
    for &qi in q {
        acc = acc + qi.sq();
        prefix.push(acc);
    }
    prefix
}

/// Leading-chain exponent for 1-based site `i` within the first `h` sites.
pub fn left_exponent(i: usize, h: usize, q: &[f64]) -> Result<f64, EvalError> {
    let n = q.len();
    if i < 1 || i > h || h > n {
        return Err(EvalError::IndexOutOfRange { i, h, n });
    }
    Ok(window_exponent(i - 1, 0, h, &prefix_squares(q)))
}

/// Sum of the leading-chain exponents of two sites, `i < j`.
pub fn left_pair_exponent(i: usize, j: usize, h: usize, q: &[f64]) -> Result<f64, EvalError> {
    Ok(left_exponent(i, h, q)? + left_exponent(j, h, q)?)
}

/// Trailing-chain exponent for 1-based site `i` within the window starting
/// at site `h` and running to the last site.
pub fn right_exponent(i: usize, h: usize, q: &[f64]) -> Result<f64, EvalError> {
    let n = q.len();
    if h < 1 || i < h || i > n {
        return Err(EvalError::IndexOutOfRange { i, h, n });
    }
    Ok(window_exponent(i - 1, h - 1, n, &prefix_squares(q)))
}

/// Sum of the trailing-chain exponents of two sites, `i < j`.
pub fn right_pair_exponent(i: usize, j: usize, h: usize, q: &[f64]) -> Result<f64, EvalError> {
    Ok(right_exponent(i, h, q)? + right_exponent(j, h, q)?)
}

/// Values of the three symmetry generators at a phase-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorTriple {
    /// J₋ = Σ q_i²
    pub jm: f64,
    /// J₊: deformed momentum-square generator (with centrifugal terms)
    pub jp: f64,
    /// J₃: deformed dilation generator
    pub j3: f64,
}

/// Generic evaluation of the generator triple on a site window `lo..hi`.
///
/// The full realization uses the whole range; truncated windows give the
/// nested realizations whose Casimirs are the universal integrals.
pub(crate) fn eval_generators_window<S: Scalar>(
    q: &[S],
    p: &[S],
    z: f64,
    b: &[f64],
    lo: usize,
    hi: usize,
) -> (S, S, S) {
    let prefix = prefix_squares(q);
    let mut jm = S::zero();
    let mut jp = S::zero();
    let mut j3 = S::zero();
    for (i, (&qi, &pi)) in q.iter().zip(p.iter()).enumerate().take(hi).skip(lo) {
        let qsq = qi.sq();
        jm = jm + qsq;
        let s = sinhc(z, qsq);
        let weight = (S::from_f64(z) * window_exponent(i, lo, hi, &prefix)).exp();
        let mut site = s * pi.sq();
        if b[i] != 0.0 {
            // z b / sinh(z q²) written as b / (q² sinhc) so z = 0 is exact
            site = site + S::from_f64(b[i]) / (qsq * s);
        }
        jp = jp + site * weight;
        j3 = j3 + s * qi * pi * weight;
    }
    (jm, jp, j3)
}

/// Evaluate the generator triple of the full N-site realization.
pub fn generators(state: &PhaseState, params: &ModelParams) -> Result<GeneratorTriple, EvalError> {
    let n = state.dim();
    params.validate(n)?;
    params.check_regular(state)?;
    let (jm, jp, j3) = eval_generators_window(state.q(), state.p(), params.z, &params.b, 0, n);
    Ok(GeneratorTriple { jm, jp, j3 })
}

/// Casimir combination of a generator triple: `sinh(zJ₋)/z · J₊ − J₃²`,
/// with the `z = 0` branch `J₋J₊ − J₃²`.
pub fn casimir(t: &GeneratorTriple, z: f64) -> f64 {
    casimir_combination(t.jm, t.jp, t.j3, z)
}

pub(crate) fn casimir_combination<S: Scalar>(jm: S, jp: S, j3: S, z: f64) -> S {
    // sinh(z jm)/z = jm · sinhc(z, jm), exact at z = 0
    jm * sinhc(z, jm) * jp - j3.sq()
}

/// One pair term of the integral chains: symmetric in the window, carries
/// the squared cross product and the centrifugal exchange terms.
fn pair_term<S: Scalar>(q: &[S], p: &[S], z: f64, b: &[f64], i: usize, j: usize) -> S {
    let qi2 = q[i].sq();
    let qj2 = q[j].sq();
    let si = sinhc(z, qi2);
    let sj = sinhc(z, qj2);
    let cross = q[i] * p[j] - q[j] * p[i];
    let mut term = si * sj * cross.sq();
    // sinh(z q_j²)/sinh(z q_i²) = (q_j² sinhc_j)/(q_i² sinhc_i); z cancels
    if b[i] != 0.0 {
        term = term + S::from_f64(b[i]) * (qj2 * sj) / (qi2 * si);
    }
    if b[j] != 0.0 {
        term = term + S::from_f64(b[j]) * (qi2 * si) / (qj2 * sj);
    }
    term
}

/// Chain invariant over a site window `lo..hi`: the Casimir of the window
/// realization in fully expanded form.
pub(crate) fn eval_chain_window<S: Scalar>(
    q: &[S],
    p: &[S],
    z: f64,
    b: &[f64],
    lo: usize,
    hi: usize,
) -> S {
    let prefix = prefix_squares(q);
    let zs = S::from_f64(z);
    let two = S::from_f64(2.0);
    let mut total = S::zero();
    for i in lo..hi {
        for j in (i + 1)..hi {
            let w = window_exponent(i, lo, hi, &prefix) + window_exponent(j, lo, hi, &prefix);
            total = total + pair_term(q, p, z, b, i, j) * (zs * w).exp();
        }
    }
    for (i, &bi) in b.iter().enumerate().take(hi).skip(lo) {
        if bi != 0.0 {
            let w = window_exponent(i, lo, hi, &prefix);
            total = total + S::from_f64(bi) * (two * zs * w).exp();
        }
    }
    total
}

/// The universal integrals of an N-site realization: leading-chain values
/// for m = 2..N and trailing-chain values for m = 2..N.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl IntegralSet {
    /// Leading-chain invariant for `m ∈ 2..=N` (built on the first m sites).
    pub fn left(&self, m: usize) -> f64 {
        self.left[m - 2]
    }

    /// Trailing-chain invariant for `m ∈ 2..=N` (built on the last m sites).
    pub fn right(&self, m: usize) -> f64 {
        self.right[m - 2]
    }

    pub fn left_all(&self) -> &[f64] {
        &self.left
    }

    pub fn right_all(&self) -> &[f64] {
        &self.right
    }

    /// Number of functionally independent members, `2N − 3` for N ≥ 2:
    /// both chains share their top element.
    pub fn independent_count(&self) -> usize {
        match self.left.len() {
            0 => 0,
            m => 2 * m - 1,
        }
    }
}

/// Evaluate every universal integral at a state.
pub fn universal_integrals(
    state: &PhaseState,
    params: &ModelParams,
) -> Result<IntegralSet, EvalError> {
    let n = state.dim();
    params.validate(n)?;
    params.check_regular(state)?;
    let (q, p, z, b) = (state.q(), state.p(), params.z, &params.b);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for m in 2..=n {
        left.push(eval_chain_window(q, p, z, b, 0, m));
        right.push(eval_chain_window(q, p, z, b, n - m, n));
    }
    Ok(IntegralSet { left, right })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(q: &[f64], p: &[f64]) -> PhaseState {
        PhaseState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn sinhc_classical_limit_is_exactly_one() {
        assert_eq!(sinhc(0.0, 3.7), 1.0);
        assert_eq!(sinhc(0.0, -125.0), 1.0);
    }

    #[test]
    fn sinhc_analytic_point() {
        // sinh(ln 2) = 3/4 exactly, so sinhc(1, ln 2) = 0.75 / ln 2.
        let x = std::f64::consts::LN_2;
        let got = sinhc(1.0, x);
        let want = 0.75 / x;
        assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
        assert!((got - 1.082_021_280_666_011_6).abs() < 1e-12);
    }

    #[test]
    fn sinhc_series_branch_agrees_with_direct_formula() {
        // Compare the series branch against an independent Taylor oracle and
        // against the direct formula just above the threshold.
        let taylor = |u: f64| 1.0 + u * u / 6.0 + u.powi(4) / 120.0 + u.powi(6) / 5040.0;
        for &u in &[1e-9, -3e-7, 5e-5, 9.9e-5] {
            let got = sinhc(u, 1.0);
            assert!(
                ((got - taylor(u)) / taylor(u)).abs() < 1e-15,
                "series branch off at u={u}"
            );
        }
        for &u in &[1.1e-4, 2e-4] {
            let direct = u.sinh() / u;
            assert!(((sinhc(u, 1.0) - direct) / direct).abs() < 1e-15);
        }
    }

    #[test]
    fn left_exponent_examples() {
        // i=2, h=3, q=(1,2,3): -q₁² + q₃² = -1 + 9 = 8
        assert_eq!(left_exponent(2, 3, &[1.0, 2.0, 3.0]).unwrap(), 8.0);
        // empty sums
        assert_eq!(left_exponent(1, 1, &[4.0, 5.0]).unwrap(), 0.0);
        assert!(left_exponent(3, 2, &[1.0, 2.0, 3.0]).is_err());
        assert!(left_exponent(0, 1, &[1.0]).is_err());
    }

    #[test]
    fn pair_exponent_is_sum_of_singles() {
        let q = [0.4, 1.3, 0.8, 2.1, 0.6];
        for h in 2..=5 {
            for i in 1..=h {
                for j in (i + 1)..=h {
                    let lhs = left_pair_exponent(i, j, h, &q).unwrap();
                    let rhs = left_exponent(i, h, &q).unwrap() + left_exponent(j, h, &q).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
        // expanded form printed for the pair exponent:
        // -2 Σ_{k<i} q² - q_i² + q_j² + 2 Σ_{l>j}^{h} q²
        let (i, j, h) = (2, 3, 5);
        let expanded = -2.0 * q[0] * q[0] - q[1] * q[1] + q[2] * q[2]
            + 2.0 * (q[3] * q[3] + q[4] * q[4]);
        assert!((left_pair_exponent(i, j, h, &q).unwrap() - expanded).abs() < 1e-13);
    }

    #[test]
    fn right_exponent_matches_trailing_window_transcription() {
        let q = [0.4, 1.3, 0.8, 2.1];
        let n = q.len();
        // K̃_i^{(h)} = -Σ_{k=h}^{i-1} q² + Σ_{l=i+1}^{N} q²  (1-based)
        for h in 1..=n {
            for i in h..=n {
                let mut want = 0.0;
                for k in h..i {
                    want -= q[k - 1] * q[k - 1];
                }
                for l in (i + 1)..=n {
                    want += q[l - 1] * q[l - 1];
                }
                let got = right_exponent(i, h, &q).unwrap();
                assert!((got - want).abs() < 1e-14, "i={i} h={h}");
            }
        }
    }

    #[test]
    fn flat_generators_trivial_point() {
        let s = state(&[1.0, 1.0], &[1.0, 0.0]);
        let t = generators(&s, &ModelParams::free(2, 0.0)).unwrap();
        assert_eq!(t.jm, 2.0);
        assert_eq!(t.jp, 1.0);
        assert_eq!(t.j3, 1.0);
    }

    #[test]
    fn two_site_generators_match_direct_transcription() {
        // Independent transcription of the explicit two-site realization.
        let z = 0.5;
        let b = [0.7, -0.3];
        let mut sampler = crate::state::StateSampler::new(2, 77);
        let params = ModelParams::free(2, z).with_b(b.to_vec());
        for _ in 0..10 {
            let s = sampler.next_state();
            let (q1, q2, p1, p2) = (s.q()[0], s.q()[1], s.p()[0], s.p()[1]);
            let s1 = (z * q1 * q1).sinh() / (z * q1 * q1);
            let s2 = (z * q2 * q2).sinh() / (z * q2 * q2);
            let e_plus = (z * q2 * q2).exp();
            let e_minus = (-z * q1 * q1).exp();
            let jm = q1 * q1 + q2 * q2;
            let j3 = s1 * e_plus * q1 * p1 + s2 * e_minus * q2 * p2;
            let jp = s1 * e_plus * p1 * p1
                + s2 * e_minus * p2 * p2
                + z * b[0] / (z * q1 * q1).sinh() * e_plus
                + z * b[1] / (z * q2 * q2).sinh() * e_minus;
            let t = generators(&s, &params).unwrap();
            assert!((t.jm - jm).abs() < 1e-14 * jm.abs());
            assert!((t.j3 - j3).abs() < 1e-14 * j3.abs().max(1.0));
            assert!((t.jp - jp).abs() < 1e-14 * jp.abs());
        }
    }

    #[test]
    fn classical_limit_is_bit_exact() {
        // z = 0 must reproduce the undeformed realization exactly, not
        // approximately: direct transcription as the oracle.
        let q = [0.7, 1.1, 0.4];
        let p = [0.3, -0.6, 0.9];
        let b = [1.2, 0.0, -0.4];
        let s = state(&q, &p);
        let params = ModelParams::free(3, 0.0).with_b(b.to_vec());
        let t = generators(&s, &params).unwrap();

        let jm: f64 = q.iter().map(|x| x * x).sum();
        let jp: f64 = q
            .iter()
            .zip(p.iter())
            .zip(b.iter())
            .map(|((qi, pi), bi)| {
                if *bi != 0.0 {
                    pi * pi + bi / (qi * qi)
                } else {
                    pi * pi
                }
            })
            .sum();
        let j3: f64 = q.iter().zip(p.iter()).map(|(qi, pi)| qi * pi).sum();
        assert_eq!(t.jm, jm);
        assert_eq!(t.jp, jp);
        assert_eq!(t.j3, j3);
    }

    #[test]
    fn classical_integrals_are_bit_exact() {
        // Undeformed chain invariants, transcribed directly:
        // C^(m) = Σ_{i<j≤m} [(q_i p_j − q_j p_i)² + b_i q_j²/q_i² + b_j q_i²/q_j²] + Σ_{i≤m} b_i
        let q = [0.7, 1.1, 0.4, 0.9];
        let p = [0.3, -0.6, 0.9, 0.2];
        let b = [1.2, 0.5, -0.4, 2.0];
        let s = state(&q, &p);
        let params = ModelParams::free(4, 0.0).with_b(b.to_vec());
        let got = universal_integrals(&s, &params).unwrap();

        let classical_window = |lo: usize, hi: usize| -> f64 {
            let mut total = 0.0;
            for i in lo..hi {
                for j in (i + 1)..hi {
                    let cross = q[i] * p[j] - q[j] * p[i];
                    let mut term = cross * cross;
                    term += b[i] * (q[j] * q[j]) / (q[i] * q[i]);
                    term += b[j] * (q[i] * q[i]) / (q[j] * q[j]);
                    total += term;
                }
            }
            for bi in &b[lo..hi] {
                total += bi;
            }
            total
        };
        for m in 2..=4 {
            assert_eq!(got.left(m), classical_window(0, m), "left m={m}");
            assert_eq!(got.right(m), classical_window(4 - m, 4), "right m={m}");
        }
    }

    #[test]
    fn top_integrals_coincide_exactly() {
        let s = state(&[0.7, 1.1, 0.4, 0.9], &[0.3, -0.6, 0.9, 0.2]);
        for &z in &[0.0, 0.3, -0.8] {
            let params = ModelParams::free(4, z).with_b(vec![1.2, 0.5, -0.4, 2.0]);
            let ints = universal_integrals(&s, &params).unwrap();
            assert_eq!(ints.left(4), ints.right(4), "z={z}");
        }
    }

    #[test]
    fn single_site_casimir_labels_representation() {
        // One site: the Casimir must evaluate to b₁ identically.
        let params = ModelParams::free(1, 0.3).with_b(vec![1.2]);
        let s = state(&[0.7], &[0.4]);
        let t = generators(&s, &params).unwrap();
        assert!((casimir(&t, 0.3) - 1.2).abs() < 1e-13);
    }

    #[test]
    fn casimir_flat_point() {
        let t = GeneratorTriple {
            jm: 1.0,
            jp: 1.0,
            j3: 1.0,
        };
        assert_eq!(casimir(&t, 0.0), 0.0);
    }

    #[test]
    fn casimir_is_continuous_in_z() {
        let t = GeneratorTriple {
            jm: 1.7,
            jp: 0.9,
            j3: -0.4,
        };
        assert!((casimir(&t, 1e-8) - casimir(&t, 0.0)).abs() < 1e-7);
    }

    #[test]
    fn chain_matches_casimir_of_window_realization() {
        // Two algebraic routes to the same invariant: the expanded chain
        // formula against the Casimir of the truncated realization.
        let q = [0.7, 1.1, 0.4, 0.9];
        let p = [0.3, -0.6, 0.9, 0.2];
        let b = [1.2, 0.5, 0.0, 2.0];
        let z = 0.4;
        for m in 2..=4 {
            let chain = eval_chain_window(&q, &p, z, &b, 0, m);
            let (jm, jp, j3) = eval_generators_window(&q, &p, z, &b, 0, m);
            let via_casimir = casimir_combination(jm, jp, j3, z);
            assert!(
                ((chain - via_casimir) / chain).abs() < 1e-12,
                "m={m}: chain {chain} vs casimir {via_casimir}"
            );
            // trailing window route
            let chain_r = eval_chain_window(&q, &p, z, &b, 4 - m, 4);
            let (jm, jp, j3) = eval_generators_window(&q, &p, z, &b, 4 - m, 4);
            let via_casimir_r = casimir_combination(jm, jp, j3, z);
            assert!(((chain_r - via_casimir_r) / chain_r).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_cross_product_gives_zero_pair_term() {
        // b = 0 and parallel (q, p) on two sites: the pair term vanishes.
        let q = [0.5, 1.0];
        let p = [0.3, 0.6]; // p = 0.6 q on both sites
        let term = pair_term(&q, &p, 0.7, &[0.0, 0.0], 0, 1);
        assert_eq!(term, 0.0);
    }

    #[test]
    fn deformed_values_converge_linearly_in_z() {
        // Richardson slope across decades of z must be 1 within 10%.
        let s = state(&[0.7, 1.1, 0.4], &[0.3, -0.6, 0.9]);
        let b = vec![0.6, 0.0, 1.1];
        let value = |z: f64| {
            let params = ModelParams::free(3, z).with_b(b.clone());
            let ints = universal_integrals(&s, &params).unwrap();
            let t = generators(&s, &params).unwrap();
            (ints.left(2), ints.right(2), t.jp, t.j3)
        };
        let v0 = value(0.0);
        for (za, zb) in [(1e-4, 1e-6), (1e-6, 1e-8)] {
            let va = value(za);
            let vb = value(zb);
            let checks = [
                (va.0 - v0.0, vb.0 - v0.0),
                (va.1 - v0.1, vb.1 - v0.1),
                (va.2 - v0.2, vb.2 - v0.2),
                (va.3 - v0.3, vb.3 - v0.3),
            ];
            for (da, db) in checks {
                let slope = (da / db).abs().ln() / (za / zb).ln();
                assert!(
                    (slope - 1.0).abs() < 0.1,
                    "slope {slope} for pair ({za}, {zb})"
                );
            }
        }
    }

    #[test]
    fn right_chain_equals_left_chain_with_reversal_and_z_flip() {
        // The trailing-chain invariants equal the leading-chain ones on the
        // reversed state with the deformation sign flipped. (Reversal alone
        // does not do it: the window exponents change sign under reversal
        // and the remaining factors are even in z.)
        let q = [0.7, 1.1, 0.4, 0.9, 0.3];
        let p = [0.3, -0.6, 0.9, 0.2, -0.8];
        let b = [1.2, 0.5, -0.4, 2.0, 0.0];
        let z = 0.37;
        let s = state(&q, &p);
        let params = ModelParams::free(5, z).with_b(b.to_vec());
        let ints = universal_integrals(&s, &params).unwrap();

        let rev = s.reversed();
        let mut b_rev = b.to_vec();
        b_rev.reverse();
        let params_rev = ModelParams::free(5, -z).with_b(b_rev);
        let ints_rev = universal_integrals(&rev, &params_rev).unwrap();
        for m in 2..=5 {
            let lhs = ints.right(m);
            let rhs = ints_rev.left(m);
            assert!(
                ((lhs - rhs) / lhs).abs() < 1e-12,
                "m={m}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn generators_invariant_under_reversal_with_z_flip() {
        let q = [0.7, 1.1, 0.4];
        let p = [0.3, -0.6, 0.9];
        let b = [1.2, 0.5, -0.4];
        let s = state(&q, &p);
        let t = generators(&s, &ModelParams::free(3, 0.9).with_b(b.to_vec())).unwrap();
        let mut b_rev = b.to_vec();
        b_rev.reverse();
        let t_rev = generators(&s.reversed(), &ModelParams::free(3, -0.9).with_b(b_rev)).unwrap();
        assert!((t.jm - t_rev.jm).abs() < 1e-14);
        assert!(((t.jp - t_rev.jp) / t.jp).abs() < 1e-13);
        assert!(((t.j3 - t_rev.j3) / t.j3).abs() < 1e-13);
    }
}
