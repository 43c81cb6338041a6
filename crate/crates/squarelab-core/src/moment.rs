//! Third-moment polynomials of Bernoulli-randomized expansions of 1_V.
//!
//! chi(p) = E integral phi^3 where phi = sum X_i t_i over the terms of an
//! expansion (martingale differences, or Haar coefficients times Haar
//! functions) with independent Bernoulli(p) selectors X_i.
//!
//! Two independent computation paths are provided with exact equality as
//! the test contract: closed-form moment coefficients, and brute-force
//! enumeration over all 2^K selector configurations. No tolerances appear
//! anywhere in this module.

use num::bigint::BigInt;
use num::traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};
use crate::haar::{CoefficientMap, DyadicSet, HaarSystem};
use crate::martingale::{FiltrationTree, LeafSet, StepFunction};
use crate::poly::PolyP;

/// Largest selector count accepted by the enumeration oracle.
pub const MAX_ENUMERATION_TERMS: usize = 20;

/// A finite expansion over weighted atoms: atom masses, one value vector
/// per Bernoulli-indexed term, and the indicator of V on the atoms.
/// Martingale mode uses one term per level on the leaves; wavelet mode one
/// term per interval on the grid cells.
#[derive(Clone, Debug)]
pub struct MomentSystem {
    masses: Vec<Rational>,
    terms: Vec<Vec<ExactScalar>>,
    indicator: Vec<ExactScalar>,
}

impl MomentSystem {
    /// Per-level expansion of 1_V into martingale differences.
    pub fn from_martingale(tree: &FiltrationTree, v: &LeafSet, include_root: bool) -> Self {
        let masses = (0..tree.leaf_count())
            .map(|i| tree.leaf_mass(i).clone())
            .collect();
        let terms = tree
            .differences(v, include_root)
            .into_iter()
            .map(|d| d.values().to_vec())
            .collect();
        let indicator = tree.indicator(v).values().to_vec();
        MomentSystem {
            masses,
            terms,
            indicator,
        }
    }

    /// Per-interval expansion: one term a_I h_I per interval of the system.
    pub fn from_haar(system: &HaarSystem, v: &DyadicSet) -> Result<Self> {
        if system.resolution() != v.resolution() {
            return Err(Error::ResolutionMismatch {
                set: v.resolution(),
                grid: system.resolution(),
            });
        }
        let n = v.resolution();
        let cells = v.cell_count();
        let map = CoefficientMap::analyze(v);
        let masses = vec![Rational::pow2(-(n as i64)); cells];
        let mut terms = Vec::with_capacity(system.len());
        for interval in system.intervals() {
            let a = map.coeff(*interval);
            terms.push(
                (0..cells)
                    .map(|c| &a * &interval.haar_value(n, c))
                    .collect(),
            );
        }
        let indicator = (0..cells)
            .map(|c| {
                if v.contains(c) {
                    ExactScalar::one()
                } else {
                    ExactScalar::zero()
                }
            })
            .collect();
        Ok(MomentSystem {
            masses,
            terms,
            indicator,
        })
    }

    /// The complete truncated Haar expansion of 1_V: the mean term plus
    /// every interval of level below the resolution. The terms sum to 1_V,
    /// the wavelet analogue of including the root difference.
    pub fn from_haar_complete(v: &DyadicSet) -> Self {
        let n = v.resolution();
        let cells = v.cell_count();
        let map = CoefficientMap::analyze(v);
        let masses = vec![Rational::pow2(-(n as i64)); cells];
        let mut terms = vec![vec![ExactScalar::from_rational(map.mean().clone()); cells]];
        for interval in HaarSystem::complete(n).intervals() {
            let a = map.coeff(*interval);
            terms.push(
                (0..cells)
                    .map(|c| &a * &interval.haar_value(n, c))
                    .collect(),
            );
        }
        let indicator = (0..cells)
            .map(|c| {
                if v.contains(c) {
                    ExactScalar::one()
                } else {
                    ExactScalar::zero()
                }
            })
            .collect();
        MomentSystem {
            masses,
            terms,
            indicator,
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn atom_count(&self) -> usize {
        self.masses.len()
    }

    /// True when the terms sum to the indicator on every atom.
    pub fn is_complete(&self) -> bool {
        (0..self.atom_count()).all(|a| {
            let mut sum = ExactScalar::zero();
            for t in &self.terms {
                sum += &t[a];
            }
            sum == self.indicator[a]
        })
    }
}

/// Closed-form moment coefficients of the martingale chi:
/// M1 = sum_n E d_n^3,  M2 = 3 sum_{m<n} E d_m d_n^2.
pub fn martingale_moments(
    tree: &FiltrationTree,
    v: &LeafSet,
    include_root: bool,
) -> (ExactScalar, ExactScalar) {
    let differences = tree.differences(v, include_root);
    let mut m1 = ExactScalar::zero();
    for d in &differences {
        let cube = StepFunction::from_values(d.values().iter().map(|x| x.cube()).collect());
        m1 += &tree.expectation(&cube);
    }
    let mut cross = ExactScalar::zero();
    for n in 1..differences.len() {
        let d_n_sq: Vec<ExactScalar> =
            differences[n].values().iter().map(|x| x.square()).collect();
        for d_m in differences.iter().take(n) {
            let prod = StepFunction::from_values(
                d_m.values()
                    .iter()
                    .zip(&d_n_sq)
                    .map(|(x, y)| x * y)
                    .collect(),
            );
            cross += &tree.expectation(&prod);
        }
    }
    let m2 = cross.scale(&Rational::from_int(3));
    (m1, m2)
}

/// chi(p) = M1 p + M2 p^2 from the closed-form coefficients.
pub fn chi_exact_martingale(tree: &FiltrationTree, v: &LeafSet, include_root: bool) -> PolyP {
    let (m1, m2) = martingale_moments(tree, v, include_root);
    PolyP::quadratic(m1, m2)
}

/// Brute-force oracle: sum over all 2^K selector configurations S of
/// p^{|S|} (1-p)^{K-|S|} integral phi_S^3, expanded symbolically in p and
/// reduced. The reduction must land in degree <= 3; a higher surviving
/// coefficient is an internal error, never silently dropped.
pub fn chi_enumeration(sys: &MomentSystem) -> Result<PolyP> {
    let k = sys.term_count();
    if k > MAX_ENUMERATION_TERMS {
        return Err(Error::EnumerationTooLarge);
    }
    // size_sums[j] accumulates integral phi_S^3 over the subsets of size j.
    let mut size_sums = vec![ExactScalar::zero(); k + 1];
    let mut phi = vec![ExactScalar::zero(); sys.atom_count()];
    enumerate_subsets(sys, 0, 0, &mut phi, &mut |size, phi| {
        let mut total = ExactScalar::zero();
        for (a, v) in phi.iter().enumerate() {
            if !v.is_zero() {
                total += &v.cube().scale(&sys.masses[a]);
            }
        }
        size_sums[size] += &total;
    });

    // Coefficient of p^m in sum_j g_j p^j (1-p)^{K-j}.
    let mut coeffs = Vec::with_capacity(k + 1);
    for m in 0..=k {
        let mut c = ExactScalar::zero();
        for (j, g) in size_sums.iter().enumerate().take(m + 1) {
            if g.is_zero() {
                continue;
            }
            let mut weight = Rational::from_int(binomial(k - j, m - j));
            if (m - j) % 2 == 1 {
                weight = -weight;
            }
            c += &g.scale(&weight);
        }
        coeffs.push(c);
    }
    for (m, c) in coeffs.iter().enumerate().skip(4) {
        if !c.is_zero() {
            return Err(Error::Internal(format!(
                "enumeration produced a degree-{m} coefficient {c}"
            )));
        }
    }
    let mut out = [
        ExactScalar::zero(),
        ExactScalar::zero(),
        ExactScalar::zero(),
        ExactScalar::zero(),
    ];
    for (m, c) in coeffs.into_iter().take(4).enumerate() {
        out[m] = c;
    }
    Ok(PolyP::from_coeffs(out))
}

fn enumerate_subsets(
    sys: &MomentSystem,
    index: usize,
    size: usize,
    phi: &mut Vec<ExactScalar>,
    visit: &mut impl FnMut(usize, &[ExactScalar]),
) {
    if index == sys.term_count() {
        visit(size, phi);
        return;
    }
    enumerate_subsets(sys, index + 1, size, phi, visit);
    for (a, v) in phi.iter_mut().enumerate() {
        *v += &sys.terms[index][a];
    }
    enumerate_subsets(sys, index + 1, size + 1, phi, visit);
    for (a, v) in phi.iter_mut().enumerate() {
        *v -= &sys.terms[index][a];
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// The wavelet moment coefficients W1, W2, W3 of chi for a Haar system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentCoefficients {
    pub w1: ExactScalar,
    pub w2: ExactScalar,
    pub w3: ExactScalar,
}

impl MomentCoefficients {
    pub fn chi(&self) -> PolyP {
        PolyP::cubic(self.w1.clone(), self.w2.clone(), self.w3.clone())
    }
}

/// W1 = sum_I a_I^3 int h_I^3;
/// W2 = 3 sum_{I1 != I3} a_{I1}^2 a_{I3} int h_{I1}^2 h_{I3};
/// W3 = sum over ordered triples of distinct intervals of the product of
/// coefficients times int h h h. The W3 sum is evaluated over unordered
/// triples with the multiplicity 6 folded in, since the integrand is
/// symmetric. All integrals are exact cell sums at the resolution: products
/// of Haar functions are constant on the cells of the finest level present.
pub fn wavelet_moment_coefficients(
    system: &HaarSystem,
    v: &DyadicSet,
) -> Result<MomentCoefficients> {
    if system.resolution() != v.resolution() {
        return Err(Error::ResolutionMismatch {
            set: v.resolution(),
            grid: system.resolution(),
        });
    }
    let n = v.resolution();
    let map = CoefficientMap::analyze(v);
    let intervals = system.intervals();
    let coeffs: Vec<ExactScalar> = intervals.iter().map(|i| map.coeff(*i)).collect();

    let mut w1 = ExactScalar::zero();
    for (idx, interval) in intervals.iter().enumerate() {
        let integral = cell_product_integral(n, &[*interval, *interval, *interval]);
        if !integral.is_zero() {
            w1 += &(&coeffs[idx].cube() * &integral);
        }
    }

    let mut w2 = ExactScalar::zero();
    for (i1, int1) in intervals.iter().enumerate() {
        for (i3, int3) in intervals.iter().enumerate() {
            if i1 == i3 {
                continue;
            }
            let integral = cell_product_integral(n, &[*int1, *int1, *int3]);
            if !integral.is_zero() {
                w2 += &(&(&coeffs[i1].square() * &coeffs[i3]) * &integral);
            }
        }
    }
    w2 = w2.scale(&Rational::from_int(3));

    let mut w3 = ExactScalar::zero();
    for i in 0..intervals.len() {
        for j in i + 1..intervals.len() {
            for k in j + 1..intervals.len() {
                let integral =
                    cell_product_integral(n, &[intervals[i], intervals[j], intervals[k]]);
                if !integral.is_zero() {
                    let prod = &(&coeffs[i] * &coeffs[j]) * &coeffs[k];
                    w3 += &(&prod * &integral).scale(&Rational::from_int(6));
                }
            }
        }
    }

    Ok(MomentCoefficients { w1, w2, w3 })
}

/// Exact integral of a product of Haar functions over [0,1), by cell
/// summation restricted to the common support.
fn cell_product_integral(
    resolution: u32,
    intervals: &[crate::haar::DyadicInterval],
) -> ExactScalar {
    let mut start = 0usize;
    let mut end = 1usize << resolution;
    for i in intervals {
        let r = i.cell_range(resolution);
        start = start.max(r.start);
        end = end.min(r.end);
    }
    if start >= end {
        return ExactScalar::zero();
    }
    let weight = Rational::pow2(-(resolution as i64));
    let mut total = ExactScalar::zero();
    for cell in start..end {
        let mut prod = ExactScalar::one();
        for i in intervals {
            prod = &prod * &i.haar_value(resolution, cell);
        }
        total += &prod.scale(&weight);
    }
    total
}

/// int (Pi 1_V)^3 where Pi projects onto the span of the system: the
/// independent route to chi(1) in wavelet mode.
pub fn projection_cube_integral(system: &HaarSystem, v: &DyadicSet) -> Result<ExactScalar> {
    if system.resolution() != v.resolution() {
        return Err(Error::ResolutionMismatch {
            set: v.resolution(),
            grid: system.resolution(),
        });
    }
    let n = v.resolution();
    let map = CoefficientMap::analyze(v);
    let mut values = vec![ExactScalar::zero(); v.cell_count()];
    for interval in system.intervals() {
        let a = map.coeff(*interval);
        if a.is_zero() {
            continue;
        }
        for (cell, value) in values.iter_mut().enumerate() {
            *value += &(&a * &interval.haar_value(n, cell));
        }
    }
    let weight = Rational::pow2(-(n as i64));
    let mut total = ExactScalar::zero();
    for value in &values {
        total += &value.cube().scale(&weight);
    }
    Ok(total)
}

/// Pointwise defect E_X (phi - p 1_V)^2 - p(1-p) (S 1_V)^2, computed by
/// direct enumeration over selector configurations. Identically zero for
/// every complete expansion and rational p; requires the expansion to sum
/// to the indicator.
pub fn variance_identity_check(sys: &MomentSystem, p: &Rational) -> Result<Vec<ExactScalar>> {
    if !sys.is_complete() {
        return Err(Error::IncompleteExpansion);
    }
    let k = sys.term_count();
    if k > MAX_ENUMERATION_TERMS {
        return Err(Error::EnumerationTooLarge);
    }
    let q = &Rational::one() - p;
    // weights[j] = p^j (1-p)^{K-j}
    let mut weights = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let mut w = Rational::one();
        for _ in 0..j {
            w = &w * p;
        }
        for _ in j..k {
            w = &w * &q;
        }
        weights.push(w);
    }

    let atoms = sys.atom_count();
    let target: Vec<ExactScalar> = sys.indicator.iter().map(|ind| ind.scale(p)).collect();
    let mut second_moment = vec![ExactScalar::zero(); atoms];
    let mut phi = vec![ExactScalar::zero(); atoms];
    enumerate_subsets(sys, 0, 0, &mut phi, &mut |size, phi| {
        for (a, v) in phi.iter().enumerate() {
            let dev = v - &target[a];
            if !dev.is_zero() {
                second_moment[a] += &dev.square().scale(&weights[size]);
            }
        }
    });

    let pq = p * &q;
    let defect = (0..atoms)
        .map(|a| {
            let mut sq = ExactScalar::zero();
            for t in &sys.terms {
                sq += &t[a].square();
            }
            &second_moment[a] - &sq.scale(&pq)
        })
        .collect();
    Ok(defect)
}

/// Third central moment of a Bernoulli(p) variable: p(1-p)(1-2p).
pub fn bernoulli_third_moment(p: &Rational) -> Result<ExactScalar> {
    if p.is_negative() || p > &Rational::one() {
        return Err(Error::ParameterOutOfRange(format!(
            "Bernoulli parameter {p} outside [0,1]"
        )));
    }
    let one = Rational::one();
    let value = &(p * &(&one - p)) * &(&one - &(&Rational::from_int(2) * p));
    Ok(ExactScalar::from_rational(value))
}

/// Residual data of the concluding linear system: exact values of
/// r1 = P(V) + 2 M1, r2 = M2 + 3 M1, r3 = P(V)/8 - M1/2 - M2/4, the local
/// energy ratio, and the residual polynomial
/// R(p) = chi(p) - [(P(V) + 2 M1) p^3 - 3 M1 p^2 + M1 p] = r2 p^2 - r1 p^3.
///
/// The 3x3 system behind (r1, r2, r3) is exactly singular: the residual
/// functionals obey r3 = r1/8 - r2/4 identically in (M1, M2, P(V)), so no
/// fixed rational combination of them recovers P(V). The certificate
/// verifies that dependency, the completeness identity P(V) = M1 + M2
/// (= chi(1)), and the closed form of R(p), all as exact equalities.
#[derive(Clone, Debug)]
pub struct ProofCertificate {
    pub pv: Rational,
    pub m1: ExactScalar,
    pub m2: ExactScalar,
    pub eta_ratio: ExactScalar,
    pub r1: ExactScalar,
    pub r2: ExactScalar,
    pub r3: ExactScalar,
    pub residual_poly: PolyP,
}

impl ProofCertificate {
    /// All exact identities the residual data must satisfy.
    pub fn verify(&self) -> bool {
        let dependency = &self.r1.scale(&Rational::new(1, 8).expect("static"))
            - &self.r2.scale(&Rational::new(1, 4).expect("static"));
        let completeness = &self.m1 + &self.m2;
        let closed_form = PolyP::cubic(ExactScalar::zero(), self.r2.clone(), -&self.r1);
        dependency == self.r3
            && completeness == ExactScalar::from_rational(self.pv.clone())
            && closed_form == self.residual_poly
    }

    pub fn max_abs_residual(&self) -> ExactScalar {
        self.r1.abs().max(self.r2.abs()).max(self.r3.abs())
    }

    pub fn float_summary(&self) -> Vec<(String, f64)> {
        vec![
            ("pv".into(), self.pv.to_f64()),
            ("m1".into(), self.m1.to_f64()),
            ("m2".into(), self.m2.to_f64()),
            ("eta_ratio".into(), self.eta_ratio.to_f64()),
            ("r1".into(), self.r1.to_f64()),
            ("r2".into(), self.r2.to_f64()),
            ("r3".into(), self.r3.to_f64()),
        ]
    }
}

/// Exact residuals of the concluding approximate equations, root included.
pub fn proof_certificate(tree: &FiltrationTree, v: &LeafSet) -> Result<ProofCertificate> {
    let energy = tree.local_energy(v, true)?;
    let (m1, m2) = martingale_moments(tree, v, true);
    let pv_scalar = ExactScalar::from_rational(energy.pv.clone());
    let r1 = &pv_scalar + &m1.scale(&Rational::from_int(2));
    let r2 = &m2 + &m1.scale(&Rational::from_int(3));
    let r3 = &(&pv_scalar.scale(&Rational::new(1, 8)?) - &m1.scale(&Rational::new(1, 2)?))
        - &m2.scale(&Rational::new(1, 4)?);

    // R(p) = chi(p) - [(pv + 2 M1) p^3 - 3 M1 p^2 + M1 p].
    let chi = PolyP::quadratic(m1.clone(), m2.clone());
    let approx = PolyP::cubic(m1.clone(), -&m1.scale(&Rational::from_int(3)), r1.clone());
    let residual_poly =
        PolyP::from_coeffs(std::array::from_fn(|k| chi.coeff(k) - approx.coeff(k)));

    Ok(ProofCertificate {
        pv: energy.pv,
        m1,
        m2,
        eta_ratio: energy.ratio,
        r1,
        r2,
        r3,
        residual_poly,
    })
}

/// Diagnostics for the large-coefficient family D' = { I : |a_I| >=
/// eta^{1/3} sqrt|I| }. Membership is decided by the equivalent rational
/// comparison (a_I^2)^3 >= eta^2 |I|^3, avoiding root extraction.
#[derive(Clone, Debug)]
pub struct DprimeDiagnostics {
    /// sum of a_I^2 over D'
    pub dprime_mass: Rational,
    /// sum over D' of int |a_I|^3 |h_I|^3
    pub in_mass: ExactScalar,
    /// the same sum over the complement of D'
    pub out_mass: ExactScalar,
    pub dprime_count: usize,
}

impl DprimeDiagnostics {
    pub fn float_summary(&self) -> Vec<(String, f64)> {
        vec![
            ("dprime_mass".into(), self.dprime_mass.to_f64()),
            ("in_mass".into(), self.in_mass.to_f64()),
            ("out_mass".into(), self.out_mass.to_f64()),
        ]
    }
}

pub fn dprime_diagnostics(
    system: &HaarSystem,
    v: &DyadicSet,
    eta: &Rational,
) -> Result<DprimeDiagnostics> {
    if !eta.is_positive() {
        return Err(Error::ParameterOutOfRange(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let map = CoefficientMap::analyze(v);
    let eta_sq = eta.square();
    let mut dprime_mass = Rational::zero();
    let mut in_mass = ExactScalar::zero();
    let mut out_mass = ExactScalar::zero();
    let mut dprime_count = 0usize;
    for interval in system.intervals() {
        let a = map.coeff(*interval);
        let a_sq = a
            .square()
            .as_rational()
            .expect("squared Haar coefficient is rational");
        // |I|^3 = 2^{-3j}
        let bound = &eta_sq * &Rational::pow2(-3 * (interval.level() as i64));
        let member = &a_sq.square() * &a_sq >= bound;
        // int |h_I|^3 = 2^{j/2}
        let abs_term = &a.abs().cube() * &ExactScalar::pow2_half(interval.level() as i64);
        if member {
            dprime_mass += &a_sq;
            in_mass += &abs_term;
            dprime_count += 1;
        } else {
            out_mass += &abs_term;
        }
    }
    Ok(DprimeDiagnostics {
        dprime_mass,
        in_mass,
        out_mass,
        dprime_count,
    })
}
