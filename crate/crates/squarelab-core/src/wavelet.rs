//! Floating-point wavelet layer: grid-sampled indicators, periodized
//! orthogonal filter banks, the wavelet square function, and Monte Carlo
//! estimation of the third-moment polynomial.
//!
//! The Haar filter path reproduces the exact Haar module wherever the two
//! overlap; that agreement is the contract that licenses trusting the
//! smooth Daubechies filters, whose taps come from the standard published
//! tables and are validated by the orthonormality invariant rather than
//! trusted.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::haar::DyadicSet;

/// Orthonormal lowpass taps; the highpass is derived by the quadrature
/// mirror rule with the sign fixed so that the Haar detail matches the
/// exact module's h_I = |I|^{-1/2}(1_{I+} - 1_{I-}) orientation.
#[derive(Clone, Debug)]
pub struct WaveletFilter {
    name: String,
    lowpass: Vec<f64>,
    vanishing_moments: usize,
}

impl WaveletFilter {
    pub fn haar() -> WaveletFilter {
        WaveletFilter {
            name: "haar".into(),
            lowpass: vec![
                std::f64::consts::FRAC_1_SQRT_2,
                std::f64::consts::FRAC_1_SQRT_2,
            ],
            vanishing_moments: 1,
        }
    }

    /// Four-tap Daubechies filter, two vanishing moments. The taps are the
    /// standard (1 +- sqrt 3)-form values, evaluated here rather than
    /// copied from a truncated table so that orthonormality holds to
    /// machine precision.
    pub fn db4() -> WaveletFilter {
        let s3 = 3f64.sqrt();
        let norm = 4.0 * 2f64.sqrt();
        WaveletFilter {
            name: "db4".into(),
            lowpass: vec![
                (1.0 + s3) / norm,
                (3.0 + s3) / norm,
                (3.0 - s3) / norm,
                (1.0 - s3) / norm,
            ],
            vanishing_moments: 2,
        }
    }

    /// Six-tap Daubechies filter, three vanishing moments, from the
    /// standard closed form in sqrt 10 and sqrt(5 + 2 sqrt 10).
    pub fn db6() -> WaveletFilter {
        let a = 10f64.sqrt();
        let b = (5.0 + 2.0 * a).sqrt();
        let norm = 16.0 * 2f64.sqrt();
        WaveletFilter {
            name: "db6".into(),
            lowpass: vec![
                (1.0 + a + b) / norm,
                (5.0 + a + 3.0 * b) / norm,
                (10.0 - 2.0 * a + 2.0 * b) / norm,
                (10.0 - 2.0 * a - 2.0 * b) / norm,
                (5.0 + a - 3.0 * b) / norm,
                (1.0 + a - b) / norm,
            ],
            vanishing_moments: 3,
        }
    }

    pub fn by_name(name: &str) -> Result<WaveletFilter> {
        match name {
            "haar" => Ok(WaveletFilter::haar()),
            "db4" => Ok(WaveletFilter::db4()),
            "db6" => Ok(WaveletFilter::db6()),
            other => Err(Error::Parse(format!(
                "unknown filter {other:?}; expected haar, db4, or db6"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    pub fn support_len(&self) -> usize {
        self.lowpass.len()
    }

    /// g[k] = (-1)^{k+1} h[L-1-k]: for Haar this gives detail
    /// (s_right - s_left)/sqrt(2), matching the exact sign convention.
    pub fn highpass(&self) -> Vec<f64> {
        let l = self.lowpass.len();
        (0..l)
            .map(|k| {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                sign * self.lowpass[l - 1 - k]
            })
            .collect()
    }
}

/// Samples over [0,1): value i holds the function on [i/G, (i+1)/G).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSignal {
    values: Vec<f64>,
}

impl GridSignal {
    pub fn new(values: Vec<f64>) -> Result<GridSignal> {
        if !values.len().is_power_of_two() {
            return Err(Error::BadGridLength);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("grid signal holds a non-finite value".into()));
        }
        Ok(GridSignal { values })
    }

    /// 1_V sampled at grid exponent g >= the set resolution.
    pub fn from_dyadic_set(v: &DyadicSet, grid_exponent: u32) -> Result<GridSignal> {
        if v.resolution() > grid_exponent {
            return Err(Error::ResolutionMismatch {
                set: v.resolution(),
                grid: grid_exponent,
            });
        }
        let len = 1usize << grid_exponent;
        let stride = 1usize << (grid_exponent - v.resolution());
        let values = (0..len)
            .map(|i| if v.contains(i / stride) { 1.0 } else { 0.0 })
            .collect();
        Ok(GridSignal { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_exponent(&self) -> u32 {
        self.values.len().trailing_zeros()
    }

    /// l2 norm squared of the samples.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Integral over [0,1) of the represented step function.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Cascade coefficients: details[k] holds step k+1 of the cascade (step 1
/// is the finest scale), approx the remaining lowpass band.
#[derive(Clone, Debug)]
pub struct DwtCoeffs {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
}

impl DwtCoeffs {
    pub fn energy(&self) -> f64 {
        self.approx.iter().map(|v| v * v).sum::<f64>()
            + self
                .details
                .iter()
                .map(|d| d.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
    }

    pub fn detail_count(&self) -> usize {
        self.details.iter().map(Vec::len).sum()
    }
}

fn analysis_step(signal: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let half = n / 2;
    let h = filter.lowpass();
    let g = filter.highpass();
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&hk, &gk)) in h.iter().zip(&g).enumerate() {
            let s = signal[(2 * i + k) % n];
            a += hk * s;
            d += gk * s;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &WaveletFilter) -> Vec<f64> {
    let half = approx.len();
    let n = half * 2;
    let h = filter.lowpass();
    let g = filter.highpass();
    let mut out = vec![0.0; n];
    for i in 0..half {
        for (k, (&hk, &gk)) in h.iter().zip(&g).enumerate() {
            out[(2 * i + k) % n] += hk * approx[i] + gk * detail[i];
        }
    }
    out
}

/// Periodized forward transform: `levels` cascade steps on the lowpass band.
pub fn dwt_forward(signal: &GridSignal, filter: &WaveletFilter, levels: u32) -> Result<DwtCoeffs> {
    if levels > signal.grid_exponent() {
        return Err(Error::TooManyLevels);
    }
    let mut approx = signal.values().to_vec();
    let mut details = Vec::with_capacity(levels as usize);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, filter);
        details.push(d);
        approx = a;
    }
    Ok(DwtCoeffs { approx, details })
}

/// Inverse of `dwt_forward`; exact up to floating-point roundoff.
pub fn dwt_inverse(coeffs: &DwtCoeffs, filter: &WaveletFilter) -> Result<GridSignal> {
    let mut approx = coeffs.approx.clone();
    for detail in coeffs.details.iter().rev() {
        if detail.len() != approx.len() {
            return Err(Error::Parse(
                "detail band length does not match the cascade".into(),
            ));
        }
        approx = synthesis_step(&approx, detail, filter);
    }
    GridSignal::new(approx)
}

/// Samples of sum_I <1_V, w_I>^2 w_I(x)^2 over the cascade's detail bands.
/// In sample coordinates the level scalings cancel, so the sum needs only
/// the l2 coefficients and the unit impulse response of each band; basis
/// functions within a band are circular shifts by 2^step.
pub fn smooth_square_function(
    v: &DyadicSet,
    filter: &WaveletFilter,
    grid_exponent: u32,
    levels: u32,
) -> Result<GridSignal> {
    let signal = GridSignal::from_dyadic_set(v, grid_exponent)?;
    let coeffs = dwt_forward(&signal, filter, levels)?;
    let n = signal.len();
    let mut out = vec![0.0; n];
    for (step_index, detail) in coeffs.details.iter().enumerate() {
        let step = step_index + 1;
        let impulse = band_impulse(filter, grid_exponent, step)?;
        let shift = 1usize << step;
        for (pos, &c) in detail.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let c2 = c * c;
            let offset = pos * shift;
            for (x, w) in impulse.iter().enumerate() {
                if *w != 0.0 {
                    out[(x + offset) % n] += c2 * w * w;
                }
            }
        }
    }
    GridSignal::new(out)
}

/// Unit impulse response of one detail band: the sampled wavelet at
/// position zero of the given cascade step.
fn band_impulse(filter: &WaveletFilter, grid_exponent: u32, step: usize) -> Result<Vec<f64>> {
    let mut details: Vec<Vec<f64>> = Vec::new();
    let mut len = 1usize << grid_exponent;
    for s in 1..=step {
        len /= 2;
        let mut band = vec![0.0; len];
        if s == step {
            band[0] = 1.0;
        }
        details.push(band);
    }
    let coeffs = DwtCoeffs {
        approx: vec![0.0; len],
        details,
    };
    Ok(dwt_inverse(&coeffs, filter)?.values().to_vec())
}

/// Monte Carlo estimate of chi(p) = E int phi^3 for the random projection
/// phi onto Bernoulli-selected detail coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Each trial draws its selectors from an independent ChaCha8 stream
/// derived from (seed, trial index), so the result is identical for any
/// partitioning of the trial range across workers.
pub fn chi_monte_carlo(
    v: &DyadicSet,
    filter: &WaveletFilter,
    grid_exponent: u32,
    levels: u32,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange(format!(
            "Bernoulli parameter {p} outside [0,1]"
        )));
    }
    if trials < 100 {
        return Err(Error::ParameterOutOfRange(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    let signal = GridSignal::from_dyadic_set(v, grid_exponent)?;
    let coeffs = dwt_forward(&signal, filter, levels)?;
    let n = signal.len() as f64;

    // Welford accumulation: exact zero spread for degenerate p where every
    // trial draws the same configuration.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut masked = DwtCoeffs {
            approx: vec![0.0; coeffs.approx.len()],
            details: coeffs.details.clone(),
        };
        for band in &mut masked.details {
            for c in band.iter_mut() {
                if !rng.random_bool(p) {
                    *c = 0.0;
                }
            }
        }
        let phi = dwt_inverse(&masked, filter)?;
        let integral: f64 = phi.values().iter().map(|x| x * x * x).sum::<f64>() / n;
        let delta = integral - mean;
        mean += delta / (trial + 1) as f64;
        m2 += delta * (integral - mean);
    }
    let t = trials as f64;
    let variance = (m2 / (t - 1.0)).max(0.0);
    Ok(MonteCarloEstimate {
        estimate: mean,
        stderr: (variance / t).sqrt(),
        trials,
        seed,
    })
}

/// int_V s dx for a sampled function and a dyadic set at coarser or equal
/// resolution.
pub fn integrate_over_set(signal: &GridSignal, v: &DyadicSet) -> Result<f64> {
    let g = signal.grid_exponent();
    if v.resolution() > g {
        return Err(Error::ResolutionMismatch {
            set: v.resolution(),
            grid: g,
        });
    }
    let stride = 1usize << (g - v.resolution());
    let mut total = 0.0;
    for (i, value) in signal.values().iter().enumerate() {
        if v.contains(i / stride) {
            total += value;
        }
    }
    Ok(total / signal.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Rational;
    use crate::gen::{random_dyadic_set, rng_from_seed};
    use crate::haar::{dyadic_square_function, CoefficientMap, DyadicInterval};

    fn random_signal(rng: &mut ChaCha8Rng, grid_exponent: u32) -> GridSignal {
        GridSignal::new(
            (0..1usize << grid_exponent)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_reconstruction_and_parseval() {
        let mut rng = rng_from_seed(77);
        for filter in [
            WaveletFilter::haar(),
            WaveletFilter::db4(),
            WaveletFilter::db6(),
        ] {
            let signal = random_signal(&mut rng, 8);
            let coeffs = dwt_forward(&signal, &filter, 5).unwrap();
            let back = dwt_inverse(&coeffs, &filter).unwrap();
            let max_err = signal
                .values()
                .iter()
                .zip(back.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(
                max_err <= 1e-10,
                "{}: reconstruction error {max_err}",
                filter.name()
            );
            let energy_err = (signal.energy() - coeffs.energy()).abs();
            assert!(
                energy_err <= 1e-10,
                "{}: Parseval defect {energy_err}",
                filter.name()
            );
        }
    }

    #[test]
    fn constant_signal_has_no_detail() {
        for filter in [
            WaveletFilter::haar(),
            WaveletFilter::db4(),
            WaveletFilter::db6(),
        ] {
            let signal = GridSignal::new(vec![0.7; 64]).unwrap();
            let coeffs = dwt_forward(&signal, &filter, 4).unwrap();
            for band in &coeffs.details {
                for c in band {
                    assert!(c.abs() <= 1e-12, "{}: leaked detail {c}", filter.name());
                }
            }
        }
    }

    #[test]
    fn haar_details_match_exact_coefficients() {
        // l2 detail coefficients, rescaled by 2^{-g/2}, are the L2 Haar
        // coefficients of the exact module; abs error <= 1e-12.
        let mut rng = rng_from_seed(5);
        let g = 5u32;
        for _ in 0..10 {
            let v = random_dyadic_set(&mut rng, 3);
            let signal = GridSignal::from_dyadic_set(&v, g).unwrap();
            let coeffs = dwt_forward(&signal, &WaveletFilter::haar(), g).unwrap();
            let map = CoefficientMap::analyze(&v);
            let scale = (1f64 / (1u64 << g) as f64).sqrt();
            for (step_index, band) in coeffs.details.iter().enumerate() {
                let level = g - (step_index as u32 + 1);
                for (i, &c) in band.iter().enumerate() {
                    let rendered = c * scale;
                    let exact = if level < v.resolution() {
                        map.coeff(DyadicInterval::new(level, i as u64).unwrap())
                            .to_f64()
                    } else {
                        0.0
                    };
                    assert!(
                        (rendered - exact).abs() <= 1e-12,
                        "level {level} index {i}: {rendered} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn smooth_square_function_haar_matches_exact() {
        let mut rng = rng_from_seed(9);
        for _ in 0..5 {
            let v = random_dyadic_set(&mut rng, 3);
            let g = 5u32;
            let sq = smooth_square_function(&v, &WaveletFilter::haar(), g, g).unwrap();
            let exact = dyadic_square_function(&v, false);
            let stride = 1usize << (g - v.resolution());
            for (x, value) in sq.values().iter().enumerate() {
                let expected = exact[x / stride].to_f64();
                assert!(
                    (value - expected).abs() <= 1e-10,
                    "sample {x}: {value} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn smooth_square_function_empty_set_is_zero() {
        let v = DyadicSet::empty(3).unwrap();
        let sq = smooth_square_function(&v, &WaveletFilter::db4(), 6, 4).unwrap();
        assert!(sq.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn smooth_square_function_is_nonnegative_and_integrates_to_parseval() {
        let mut rng = rng_from_seed(21);
        let v = random_dyadic_set(&mut rng, 4);
        let g = 7u32;
        let levels = 5u32;
        let sq = smooth_square_function(&v, &WaveletFilter::db4(), g, levels).unwrap();
        assert!(sq.values().iter().all(|&x| x >= 0.0));
        let coeffs = dwt_forward(
            &GridSignal::from_dyadic_set(&v, g).unwrap(),
            &WaveletFilter::db4(),
            levels,
        )
        .unwrap();
        let detail_energy: f64 = coeffs
            .details
            .iter()
            .map(|band| band.iter().map(|c| c * c).sum::<f64>())
            .sum::<f64>()
            / (1u64 << g) as f64;
        assert!((sq.integral() - detail_energy).abs() <= 1e-9);
    }

    #[test]
    fn grid_refinement_stability_db4() {
        // int_V S^2 / |V| at g = 12 must be stable to three significant
        // digits under one refinement.
        let ratio_at = |v: &DyadicSet, g: u32| {
            let sq = smooth_square_function(v, &WaveletFilter::db4(), g, g).unwrap();
            integrate_over_set(&sq, v).unwrap() / v.measure().to_f64()
        };
        // V = [0,1/2): the shift x -> x + 1/2 of the periodized system maps
        // 1_V to 1 - 1_V, so the detail energy splits evenly and the ratio
        // is exactly (|V| - |V|^2) / 2 / |V| = 1/4 at every grid.
        let half = DyadicSet::from_cells(1, &[0]).unwrap();
        assert!((ratio_at(&half, 12) - 0.25).abs() <= 1e-12);
        assert!((ratio_at(&half, 13) - 0.25).abs() <= 1e-12);
        // An asymmetric set converges at first order; by g = 12 one more
        // refinement moves the value by under half a unit in the third
        // significant digit.
        let thin = DyadicSet::from_cells(2, &[0]).unwrap();
        let coarse = ratio_at(&thin, 12);
        let fine = ratio_at(&thin, 13);
        assert!(
            ((coarse - fine) / fine).abs() < 5e-4,
            "ratio moved from {coarse} to {fine}"
        );
    }

    #[test]
    fn monte_carlo_matches_exact_chi_for_haar() {
        // Complete Haar system at N = 3 (7 intervals) on its own grid.
        let mut rng = rng_from_seed(13);
        let v = random_dyadic_set(&mut rng, 3);
        let system = crate::haar::HaarSystem::complete(3);
        let w = crate::moment::wavelet_moment_coefficients(&system, &v).unwrap();
        for (p_num, p_den) in [(1i64, 4i64), (1, 2), (3, 4)] {
            let p = Rational::new(p_num, p_den).unwrap();
            let exact = w.chi().eval(&p).to_f64();
            let mc =
                chi_monte_carlo(&v, &WaveletFilter::haar(), 3, 3, p.to_f64(), 4000, 99).unwrap();
            let slack = 4.0 * mc.stderr + 1e-12;
            assert!(
                (mc.estimate - exact).abs() <= slack,
                "p={p}: estimate {} vs exact {exact} (stderr {})",
                mc.estimate,
                mc.stderr
            );
        }
    }

    #[test]
    fn monte_carlo_degenerate_parameters() {
        let v = DyadicSet::from_cells(2, &[0, 3]).unwrap();
        let zero = chi_monte_carlo(&v, &WaveletFilter::haar(), 4, 4, 0.0, 200, 7).unwrap();
        assert_eq!(zero.estimate, 0.0);
        assert_eq!(zero.stderr, 0.0);

        let one = chi_monte_carlo(&v, &WaveletFilter::haar(), 4, 4, 1.0, 200, 7).unwrap();
        // All selectors on: phi is the projection onto the detail span.
        // The finer-level coefficients vanish for a resolution-2 set, so
        // the projection matches the complete N = 2 system.
        let system = crate::haar::HaarSystem::complete(2);
        let expected = crate::moment::projection_cube_integral(&system, &v)
            .unwrap()
            .to_f64();
        assert!((one.estimate - expected).abs() <= 1e-10);
        assert_eq!(one.stderr, 0.0);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_seed_sensitive() {
        let v = DyadicSet::from_cells(2, &[1, 2]).unwrap();
        let a = chi_monte_carlo(&v, &WaveletFilter::db4(), 5, 3, 0.5, 300, 2024).unwrap();
        let b = chi_monte_carlo(&v, &WaveletFilter::db4(), 5, 3, 0.5, 300, 2024).unwrap();
        assert_eq!(a, b);
        let c = chi_monte_carlo(&v, &WaveletFilter::db4(), 5, 3, 0.5, 300, 2025).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn parameter_validation() {
        let v = DyadicSet::from_cells(2, &[0]).unwrap();
        assert!(chi_monte_carlo(&v, &WaveletFilter::haar(), 4, 4, 1.5, 200, 1).is_err());
        assert!(chi_monte_carlo(&v, &WaveletFilter::haar(), 4, 4, 0.5, 10, 1).is_err());
        assert!(matches!(
            dwt_forward(
                &GridSignal::new(vec![0.0; 8]).unwrap(),
                &WaveletFilter::haar(),
                4
            ),
            Err(Error::TooManyLevels)
        ));
        assert!(matches!(
            GridSignal::new(vec![0.0; 6]),
            Err(Error::BadGridLength)
        ));
        assert!(GridSignal::new(vec![f64::NAN; 4]).is_err());
        assert!(WaveletFilter::by_name("db8").is_err());
        assert!(matches!(
            GridSignal::from_dyadic_set(&DyadicSet::from_cells(4, &[0]).unwrap(), 3),
            Err(Error::ResolutionMismatch { .. })
        ));
    }
}
