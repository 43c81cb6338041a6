//! Dyadic intervals on [0,1), Haar coefficients of indicator sets, the
//! dyadic square function, and the Haar shift operator T.
//!
//! Sign conventions, fixed once for byte-stable outputs:
//! - h_I = |I|^{-1/2} (1_{I+} - 1_{I-}) with I- the left and I+ the right
//!   child of I;
//! - T h_{I+} = h_{I-} and T h_{I-} = -h_{I+}, so T is antisymmetric with
//!   T^2 = -I on the paired span. The mean and the top Haar function (which
//!   has no sibling inside [0,1)) are annihilated; every reported quantity
//!   is invariant under the opposite orientation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};
use crate::martingale::{mask_to_hex, parse_hex_mask, parse_index_list};

/// Dyadic interval [k 2^-j, (k+1) 2^-j), written `j:k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicInterval {
    level: u32,
    index: u64,
}

impl DyadicInterval {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > 63 || index >= (1u64 << level) {
            return Err(Error::Parse(format!(
                "interval index {index} out of range at level {level}"
            )));
        }
        Ok(DyadicInterval { level, index })
    }

    pub fn unit() -> Self {
        DyadicInterval { level: 0, index: 0 }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Left child I-.
    pub fn left(&self) -> DyadicInterval {
        DyadicInterval {
            level: self.level + 1,
            index: 2 * self.index,
        }
    }

    /// Right child I+.
    pub fn right(&self) -> DyadicInterval {
        DyadicInterval {
            level: self.level + 1,
            index: 2 * self.index + 1,
        }
    }

    pub fn parent(&self) -> Option<DyadicInterval> {
        if self.level == 0 {
            None
        } else {
            Some(DyadicInterval {
                level: self.level - 1,
                index: self.index / 2,
            })
        }
    }

    pub fn sibling(&self) -> Option<DyadicInterval> {
        if self.level == 0 {
            None
        } else {
            Some(DyadicInterval {
                level: self.level,
                index: self.index ^ 1,
            })
        }
    }

    pub fn is_left_child(&self) -> bool {
        self.level > 0 && self.index.is_multiple_of(2)
    }

    pub fn measure(&self) -> Rational {
        Rational::pow2(-(self.level as i64))
    }

    /// Cells covered at the given resolution.
    pub fn cell_range(&self, resolution: u32) -> std::ops::Range<usize> {
        debug_assert!(self.level <= resolution);
        let width = 1usize << (resolution - self.level);
        let start = self.index as usize * width;
        start..start + width
    }

    /// Value of h_I on a cell at the given resolution: +-2^{j/2} on the
    /// halves of I, 0 outside.
    pub fn haar_value(&self, resolution: u32, cell: usize) -> ExactScalar {
        let range = self.cell_range(resolution);
        if !range.contains(&cell) {
            return ExactScalar::zero();
        }
        let mid = range.start + (range.end - range.start) / 2;
        let amp = ExactScalar::pow2_half(self.level as i64);
        if cell >= mid {
            amp
        } else {
            -amp
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

impl FromStr for DyadicInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (j, k) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("interval spec must be j:k, got {s:?}")))?;
        let level = j
            .trim()
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("bad level {j:?}: {e}")))?;
        let index = k
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("bad index {k:?}: {e}")))?;
        DyadicInterval::new(level, index)
    }
}

/// Subset of [0,1) resolved on 2^N equal cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicSet {
    resolution: u32,
    cells: Vec<bool>,
}

impl DyadicSet {
    pub fn new(resolution: u32, cells: Vec<bool>) -> Result<Self> {
        if resolution > 24 {
            return Err(Error::ParameterOutOfRange(format!(
                "resolution {resolution} exceeds the supported 24"
            )));
        }
        if cells.len() != 1usize << resolution {
            return Err(Error::Parse(format!(
                "expected {} cells, got {}",
                1usize << resolution,
                cells.len()
            )));
        }
        Ok(DyadicSet { resolution, cells })
    }

    pub fn empty(resolution: u32) -> Result<Self> {
        DyadicSet::new(resolution, vec![false; 1usize << resolution])
    }

    pub fn full(resolution: u32) -> Result<Self> {
        DyadicSet::new(resolution, vec![true; 1usize << resolution])
    }

    pub fn from_cells(resolution: u32, indices: &[u64]) -> Result<Self> {
        let mut cells = vec![false; 1usize << resolution];
        for &i in indices {
            *cells
                .get_mut(i as usize)
                .ok_or_else(|| Error::Parse(format!("cell {i} out of range")))? = true;
        }
        DyadicSet::new(resolution, cells)
    }

    /// One dyadic interval as a set at the given resolution.
    pub fn from_interval(resolution: u32, interval: DyadicInterval) -> Result<Self> {
        if interval.level() > resolution {
            return Err(Error::BelowResolution);
        }
        let mut cells = vec![false; 1usize << resolution];
        for c in interval.cell_range(resolution) {
            cells[c] = true;
        }
        DyadicSet::new(resolution, cells)
    }

    /// Parse `N=4;mask=0xA5C3` (bit i of the mask selects cell i) or
    /// `N=4;cells=0,2,5`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (resolution, body) = split_resolution_spec(spec)?;
        if let Some(hex) = body.strip_prefix("mask=") {
            let mask = parse_hex_mask(hex)?;
            if mask.bits() > (1u64 << resolution) {
                return Err(Error::Parse(format!(
                    "mask wider than 2^{resolution} cells"
                )));
            }
            let cells = (0..1usize << resolution)
                .map(|i| mask.bit(i as u64))
                .collect();
            DyadicSet::new(resolution, cells)
        } else if let Some(list) = body.strip_prefix("cells=") {
            DyadicSet::from_cells(resolution, &parse_index_list(list)?)
        } else {
            Err(Error::Parse(format!(
                "set spec needs mask= or cells=, got {body:?}"
            )))
        }
    }

    pub fn to_spec(&self) -> String {
        format!("N={};mask={}", self.resolution, mask_to_hex(&self.cells))
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells[cell]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    pub fn complement(&self) -> DyadicSet {
        DyadicSet {
            resolution: self.resolution,
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    pub fn measure(&self) -> Rational {
        let count = self.cells.iter().filter(|&&c| c).count();
        &Rational::from_int(count as i64) * &Rational::pow2(-(self.resolution as i64))
    }
}

pub(crate) fn split_resolution_spec(spec: &str) -> Result<(u32, &str)> {
    let spec = spec.trim();
    let (head, body) = spec
        .split_once(';')
        .ok_or_else(|| Error::Parse(format!("spec must be N=..;..., got {spec:?}")))?;
    let n = head
        .trim()
        .strip_prefix("N=")
        .ok_or_else(|| Error::Parse(format!("spec must start with N=, got {head:?}")))?;
    let resolution = n
        .parse::<u32>()
        .map_err(|e| Error::Parse(format!("bad resolution {n:?}: {e}")))?;
    Ok((resolution, body.trim()))
}

/// A finite family of Haar functions, all of level below the resolution.
#[derive(Clone, Debug)]
pub struct HaarSystem {
    resolution: u32,
    intervals: Vec<DyadicInterval>,
}

impl HaarSystem {
    pub fn new(resolution: u32, intervals: Vec<DyadicInterval>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for i in &intervals {
            if i.level() >= resolution {
                return Err(Error::BelowResolution);
            }
            if seen.insert(*i, ()).is_some() {
                return Err(Error::Parse(format!("duplicate interval {i}")));
            }
        }
        Ok(HaarSystem {
            resolution,
            intervals,
        })
    }

    /// Every interval of level < N: the complete truncated system.
    pub fn complete(resolution: u32) -> Self {
        let mut intervals = Vec::new();
        for level in 0..resolution {
            for index in 0..(1u64 << level) {
                intervals.push(DyadicInterval { level, index });
            }
        }
        HaarSystem {
            resolution,
            intervals,
        }
    }

    /// Parse `N=2;intervals=0:0,1:1`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (resolution, body) = split_resolution_spec(spec)?;
        let list = body
            .strip_prefix("intervals=")
            .ok_or_else(|| Error::Parse(format!("system spec needs intervals=, got {body:?}")))?;
        let mut intervals = Vec::new();
        for part in list.split(',') {
            let part = part.trim();
            if !part.is_empty() {
                intervals.push(part.parse()?);
            }
        }
        HaarSystem::new(resolution, intervals)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn intervals(&self) -> &[DyadicInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Haar coefficient <1_V, h_I> = 2^{j/2} (|I+ \cap V| - |I- \cap V|).
pub fn haar_coefficient(v: &DyadicSet, interval: DyadicInterval) -> Result<ExactScalar> {
    if interval.level() >= v.resolution() {
        return Err(Error::BelowResolution);
    }
    let right = intersect_measure(v, interval.right());
    let left = intersect_measure(v, interval.left());
    Ok(ExactScalar::pow2_half(interval.level() as i64).scale(&(&right - &left)))
}

fn intersect_measure(v: &DyadicSet, interval: DyadicInterval) -> Rational {
    let count = interval
        .cell_range(v.resolution())
        .filter(|&c| v.contains(c))
        .count();
    &Rational::from_int(count as i64) * &Rational::pow2(-(v.resolution() as i64))
}

/// All Haar coefficients of 1_V below the resolution, plus the mean
/// (the coefficient of the constant function), computed by one bottom-up
/// cascade of interval measures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientMap {
    resolution: u32,
    mean: Rational,
    coeffs: BTreeMap<DyadicInterval, ExactScalar>,
}

impl CoefficientMap {
    pub fn analyze(v: &DyadicSet) -> CoefficientMap {
        let n = v.resolution();
        let weight = Rational::pow2(-(n as i64));
        // sums[k] = |I \cap V| for the level-j intervals, walked bottom-up.
        let mut sums: Vec<Rational> = (0..v.cell_count())
            .map(|c| {
                if v.contains(c) {
                    weight.clone()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        let mut coeffs = BTreeMap::new();
        for level in (0..n).rev() {
            let amp = ExactScalar::pow2_half(level as i64);
            let mut next = Vec::with_capacity(sums.len() / 2);
            for k in 0..sums.len() / 2 {
                let left = &sums[2 * k];
                let right = &sums[2 * k + 1];
                let coeff = amp.scale(&(right - left));
                if !coeff.is_zero() {
                    coeffs.insert(
                        DyadicInterval {
                            level,
                            index: k as u64,
                        },
                        coeff,
                    );
                }
                next.push(left + right);
            }
            sums = next;
        }
        CoefficientMap {
            resolution: n,
            mean: sums.pop().unwrap_or_else(Rational::zero),
            coeffs,
        }
    }

    pub fn empty(resolution: u32) -> CoefficientMap {
        CoefficientMap {
            resolution,
            mean: Rational::zero(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn mean(&self) -> &Rational {
        &self.mean
    }

    pub fn coeff(&self, interval: DyadicInterval) -> ExactScalar {
        self.coeffs
            .get(&interval)
            .cloned()
            .unwrap_or_else(ExactScalar::zero)
    }

    pub fn set_coeff(&mut self, interval: DyadicInterval, value: ExactScalar) {
        if value.is_zero() {
            self.coeffs.remove(&interval);
        } else {
            self.coeffs.insert(interval, value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicInterval, &ExactScalar)> {
        self.coeffs.iter()
    }

    /// mean^2 + sum of squared coefficients; equals |V| by Plancherel when
    /// the map was produced by `analyze`.
    pub fn plancherel_sum(&self) -> ExactScalar {
        let mut total = ExactScalar::from_rational(self.mean.square());
        for c in self.coeffs.values() {
            total += &c.square();
        }
        total
    }

    /// Cell values of mean + sum coeff(I) h_I.
    pub fn synthesize(&self) -> Vec<ExactScalar> {
        let mut values =
            vec![ExactScalar::from_rational(self.mean.clone()); 1usize << self.resolution];
        for (interval, coeff) in &self.coeffs {
            let amp = ExactScalar::pow2_half(interval.level() as i64);
            let term = coeff * &amp;
            let range = interval.cell_range(self.resolution);
            let mid = range.start + (range.end - range.start) / 2;
            for (cell, value) in values
                .iter_mut()
                .enumerate()
                .take(range.end)
                .skip(range.start)
            {
                if cell >= mid {
                    *value += &term;
                } else {
                    *value -= &term;
                }
            }
        }
        values
    }
}

/// Dyadic square function of 1_V: cellwise sum of coeff(I)^2 2^{j} over the
/// intervals containing the cell, plus mean^2 when requested.
pub fn dyadic_square_function(v: &DyadicSet, include_mean: bool) -> Vec<Rational> {
    let map = CoefficientMap::analyze(v);
    let n = v.resolution();
    let base = if include_mean {
        map.mean.square()
    } else {
        Rational::zero()
    };
    let mut values = vec![base; v.cell_count()];
    for (interval, coeff) in map.iter() {
        let sq = coeff.square();
        debug_assert!(sq.is_rational());
        let term = &sq.as_rational().expect("rational square")
            * &Rational::pow2(interval.level() as i64);
        for cell in interval.cell_range(n) {
            values[cell] += &term;
        }
    }
    values
}

/// The Haar shift T on a coefficient expansion: coefficients move between
/// siblings (with a sign), the mean and the unpaired top-level Haar function
/// are annihilated.
pub fn haar_shift_apply(map: &CoefficientMap) -> CoefficientMap {
    let mut out = CoefficientMap::empty(map.resolution());
    for (interval, coeff) in map.iter() {
        if let Some(sib) = interval.sibling() {
            // T h_{I+} = h_{I-}: a right-child coefficient lands on its left
            // sibling with sign +. T h_{I-} = -h_{I+}: a left-child
            // coefficient lands on its right sibling with sign -.
            let signed = if interval.is_left_child() {
                -coeff
            } else {
                coeff.clone()
            };
            out.set_coeff(sib, signed);
        }
    }
    out
}

/// Energies of T 1_V: the mass inside V, the total mass, and the pairing
/// <T 1_V, 1_V> (always zero, by antisymmetry).
#[derive(Clone, Debug)]
pub struct ShiftEnergy {
    pub inside: ExactScalar,
    pub total: ExactScalar,
    pub pairing: ExactScalar,
}

pub fn shift_energy(v: &DyadicSet) -> Result<ShiftEnergy> {
    if v.is_empty() {
        return Err(Error::EmptySet);
    }
    let shifted = haar_shift_apply(&CoefficientMap::analyze(v));
    let values = shifted.synthesize();
    let weight = Rational::pow2(-(v.resolution() as i64));
    let mut inside = ExactScalar::zero();
    let mut total = ExactScalar::zero();
    let mut pairing = ExactScalar::zero();
    for (cell, value) in values.iter().enumerate() {
        let sq = value.square().scale(&weight);
        total += &sq;
        if v.contains(cell) {
            inside += &sq;
            pairing += &value.scale(&weight);
        }
    }
    Ok(ShiftEnergy {
        inside,
        total,
        pairing,
    })
}

/// Matrix of T in the orthonormal basis of paired Haar functions (levels 1
/// through N-1, ordered by (level, index); siblings are adjacent with the
/// left child first). Entries are integers: each 2x2 sibling block is
/// [[0, 1], [-1, 0]].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftMatrix {
    basis: Vec<DyadicInterval>,
    entries: Vec<Vec<BigInt>>,
}

impl ShiftMatrix {
    pub fn new(resolution: u32) -> Result<ShiftMatrix> {
        if resolution < 1 {
            return Err(Error::ParameterOutOfRange(
                "shift matrix needs resolution >= 1".into(),
            ));
        }
        let mut basis = Vec::new();
        for level in 1..resolution {
            for index in 0..(1u64 << level) {
                basis.push(DyadicInterval { level, index });
            }
        }
        let dim = basis.len();
        let position: BTreeMap<DyadicInterval, usize> =
            basis.iter().enumerate().map(|(i, iv)| (*iv, i)).collect();
        let mut entries = vec![vec![BigInt::zero(); dim]; dim];
        for (col, interval) in basis.iter().enumerate() {
            let sib = interval.sibling().expect("level >= 1");
            let row = position[&sib];
            // Column col is the image of h_{basis[col]} under T.
            entries[row][col] = if interval.is_left_child() {
                -BigInt::one()
            } else {
                BigInt::one()
            };
        }
        Ok(ShiftMatrix { basis, entries })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DyadicInterval] {
        &self.basis
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigInt {
        &self.entries[row][col]
    }

    #[allow(clippy::needless_range_loop)]
    pub fn matmul(&self, rhs: &ShiftMatrix) -> Vec<Vec<BigInt>> {
        let dim = self.dim();
        let mut out = vec![vec![BigInt::zero(); dim]; dim];
        for i in 0..dim {
            for k in 0..dim {
                if self.entries[i][k].is_zero() {
                    continue;
                }
                for j in 0..dim {
                    if !rhs.entries[k][j].is_zero() {
                        out[i][j] += &self.entries[i][k] * &rhs.entries[k][j];
                    }
                }
            }
        }
        out
    }

    pub fn is_antisymmetric(&self) -> bool {
        let dim = self.dim();
        (0..dim).all(|i| (0..dim).all(|j| self.entries[i][j] == -(&self.entries[j][i])))
    }

    pub fn squares_to_minus_identity(&self) -> bool {
        let sq = self.matmul(self);
        let dim = self.dim();
        (0..dim).all(|i| {
            (0..dim).all(|j| {
                if i == j {
                    sq[i][j] == -BigInt::one()
                } else {
                    sq[i][j].is_zero()
                }
            })
        })
    }

    /// M M^T = Id on the paired span (orthogonality).
    pub fn is_orthogonal(&self) -> bool {
        let transpose = ShiftMatrix {
            basis: self.basis.clone(),
            entries: {
                let dim = self.dim();
                (0..dim)
                    .map(|i| (0..dim).map(|j| self.entries[j][i].clone()).collect())
                    .collect()
            },
        };
        let prod = self.matmul(&transpose);
        let dim = self.dim();
        (0..dim).all(|i| {
            (0..dim).all(|j| {
                if i == j {
                    prod[i][j].is_one()
                } else {
                    prod[i][j].is_zero()
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn scalar(n: i64, d: i64) -> ExactScalar {
        ExactScalar::from_rational(rat(n, d))
    }

    fn r2_times(n: i64, d: i64) -> ExactScalar {
        ExactScalar::new(Rational::zero(), rat(n, d))
    }

    /// V = [0, 1/4) at resolution 2.
    fn first_cell() -> DyadicSet {
        DyadicSet::from_cells(2, &[0]).unwrap()
    }

    #[test]
    fn haar_coefficient_first_cell_level_zero() {
        let c = haar_coefficient(&first_cell(), DyadicInterval::unit()).unwrap();
        assert_eq!(c, scalar(-1, 4));
    }

    #[test]
    fn haar_coefficient_first_cell_level_one() {
        let c = haar_coefficient(&first_cell(), DyadicInterval::new(1, 0).unwrap()).unwrap();
        assert_eq!(c, r2_times(-1, 4));
    }

    #[test]
    fn haar_coefficient_cancellation() {
        // Equal mass in both halves of [0,1).
        let v = DyadicSet::from_cells(2, &[0, 2]).unwrap();
        let c = haar_coefficient(&v, DyadicInterval::unit()).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn haar_coefficient_below_resolution() {
        assert!(matches!(
            haar_coefficient(&first_cell(), DyadicInterval::new(2, 0).unwrap()),
            Err(Error::BelowResolution)
        ));
    }

    #[test]
    fn analyze_matches_single_coefficients() {
        let v = DyadicSet::from_cells(3, &[0, 3, 4, 6]).unwrap();
        let map = CoefficientMap::analyze(&v);
        for level in 0..3 {
            for index in 0..(1u64 << level) {
                let interval = DyadicInterval::new(level, index).unwrap();
                assert_eq!(map.coeff(interval), haar_coefficient(&v, interval).unwrap());
            }
        }
        assert_eq!(map.mean(), &v.measure());
    }

    #[test]
    fn plancherel_exact() {
        let v = DyadicSet::from_cells(4, &[0, 2, 3, 7, 8, 13]).unwrap();
        assert_eq!(
            CoefficientMap::analyze(&v).plancherel_sum(),
            ExactScalar::from_rational(v.measure())
        );
    }

    #[test]
    fn synthesize_recovers_indicator() {
        let v = DyadicSet::from_cells(3, &[1, 2, 5]).unwrap();
        let values = CoefficientMap::analyze(&v).synthesize();
        for (cell, value) in values.iter().enumerate() {
            let expected = if v.contains(cell) {
                ExactScalar::one()
            } else {
                ExactScalar::zero()
            };
            assert_eq!(value, &expected);
        }
    }

    #[test]
    fn square_function_first_cell() {
        let sq = dyadic_square_function(&first_cell(), true);
        // 1/16 (mean) + 1/16 (level 0) + 1/4 (level 1) on V.
        assert_eq!(sq[0], rat(3, 8));
    }

    #[test]
    fn square_function_full_set() {
        let v = DyadicSet::full(3).unwrap();
        for value in dyadic_square_function(&v, true) {
            assert_eq!(value, rat(1, 1));
        }
        for value in dyadic_square_function(&v, false) {
            assert!(value.is_zero());
        }
    }

    #[test]
    fn square_function_integral_first_cell() {
        let sq = dyadic_square_function(&first_cell(), true);
        let mut integral = Rational::zero();
        for (cell, value) in sq.iter().enumerate() {
            if first_cell().contains(cell) {
                integral += &(value * &rat(1, 4));
            }
        }
        assert_eq!(integral, rat(3, 32));
    }

    #[test]
    fn shift_moves_sibling_coefficients() {
        // Expansion supported on h_{[0,1/2)} with value -r2/4 maps to
        // h_{[1/2,1)} with value +r2/4.
        let mut map = CoefficientMap::empty(2);
        map.set_coeff(DyadicInterval::new(1, 0).unwrap(), r2_times(-1, 4));
        let out = haar_shift_apply(&map);
        assert_eq!(out.coeff(DyadicInterval::new(1, 1).unwrap()), r2_times(1, 4));
        assert!(out.coeff(DyadicInterval::new(1, 0).unwrap()).is_zero());
        assert!(out.mean().is_zero());
    }

    #[test]
    fn shift_of_zero_is_zero() {
        let out = haar_shift_apply(&CoefficientMap::empty(3));
        assert!(out.mean().is_zero());
        assert_eq!(out.iter().count(), 0);
    }

    #[test]
    fn shift_twice_negates_on_paired_span() {
        let mut map = CoefficientMap::empty(3);
        map.set_coeff(DyadicInterval::new(1, 0).unwrap(), scalar(3, 7));
        map.set_coeff(DyadicInterval::new(2, 1).unwrap(), r2_times(-2, 5));
        map.set_coeff(DyadicInterval::new(2, 2).unwrap(), scalar(1, 3));
        let twice = haar_shift_apply(&haar_shift_apply(&map));
        for (interval, coeff) in map.iter() {
            assert_eq!(twice.coeff(*interval), -coeff);
        }
    }

    #[test]
    fn shift_energy_first_cell() {
        let e = shift_energy(&first_cell()).unwrap();
        assert!(e.inside.is_zero());
        assert_eq!(e.total, scalar(1, 8));
        assert!(e.pairing.is_zero());
        // T 1_V = (1/2) 1_{[3/4,1)} - (1/2) 1_{[1/2,3/4)}.
        let values = haar_shift_apply(&CoefficientMap::analyze(&first_cell())).synthesize();
        assert_eq!(
            values,
            vec![
                ExactScalar::zero(),
                ExactScalar::zero(),
                scalar(-1, 2),
                scalar(1, 2),
            ]
        );
    }

    #[test]
    fn shift_energy_vanishes_inside_dyadic_intervals() {
        for level in 0..=3u32 {
            for index in 0..(1u64 << level) {
                let interval = DyadicInterval::new(level, index).unwrap();
                let v = DyadicSet::from_interval(3, interval).unwrap();
                let e = shift_energy(&v).unwrap();
                assert!(e.inside.is_zero(), "inside energy for I = {interval}");
                assert!(e.pairing.is_zero());
            }
        }
    }

    #[test]
    fn shift_energy_empty_set_rejected() {
        assert!(matches!(
            shift_energy(&DyadicSet::empty(2).unwrap()),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn shift_matrix_block_structure() {
        let m = ShiftMatrix::new(2).unwrap();
        assert_eq!(m.dim(), 2);
        // Basis (h_{1:0}, h_{1:1}); block [[0, 1], [-1, 0]].
        assert_eq!(m.entry(0, 0), &BigInt::zero());
        assert_eq!(m.entry(0, 1), &BigInt::one());
        assert_eq!(m.entry(1, 0), &(-BigInt::one()));
        assert_eq!(m.entry(1, 1), &BigInt::zero());
    }

    #[test]
    fn shift_matrix_identities() {
        for n in 2..=5 {
            let m = ShiftMatrix::new(n).unwrap();
            assert_eq!(m.dim(), (1usize << n) - 2);
            assert!(m.is_antisymmetric());
            assert!(m.squares_to_minus_identity());
            assert!(m.is_orthogonal());
        }
    }

    #[test]
    fn energy_conservation_on_paired_span() {
        // g in the paired span: T preserves the integral of g^2.
        let mut map = CoefficientMap::empty(3);
        map.set_coeff(DyadicInterval::new(1, 0).unwrap(), scalar(1, 3));
        map.set_coeff(DyadicInterval::new(2, 3).unwrap(), r2_times(5, 4));
        let before = map.plancherel_sum();
        let after = haar_shift_apply(&map).plancherel_sum();
        assert_eq!(before, after);
    }

    #[test]
    fn set_spec_round_trip() {
        let v = DyadicSet::from_spec("N=4;mask=0xA5C3").unwrap();
        assert_eq!(v.to_spec(), "N=4;mask=0xa5c3");
        let w = DyadicSet::from_spec("N=4;cells=0,1,6,7,8,10,13,15").unwrap();
        assert_eq!(v, w);
        assert!(DyadicSet::from_spec("N=2;mask=0x1FF").is_err());
        assert!(DyadicSet::from_spec("mask=0x1").is_err());
    }

    #[test]
    fn interval_spec_round_trip() {
        let i: DyadicInterval = "3:5".parse().unwrap();
        assert_eq!(i, DyadicInterval::new(3, 5).unwrap());
        assert_eq!(i.to_string(), "3:5");
        assert!("3:8".parse::<DyadicInterval>().is_err());
        assert!("nonsense".parse::<DyadicInterval>().is_err());
    }
}
