//! Two-parameter objects: dyadic rectangles in [0,1)^2, the biparameter
//! square function, and the tensor Haar shift T applied in each coordinate.
//!
//! The coefficient transform is separable: a full 1D Haar analysis along
//! the x2 rows, then along the x1 columns. Components are indexed by
//! `HaarComponent`, the mean or a genuine Haar function; the complete
//! truncated tensor system therefore carries mean x mean, mean x Haar,
//! Haar x mean and Haar x Haar coefficients, and Plancherel closes exactly.
//! A dense-matrix application of the tensor shift (feasible for N <= 3)
//! validates the separable index bookkeeping.

use crate::error::{Error, Result};
use crate::exact::{ExactScalar, Rational};
use crate::haar::{split_resolution_spec, DyadicInterval, DyadicSet, ShiftEnergy};
use crate::martingale::{mask_to_hex, parse_hex_mask};

/// Subset of [0,1)^2 on a 2^N x 2^N grid; cell (x1, x2) sits at bit
/// x1 * 2^N + x2 of the row-major mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicSet2D {
    resolution: u32,
    cells: Vec<bool>,
}

impl DyadicSet2D {
    pub fn new(resolution: u32, cells: Vec<bool>) -> Result<Self> {
        if resolution > 12 {
            return Err(Error::ParameterOutOfRange(format!(
                "2D resolution {resolution} exceeds the supported 12"
            )));
        }
        if cells.len() != 1usize << (2 * resolution) {
            return Err(Error::Parse(format!(
                "expected {} cells, got {}",
                1usize << (2 * resolution),
                cells.len()
            )));
        }
        Ok(DyadicSet2D { resolution, cells })
    }

    pub fn empty(resolution: u32) -> Result<Self> {
        DyadicSet2D::new(resolution, vec![false; 1usize << (2 * resolution)])
    }

    pub fn full(resolution: u32) -> Result<Self> {
        DyadicSet2D::new(resolution, vec![true; 1usize << (2 * resolution)])
    }

    pub fn from_cell_pairs(resolution: u32, pairs: &[(u64, u64)]) -> Result<Self> {
        let side = 1u64 << resolution;
        let mut cells = vec![false; 1usize << (2 * resolution)];
        for &(x1, x2) in pairs {
            if x1 >= side || x2 >= side {
                return Err(Error::Parse(format!("cell ({x1},{x2}) out of range")));
            }
            cells[(x1 * side + x2) as usize] = true;
        }
        DyadicSet2D::new(resolution, cells)
    }

    /// Product set V1 x V2 of two 1D sets at the same resolution.
    pub fn product(v1: &DyadicSet, v2: &DyadicSet) -> Result<Self> {
        if v1.resolution() != v2.resolution() {
            return Err(Error::ResolutionMismatch {
                set: v2.resolution(),
                grid: v1.resolution(),
            });
        }
        let n = v1.resolution();
        let side = 1usize << n;
        let mut cells = vec![false; side * side];
        for x1 in 0..side {
            if v1.contains(x1) {
                for x2 in 0..side {
                    cells[x1 * side + x2] = v2.contains(x2);
                }
            }
        }
        DyadicSet2D::new(n, cells)
    }

    /// Parse `N=3;mask2d=0x...` (row-major).
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (resolution, body) = split_resolution_spec(spec)?;
        let hex = body
            .strip_prefix("mask2d=")
            .ok_or_else(|| Error::Parse(format!("2D set spec needs mask2d=, got {body:?}")))?;
        let mask = parse_hex_mask(hex)?;
        let total = 1u64 << (2 * resolution);
        if mask.bits() > total {
            return Err(Error::Parse(format!("mask wider than 4^{resolution} cells")));
        }
        let cells = (0..total as usize).map(|i| mask.bit(i as u64)).collect();
        DyadicSet2D::new(resolution, cells)
    }

    pub fn to_spec(&self) -> String {
        format!("N={};mask2d={}", self.resolution, mask_to_hex(&self.cells))
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn side(&self) -> usize {
        1usize << self.resolution
    }

    pub fn contains(&self, x1: usize, x2: usize) -> bool {
        self.cells[x1 * self.side() + x2]
    }

    pub fn contains_index(&self, cell: usize) -> bool {
        self.cells[cell]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    pub fn measure(&self) -> Rational {
        let count = self.cells.iter().filter(|&&c| c).count();
        &Rational::from_int(count as i64) * &Rational::pow2(-2 * (self.resolution as i64))
    }
}

/// One factor of a tensor component: the constant function or a Haar
/// function below the resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HaarComponent {
    Mean,
    Haar(DyadicInterval),
}

impl HaarComponent {
    pub fn support_measure(&self) -> Rational {
        match self {
            HaarComponent::Mean => Rational::one(),
            HaarComponent::Haar(i) => i.measure(),
        }
    }

    fn covers(&self, resolution: u32, cell: usize) -> bool {
        match self {
            HaarComponent::Mean => true,
            HaarComponent::Haar(i) => i.cell_range(resolution).contains(&cell),
        }
    }
}

/// Components in transform order: the mean, then intervals by (level, index).
pub fn component_list(resolution: u32) -> Vec<HaarComponent> {
    let mut out = vec![HaarComponent::Mean];
    for level in 0..resolution {
        for index in 0..(1u64 << level) {
            out.push(HaarComponent::Haar(
                DyadicInterval::new(level, index).expect("in range"),
            ));
        }
    }
    out
}

/// Position of a component in `component_list` order: the mean first, then
/// the intervals of level j starting at offset 2^j.
pub fn component_position(comp: HaarComponent) -> usize {
    match comp {
        HaarComponent::Mean => 0,
        HaarComponent::Haar(i) => (1u64 << i.level()) as usize + i.index() as usize,
    }
}

/// Full 1D Haar analysis of a vector of cell values: component 0 is the
/// integral (mean coefficient), the rest are <f, h_I> in component order.
fn analyze_1d(values: &[ExactScalar], resolution: u32) -> Vec<ExactScalar> {
    let weight = Rational::pow2(-(resolution as i64));
    let mut sums: Vec<ExactScalar> = values.iter().map(|v| v.scale(&weight)).collect();
    // coefficients per level, finest first while cascading
    let mut by_level: Vec<Vec<ExactScalar>> = Vec::with_capacity(resolution as usize);
    for level in (0..resolution).rev() {
        let amp = ExactScalar::pow2_half(level as i64);
        let mut next = Vec::with_capacity(sums.len() / 2);
        let mut coeffs = Vec::with_capacity(sums.len() / 2);
        for k in 0..sums.len() / 2 {
            let left = &sums[2 * k];
            let right = &sums[2 * k + 1];
            coeffs.push(&amp * &(right - left));
            next.push(left + right);
        }
        by_level.push(coeffs);
        sums = next;
    }
    let mut out = Vec::with_capacity(1usize << resolution);
    out.push(sums.pop().expect("cascade leaves the total integral"));
    for coeffs in by_level.into_iter().rev() {
        out.extend(coeffs);
    }
    out
}

/// Inverse of `analyze_1d`: cell values of mean + sum coeff(I) h_I.
fn synthesize_1d(comps: &[ExactScalar], resolution: u32) -> Vec<ExactScalar> {
    let cells = 1usize << resolution;
    let mut values = vec![comps[0].clone(); cells];
    for (k, comp) in component_list(resolution).into_iter().enumerate().skip(1) {
        let coeff = &comps[k];
        if coeff.is_zero() {
            continue;
        }
        let interval = match comp {
            HaarComponent::Haar(i) => i,
            HaarComponent::Mean => unreachable!("mean is component 0"),
        };
        let amp = ExactScalar::pow2_half(interval.level() as i64);
        let term = coeff * &amp;
        let range = interval.cell_range(resolution);
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

/// Coefficients of 1_U over the complete truncated tensor system,
/// comps[k1][k2] indexed by `component_list` in each coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RectCoefficientMap {
    resolution: u32,
    comps: Vec<Vec<ExactScalar>>,
}

impl RectCoefficientMap {
    pub fn analyze(u: &DyadicSet2D) -> RectCoefficientMap {
        let n = u.resolution();
        let side = u.side();
        // Transform along x2 within each row x1.
        let rows: Vec<Vec<ExactScalar>> = (0..side)
            .map(|x1| {
                let row: Vec<ExactScalar> = (0..side)
                    .map(|x2| {
                        if u.contains(x1, x2) {
                            ExactScalar::one()
                        } else {
                            ExactScalar::zero()
                        }
                    })
                    .collect();
                analyze_1d(&row, n)
            })
            .collect();
        // Transform along x1 for each x2-component.
        let mut comps = vec![vec![ExactScalar::zero(); side]; side];
        for k2 in 0..side {
            let column: Vec<ExactScalar> = (0..side).map(|x1| rows[x1][k2].clone()).collect();
            let transformed = analyze_1d(&column, n);
            for (k1, value) in transformed.into_iter().enumerate() {
                comps[k1][k2] = value;
            }
        }
        RectCoefficientMap {
            resolution: n,
            comps,
        }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn coeff_at(&self, k1: usize, k2: usize) -> &ExactScalar {
        &self.comps[k1][k2]
    }

    pub fn coeff(&self, c1: HaarComponent, c2: HaarComponent) -> &ExactScalar {
        &self.comps[component_position(c1)][component_position(c2)]
    }

    /// Sum of all squared coefficients; equals |U| by Plancherel.
    pub fn plancherel_sum(&self) -> Rational {
        let mut total = Rational::zero();
        for row in &self.comps {
            for c in row {
                let sq = c.square();
                debug_assert!(sq.is_rational());
                total += &sq.as_rational().expect("tensor coefficient squares");
            }
        }
        total
    }

    /// Grid values of the represented function.
    #[allow(clippy::needless_range_loop)]
    pub fn synthesize(&self) -> Vec<ExactScalar> {
        let n = self.resolution;
        let side = 1usize << n;
        // Inverse along x1 for each x2-component, then along x2 per row.
        let mut intermediate = vec![vec![ExactScalar::zero(); side]; side];
        for k2 in 0..side {
            let column: Vec<ExactScalar> =
                (0..side).map(|k1| self.comps[k1][k2].clone()).collect();
            let values = synthesize_1d(&column, n);
            for (x1, value) in values.into_iter().enumerate() {
                intermediate[x1][k2] = value;
            }
        }
        let mut out = vec![ExactScalar::zero(); side * side];
        for (x1, row) in intermediate.iter().enumerate() {
            let values = synthesize_1d(row, n);
            for (x2, value) in values.into_iter().enumerate() {
                out[x1 * side + x2] = value;
            }
        }
        out
    }

    /// The tensor shift in coefficient coordinates: both factors must be
    /// paired Haar functions (level >= 1); each moves to its sibling with
    /// the 1D sign, and everything else is annihilated.
    pub fn tensor_shift(&self) -> RectCoefficientMap {
        let n = self.resolution;
        let side = 1usize << n;
        let list = component_list(n);
        let mut out = vec![vec![ExactScalar::zero(); side]; side];
        for (k1, comp1) in list.iter().enumerate() {
            let Some((source1, sign1)) = shift_source(*comp1) else {
                continue;
            };
            let s1 = component_position(source1);
            for (k2, comp2) in list.iter().enumerate() {
                let Some((source2, sign2)) = shift_source(*comp2) else {
                    continue;
                };
                let s2 = component_position(source2);
                let c = &self.comps[s1][s2];
                if c.is_zero() {
                    continue;
                }
                out[k1][k2] = if sign1 * sign2 > 0 { c.clone() } else { -c };
            }
        }
        RectCoefficientMap {
            resolution: n,
            comps: out,
        }
    }
}

/// For a target component, the source component whose coefficient lands on
/// it under T, with the sign: a left child receives its right sibling's
/// coefficient with +, a right child its left sibling's with -.
fn shift_source(target: HaarComponent) -> Option<(HaarComponent, i32)> {
    match target {
        HaarComponent::Haar(i) if i.level() >= 1 => {
            let sib = i.sibling().expect("level >= 1");
            let sign = if i.is_left_child() { 1 } else { -1 };
            Some((HaarComponent::Haar(sib), sign))
        }
        _ => None,
    }
}

/// <1_U, h_{R1} x h_{R2}> by direct separable summation over grid cells.
pub fn rect_coefficient(
    u: &DyadicSet2D,
    r1: DyadicInterval,
    r2: DyadicInterval,
) -> Result<ExactScalar> {
    let n = u.resolution();
    if r1.level() >= n || r2.level() >= n {
        return Err(Error::BelowResolution);
    }
    let side = u.side();
    let weight = Rational::pow2(-(n as i64));
    let mut total = ExactScalar::zero();
    for x1 in 0..side {
        let h1 = r1.haar_value(n, x1);
        if h1.is_zero() {
            continue;
        }
        let mut row_sum = ExactScalar::zero();
        for x2 in 0..side {
            if u.contains(x1, x2) {
                row_sum += &r2.haar_value(n, x2).scale(&weight);
            }
        }
        total += &(&h1 * &row_sum).scale(&weight);
    }
    Ok(total)
}

/// Biparameter square function sum_R coeff(R)^2 / |R| 1_R. With
/// `include_completion`, the mean-tensor components enter as rectangles of
/// full side so that the total integral closes to |U| (Plancherel); without
/// it, only genuine Haar x Haar rectangles contribute.
pub fn biparameter_square_function(u: &DyadicSet2D, include_completion: bool) -> Vec<Rational> {
    let n = u.resolution();
    let side = u.side();
    let map = RectCoefficientMap::analyze(u);
    let list = component_list(n);
    let mut values = vec![Rational::zero(); side * side];
    for (k1, comp1) in list.iter().enumerate() {
        for (k2, comp2) in list.iter().enumerate() {
            if !include_completion
                && (matches!(comp1, HaarComponent::Mean) || matches!(comp2, HaarComponent::Mean))
            {
                continue;
            }
            let c = map.coeff_at(k1, k2);
            if c.is_zero() {
                continue;
            }
            let sq = c.square().as_rational().expect("rational square");
            let r_measure = &comp1.support_measure() * &comp2.support_measure();
            let term = sq.checked_div(&r_measure).expect("positive measure");
            for x1 in 0..side {
                if !comp1.covers(n, x1) {
                    continue;
                }
                for x2 in 0..side {
                    if comp2.covers(n, x2) {
                        values[x1 * side + x2] += &term;
                    }
                }
            }
        }
    }
    values
}

/// Integral of the biparameter square function over U and over the whole
/// square.
pub struct SquareEnergy2D {
    pub inside: Rational,
    pub total: Rational,
}

pub fn biparameter_energy(u: &DyadicSet2D, include_completion: bool) -> Result<SquareEnergy2D> {
    if u.is_empty() {
        return Err(Error::EmptySet);
    }
    let values = biparameter_square_function(u, include_completion);
    let weight = Rational::pow2(-2 * (u.resolution() as i64));
    let mut inside = Rational::zero();
    let mut total = Rational::zero();
    for (cell, value) in values.iter().enumerate() {
        let term = value * &weight;
        total += &term;
        if u.contains_index(cell) {
            inside += &term;
        }
    }
    Ok(SquareEnergy2D { inside, total })
}

/// Energies of the tensor shift applied to 1_U. Unlike the 1D shift, the
/// pairing <T(x)T 1_U, 1_U> need not vanish.
pub fn tensor_shift_energy(u: &DyadicSet2D) -> Result<ShiftEnergy> {
    if u.is_empty() {
        return Err(Error::EmptySet);
    }
    let values = RectCoefficientMap::analyze(u).tensor_shift().synthesize();
    let weight = Rational::pow2(-2 * (u.resolution() as i64));
    let mut inside = ExactScalar::zero();
    let mut total = ExactScalar::zero();
    let mut pairing = ExactScalar::zero();
    for (cell, value) in values.iter().enumerate() {
        let sq = value.square().scale(&weight);
        total += &sq;
        if u.contains_index(cell) {
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

/// Dense matrix of the tensor shift on grid functions, for cross-checking
/// the separable path. Size 4^N x 4^N; intended for N <= 3.
pub fn dense_tensor_shift_matrix(resolution: u32) -> Result<Vec<Vec<ExactScalar>>> {
    if resolution > 3 {
        return Err(Error::ParameterOutOfRange(
            "dense tensor oracle supports N <= 3".into(),
        ));
    }
    let n = resolution;
    let side = 1usize << n;
    let cells = side * side;
    let weight = Rational::pow2(-2 * (n as i64));
    let mut matrix = vec![vec![ExactScalar::zero(); cells]; cells];
    for level1 in 1..n {
        for index1 in 0..(1u64 << level1) {
            let i1 = DyadicInterval::new(level1, index1)?;
            let (t1, s1) = shifted_image(i1);
            for level2 in 1..n {
                for index2 in 0..(1u64 << level2) {
                    let i2 = DyadicInterval::new(level2, index2)?;
                    let (t2, s2) = shifted_image(i2);
                    let sign = s1 * s2;
                    for x1 in t1.cell_range(n) {
                        let a1 = t1.haar_value(n, x1);
                        for x2 in t2.cell_range(n) {
                            let image = &a1 * &t2.haar_value(n, x2);
                            let image = if sign > 0 { image } else { -image };
                            for y1 in i1.cell_range(n) {
                                let b1 = i1.haar_value(n, y1);
                                for y2 in i2.cell_range(n) {
                                    let basis = (&b1 * &i2.haar_value(n, y2)).scale(&weight);
                                    matrix[x1 * side + x2][y1 * side + y2] += &(&image * &basis);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(matrix)
}

/// T h_I as (sibling, sign): T h_{I+} = +h_{I-}, T h_{I-} = -h_{I+}.
fn shifted_image(i: DyadicInterval) -> (DyadicInterval, i32) {
    let sib = i.sibling().expect("paired interval");
    if i.is_left_child() {
        (sib, -1)
    } else {
        (sib, 1)
    }
}

/// Apply the dense oracle matrix to 1_U.
pub fn dense_tensor_shift_apply(u: &DyadicSet2D) -> Result<Vec<ExactScalar>> {
    let matrix = dense_tensor_shift_matrix(u.resolution())?;
    let cells = u.cells();
    Ok(matrix
        .iter()
        .map(|row| {
            let mut sum = ExactScalar::zero();
            for (y, value) in row.iter().enumerate() {
                if cells[y] {
                    sum += value;
                }
            }
            sum
        })
        .collect())
}

/// Matrix of the tensor shift on the paired x paired coefficient span:
/// the Kronecker square of the 1D shift matrix. Symmetric with square
/// equal to the identity (eigenvalues +-1).
pub struct TensorShiftMatrix {
    dim_1d: usize,
    entries_1d: Vec<Vec<i64>>,
}

impl TensorShiftMatrix {
    pub fn new(resolution: u32) -> Result<Self> {
        use num::traits::ToPrimitive;
        let m = crate::haar::ShiftMatrix::new(resolution)?;
        let dim_1d = m.dim();
        let entries_1d = (0..dim_1d)
            .map(|i| {
                (0..dim_1d)
                    .map(|j| m.entry(i, j).to_i64().expect("entries are 0 or +-1"))
                    .collect()
            })
            .collect();
        Ok(TensorShiftMatrix { dim_1d, entries_1d })
    }

    pub fn dim(&self) -> usize {
        self.dim_1d * self.dim_1d
    }

    pub fn entry(&self, row: usize, col: usize) -> i64 {
        let (r1, r2) = (row / self.dim_1d, row % self.dim_1d);
        let (c1, c2) = (col / self.dim_1d, col % self.dim_1d);
        self.entries_1d[r1][c1] * self.entries_1d[r2][c2]
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| self.entry(i, j) == self.entry(j, i)))
    }

    pub fn squares_to_identity(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let mut sum = 0i64;
                for k in 0..d {
                    sum += self.entry(i, k) * self.entry(k, j);
                }
                sum == i64::from(i == j)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::haar_coefficient;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn scalar(n: i64, d: i64) -> ExactScalar {
        ExactScalar::from_rational(rat(n, d))
    }

    /// U = [0,1/2)^2 at resolution 2.
    fn quarter_square() -> DyadicSet2D {
        DyadicSet2D::from_cell_pairs(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap()
    }

    #[test]
    fn rect_coefficient_quarter_square() {
        let c = rect_coefficient(
            &quarter_square(),
            DyadicInterval::unit(),
            DyadicInterval::unit(),
        )
        .unwrap();
        assert_eq!(c, scalar(1, 4));
    }

    #[test]
    fn rect_coefficient_product_sets_factor() {
        let v1 = DyadicSet::from_cells(2, &[0, 3]).unwrap();
        let v2 = DyadicSet::from_cells(2, &[1]).unwrap();
        let u = DyadicSet2D::product(&v1, &v2).unwrap();
        for (r1, r2) in [
            (DyadicInterval::unit(), DyadicInterval::new(1, 0).unwrap()),
            (
                DyadicInterval::new(1, 1).unwrap(),
                DyadicInterval::new(1, 0).unwrap(),
            ),
            (DyadicInterval::new(1, 0).unwrap(), DyadicInterval::unit()),
        ] {
            let joint = rect_coefficient(&u, r1, r2).unwrap();
            let split =
                &haar_coefficient(&v1, r1).unwrap() * &haar_coefficient(&v2, r2).unwrap();
            assert_eq!(joint, split);
        }
    }

    #[test]
    fn rect_coefficient_full_square_vanishes() {
        let u = DyadicSet2D::full(2).unwrap();
        for (j1, k1) in [(0u32, 0u64), (1, 0), (1, 1)] {
            for (j2, k2) in [(0u32, 0u64), (1, 1)] {
                let c = rect_coefficient(
                    &u,
                    DyadicInterval::new(j1, k1).unwrap(),
                    DyadicInterval::new(j2, k2).unwrap(),
                )
                .unwrap();
                assert!(c.is_zero());
            }
        }
    }

    #[test]
    fn rect_coefficient_below_resolution() {
        assert!(matches!(
            rect_coefficient(
                &quarter_square(),
                DyadicInterval::new(2, 0).unwrap(),
                DyadicInterval::unit()
            ),
            Err(Error::BelowResolution)
        ));
    }

    #[test]
    fn analyze_matches_direct_coefficients() {
        let u =
            DyadicSet2D::from_cell_pairs(2, &[(0, 0), (1, 3), (2, 2), (3, 3), (0, 2)]).unwrap();
        let map = RectCoefficientMap::analyze(&u);
        let list = component_list(2);
        for (k1, comp1) in list.iter().enumerate() {
            for (k2, comp2) in list.iter().enumerate() {
                if let (HaarComponent::Haar(i1), HaarComponent::Haar(i2)) = (comp1, comp2) {
                    assert_eq!(
                        map.coeff_at(k1, k2),
                        &rect_coefficient(&u, *i1, *i2).unwrap(),
                        "coefficient at ({i1}, {i2})"
                    );
                }
            }
        }
    }

    #[test]
    fn plancherel_2d() {
        let u = DyadicSet2D::from_cell_pairs(
            3,
            &[(0, 0), (1, 5), (2, 2), (7, 7), (4, 1), (3, 6)],
        )
        .unwrap();
        assert_eq!(
            RectCoefficientMap::analyze(&u).plancherel_sum(),
            u.measure()
        );
    }

    #[test]
    fn synthesize_recovers_indicator() {
        let u = DyadicSet2D::from_cell_pairs(2, &[(0, 1), (2, 3), (3, 0)]).unwrap();
        let values = RectCoefficientMap::analyze(&u).synthesize();
        for (cell, value) in values.iter().enumerate() {
            let expected = if u.contains_index(cell) {
                ExactScalar::one()
            } else {
                ExactScalar::zero()
            };
            assert_eq!(value, &expected, "cell {cell}");
        }
    }

    #[test]
    fn square_function_product_with_full_line() {
        // U = V x [0,1): only x1-Haar (tensor mean) terms survive, so the
        // completed biparameter square function pulls back the 1D one.
        let v = DyadicSet::from_cells(2, &[0, 3]).unwrap();
        let u = DyadicSet2D::product(&v, &DyadicSet::full(2).unwrap()).unwrap();
        let sq2 = biparameter_square_function(&u, true);
        let sq1 = crate::haar::dyadic_square_function(&v, true);
        let side = u.side();
        for x1 in 0..side {
            for x2 in 0..side {
                assert_eq!(sq2[x1 * side + x2], sq1[x1], "cell ({x1},{x2})");
            }
        }
    }

    #[test]
    fn square_function_quarter_square_unit_rectangle_term() {
        // The pure-Haar rectangle ([0,1),[0,1)) has coefficient 1/4, so it
        // contributes coeff^2/|R| = 1/16 on every cell.
        let u = quarter_square();
        let map = RectCoefficientMap::analyze(&u);
        let unit = HaarComponent::Haar(DyadicInterval::unit());
        assert_eq!(map.coeff(unit, unit), &scalar(1, 4));
        let sq = biparameter_square_function(&u, false);
        for value in &sq {
            assert!(value >= &rat(1, 16));
        }
    }

    #[test]
    fn square_function_full_plancherel() {
        let u =
            DyadicSet2D::from_cell_pairs(2, &[(0, 0), (1, 2), (3, 1), (2, 2), (0, 3)]).unwrap();
        let sq = biparameter_square_function(&u, true);
        let weight = Rational::pow2(-4);
        let mut integral = Rational::zero();
        for value in &sq {
            integral += &(value * &weight);
        }
        assert_eq!(integral, u.measure());
    }

    #[test]
    fn tensor_shift_energy_rectangle_inside_zero() {
        // U = I1 x I2: each coordinate shift moves support off I_j.
        let i1 = DyadicInterval::new(1, 0).unwrap();
        let i2 = DyadicInterval::new(2, 2).unwrap();
        let v1 = DyadicSet::from_interval(3, i1).unwrap();
        let v2 = DyadicSet::from_interval(3, i2).unwrap();
        let u = DyadicSet2D::product(&v1, &v2).unwrap();
        let e = tensor_shift_energy(&u).unwrap();
        assert!(e.inside.is_zero());
    }

    #[test]
    fn tensor_shift_pairing_product_sets() {
        let v1 = DyadicSet::from_cells(2, &[0, 2]).unwrap();
        let v2 = DyadicSet::from_cells(2, &[1, 2, 3]).unwrap();
        let u = DyadicSet2D::product(&v1, &v2).unwrap();
        let e = tensor_shift_energy(&u).unwrap();
        assert!(e.pairing.is_zero());
    }

    #[test]
    fn tensor_shift_matches_dense_oracle() {
        let u = DyadicSet2D::from_cell_pairs(
            2,
            &[
                (0, 0),
                (0, 1),
                (1, 0),
                (1, 1),
                (2, 2),
                (2, 3),
                (3, 2),
                (3, 3),
                (0, 2),
            ],
        )
        .unwrap();
        let fast = RectCoefficientMap::analyze(&u).tensor_shift().synthesize();
        let dense = dense_tensor_shift_apply(&u).unwrap();
        assert_eq!(fast, dense);
    }

    #[test]
    fn tensor_shift_checkerboard_energy() {
        // The 2x2-block checkerboard represented at N = 2.
        let u = DyadicSet2D::from_cell_pairs(
            2,
            &[
                (0, 0),
                (0, 1),
                (1, 0),
                (1, 1),
                (2, 2),
                (2, 3),
                (3, 2),
                (3, 3),
            ],
        )
        .unwrap();
        let e = tensor_shift_energy(&u).unwrap();
        let dense = dense_tensor_shift_apply(&u).unwrap();
        let weight = Rational::pow2(-4);
        let mut inside = ExactScalar::zero();
        for (cell, value) in dense.iter().enumerate() {
            if u.contains_index(cell) {
                inside += &value.square().scale(&weight);
            }
        }
        assert_eq!(e.inside, inside);
    }

    #[test]
    fn tensor_shift_pairing_can_be_nonzero() {
        // Unlike the 1D shift, the tensor pairing need not vanish: the
        // two-cell set {(0,2), (2,0)} at N = 2 has pairing -1/32.
        let u = DyadicSet2D::from_cell_pairs(2, &[(0, 2), (2, 0)]).unwrap();
        let e = tensor_shift_energy(&u).unwrap();
        assert_eq!(e.pairing, scalar(-1, 32));
        assert_eq!(e.inside, scalar(1, 128));
    }

    #[test]
    fn tensor_shift_empty_set_rejected() {
        assert!(matches!(
            tensor_shift_energy(&DyadicSet2D::empty(2).unwrap()),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn tensor_matrix_symmetric_involution() {
        for n in 2..=3u32 {
            let m = TensorShiftMatrix::new(n).unwrap();
            assert_eq!(m.dim(), ((1usize << n) - 2).pow(2));
            assert!(m.is_symmetric());
            assert!(m.squares_to_identity());
        }
    }

    #[test]
    fn spec_round_trip() {
        let u = DyadicSet2D::from_cell_pairs(2, &[(0, 0), (3, 3)]).unwrap();
        let spec = u.to_spec();
        assert_eq!(DyadicSet2D::from_spec(&spec).unwrap(), u);
        assert!(DyadicSet2D::from_spec("N=1;mask2d=0x1ff").is_err());
    }

    #[test]
    fn component_positions_agree_with_list() {
        for (k, comp) in component_list(3).into_iter().enumerate() {
            assert_eq!(component_position(comp), k);
        }
    }
}
