//! Concrete tile families and their admissibility data `(𝒞, θ, ρ, K)`.

pub mod growth;
pub mod validate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tile::{Tile, MAX_DIM};

pub use growth::GrowthFn;
pub use validate::{validate_admissibility, ValidationReport};

/// Default cap on the number of tiles a single enumeration may produce.
pub const TILE_BUDGET: usize = 2_000_000;

/// Closed axis-aligned box in frequency space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl FrequencyBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidInputs(format!(
                "box corners of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::InvalidInputs(format!("degenerate box {lo:?}..{hi:?}")));
        }
        Ok(FrequencyBox { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Largest `|ξ|_∞` over the box.
    pub fn radius(&self) -> f64 {
        self.lo.iter().chain(&self.hi).fold(0.0, |m, x| m.max(x.abs()))
    }

    fn meets(&self, axis: usize, lo: f64, hi: f64) -> bool {
        lo <= self.hi[axis] && hi >= self.lo[axis]
    }

    /// Whether the closed box `[lo, hi]` meets this one.
    pub fn intersects(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.meets(i, lo[i], hi[i]))
    }
}

/// `r` in the adjacency condition of comparable boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RFunction {
    Constant { value: f64 },
    /// `max{1, t − 1}`.
    ShiftedLinear,
}

impl RFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            RFunction::Constant { value } => value,
            RFunction::ShiftedLinear => (t - 1.0).max(1.0),
        }
    }
}

/// Isotropic box `lo + [0, side]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub side: f64,
}

impl AxisBox {
    pub fn hi(&self) -> Vec<f64> {
        self.lo.iter().map(|x| x + self.side).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// One-dimensional tiles over `±[2^j, 2^{j+1}]`, dilated by `1 + dilation`,
    /// with an optional low-pass tile over `[−2^{j_min}, 2^{j_min}]`.
    DyadicWavelet {
        j_min: i32,
        j_max: i32,
        dilation: f64,
        lowpass: bool,
    },
    /// Unit cubes at the integer lattice, dilated by `1 + 2c`.
    GaborLattice { dim: usize, c: f64 },
    /// ℓ∞ shells `[2^m, 2^{m+1})` cut into cubes of side `2^{⌈m/2⌉}`, the
    /// core `[−1, 1]^d` into unit cubes; every cube dilated by `1 + dilation`.
    WaveAtoms { dim: usize, dilation: f64 },
    /// Dyadic boxes `∏ s_i[2^{j_i}, 2^{j_i+1}]` cut into
    /// `⌈log₂(2 + max|j_i|)^{1+δ}⌉` parts per axis, dilated by `1 + δ₁`.
    MikhlinHormanderLog {
        dim: usize,
        j_min: i32,
        j_max: i32,
        delta: f64,
        delta1: f64,
        delta2: f64,
    },
    /// Tiles `(1 + 2c)B` over a finite family of nonoverlapping boxes.
    ComparableBoxes {
        boxes: Vec<AxisBox>,
        r: RFunction,
        c: f64,
    },
}

impl Generator {
    pub fn dim(&self) -> usize {
        match self {
            Generator::DyadicWavelet { .. } => 1,
            Generator::GaborLattice { dim, .. }
            | Generator::WaveAtoms { dim, .. }
            | Generator::MikhlinHormanderLog { dim, .. } => *dim,
            Generator::ComparableBoxes { boxes, .. } => boxes.first().map_or(0, |b| b.lo.len()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::DyadicWavelet { .. } => "dyadic_wavelet",
            Generator::GaborLattice { .. } => "gabor_lattice",
            Generator::WaveAtoms { .. } => "wave_atoms",
            Generator::MikhlinHormanderLog { .. } => "mikhlin_hormander_log",
            Generator::ComparableBoxes { .. } => "comparable_boxes",
        }
    }
}

/// A tile family with its admissibility data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingSpec {
    pub generator: Generator,
    /// `𝒞`.
    pub multiplicity: f64,
    pub theta: f64,
    pub growth: GrowthFn,
}

/// A generated tile with its regularity radius `ρ` and a readable label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileEntry {
    pub tile: Tile,
    pub rho: f64,
    pub label: String,
}

/// `⌈x⌉` that ignores float noise just above an integer.
fn ceil_clean(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Subdivision count `⌈log₂(2 + max|j|)^{1+δ}⌉`.
pub fn mikhlin_parts(max_abs_j: u32, delta: f64) -> usize {
    ceil_clean((2.0 + max_abs_j as f64).log2().powf(1.0 + delta)) as usize
}

/// `ρ = log₂(2 + max|j|)^{1+δ₂}`.
pub fn mikhlin_rho(max_abs_j: u32, delta2: f64) -> f64 {
    (2.0 + max_abs_j as f64).log2().powf(1.0 + delta2)
}

impl TilingSpec {
    /// Dyadic wavelet tiles; `θ = dilation/(1 + dilation)` makes the shrunk
    /// tiles an exact partition. Dilations below `1/2` keep the multiplicity
    /// at two next to the low-pass tile.
    pub fn dyadic_wavelet(j_min: i32, j_max: i32, dilation: f64, lowpass: bool) -> Self {
        let multiplicity = 2.0;
        let scales = (j_max - j_min + 1).max(1) as f64 + if lowpass { 1.0 } else { 0.0 };
        TilingSpec {
            generator: Generator::DyadicWavelet {
                j_min,
                j_max,
                dilation,
                lowpass,
            },
            multiplicity,
            theta: dilation / (1.0 + dilation),
            growth: GrowthFn::Constant {
                value: (scales / (multiplicity + 1.0)).ceil().max(1.0),
            },
        }
    }

    pub fn gabor_lattice(dim: usize, c: f64) -> Self {
        TilingSpec {
            generator: Generator::GaborLattice { dim, c },
            multiplicity: 2f64.powi(dim as i32),
            theta: 2.0 * c / (1.0 + 2.0 * c),
            growth: GrowthFn::Constant { value: 1.0 },
        }
    }

    pub fn wave_atoms(dim: usize, dilation: f64) -> Self {
        let multiplicity = 2f64.powi(dim as i32);
        TilingSpec {
            generator: Generator::WaveAtoms { dim, dilation },
            multiplicity,
            theta: dilation / (1.0 + dilation),
            growth: GrowthFn::Logarithmic {
                base: 2.0,
                slope: 1.0 / ((multiplicity + 1.0) * std::f64::consts::LN_2),
            },
        }
    }

    /// Logarithmic subdivision of the Mikhlin–Hörmander boxes with shrink
    /// factor `θ`; covering needs `δ₁ ≥ θ/(1 − θ)`.
    pub fn mikhlin_hormander_log(
        dim: usize,
        j_range: (i32, i32),
        delta: f64,
        delta1: f64,
        delta2: f64,
        theta: f64,
    ) -> Self {
        TilingSpec {
            generator: Generator::MikhlinHormanderLog {
                dim,
                j_min: j_range.0,
                j_max: j_range.1,
                delta,
                delta1,
                delta2,
            },
            multiplicity: 3f64.powi(dim as i32),
            theta,
            growth: GrowthFn::SubExponential {
                scale: 4f64.powi(dim as i32),
                rate: 1.0,
                exponent: 1.0 / (1.0 + delta2),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    /// Parameter checks shared by every generator.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let d = self.dim();
        if d == 0 || d > MAX_DIM {
            return bad(format!("dimension {d} outside 1..={MAX_DIM}"));
        }
        if !(self.multiplicity > 1.0 && self.multiplicity.is_finite()) {
            return bad(format!("multiplicity bound {} must exceed 1", self.multiplicity));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("θ = {} must lie in (0, 1)", self.theta));
        }
        self.growth.validate()?;
        match &self.generator {
            Generator::DyadicWavelet {
                j_min,
                j_max,
                dilation,
                ..
            } => {
                if j_min > j_max || *dilation < 0.0 || !dilation.is_finite() {
                    return bad(format!("dyadic_wavelet: j {j_min}..{j_max}, dilation {dilation}"));
                }
            }
            Generator::GaborLattice { c, .. } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return bad(format!("gabor_lattice: c = {c} must be positive"));
                }
            }
            Generator::WaveAtoms { dilation, .. } => {
                if !(*dilation >= 0.0 && dilation.is_finite()) {
                    return bad(format!("wave_atoms: dilation {dilation}"));
                }
            }
            Generator::MikhlinHormanderLog {
                j_min,
                j_max,
                delta,
                delta1,
                delta2,
                ..
            } => {
                if j_min > j_max || !(*delta > 0.0 && *delta1 > 0.0 && *delta2 > 0.0) {
                    return bad("mikhlin_hormander_log: need j_min ≤ j_max and δ, δ₁, δ₂ > 0".into());
                }
            }
            Generator::ComparableBoxes { boxes, c, .. } => {
                if boxes.is_empty() || !(*c > 0.0) {
                    return bad("comparable_boxes: need boxes and c > 0".into());
                }
            }
        }
        Ok(())
    }
}

/// Checks a box family for admissibility input: sides at
/// least one, disjoint interiors, and `max ℓ ≤ min ℓ · (1 + 1/r(max ℓ))`
/// for every touching pair. Returns the tiling with `θ = 1 − 1/(1 + 2c)`.
pub fn generate_comparable_boxes(boxes: Vec<AxisBox>, r: RFunction, c: f64, multiplicity: f64) -> Result<TilingSpec> {
    let d = boxes.first().map_or(0, |b| b.lo.len());
    for (i, b) in boxes.iter().enumerate() {
        if b.lo.len() != d {
            return Err(Error::DimMismatch {
                expected: d,
                got: b.lo.len(),
            });
        }
        if !(b.side >= 1.0 && b.side.is_finite()) {
            return Err(Error::InvalidInputs(format!("box {i} has side {} < 1", b.side)));
        }
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let (a, b) = (&boxes[i], &boxes[j]);
            let (ah, bh) = (a.hi(), b.hi());
            let mut touch = true;
            let mut open_overlap = true;
            for k in 0..d {
                let lo = a.lo[k].max(b.lo[k]);
                let hi = ah[k].min(bh[k]);
                touch &= lo <= hi;
                open_overlap &= lo < hi;
            }
            if open_overlap {
                return Err(Error::BoxOverlap { first: i, second: j });
            }
            if touch {
                let big = a.side.max(b.side);
                let small = a.side.min(b.side);
                let allowed = small * (1.0 + 1.0 / r.eval(big));
                if big > allowed * (1.0 + 1e-12) {
                    return Err(Error::AdjacencyViolation {
                        first: i,
                        second: j,
                        detail: format!("sides {small} and {big}: {big} > {allowed}"),
                    });
                }
            }
        }
    }
    // one metric ball per distinct side length is always enough
    let mut sides: Vec<f64> = boxes.iter().map(|b| b.side).collect();
    sides.sort_by(f64::total_cmp);
    sides.dedup();
    Ok(TilingSpec {
        generator: Generator::ComparableBoxes { boxes, r, c },
        multiplicity,
        theta: 1.0 - 1.0 / (1.0 + 2.0 * c),
        growth: GrowthFn::comparable_boxes(sides.len() as f64, c, 1.0),
    })
}

/// Mikhlin–Hörmander tiles with their `ρ` for all `j ∈ j_range^d`.
pub fn generate_mikhlin_log(
    j_range: (i32, i32),
    delta: f64,
    delta1: f64,
    delta2: f64,
    dim: usize,
) -> Result<Vec<TileEntry>> {
    let spec = TilingSpec::mikhlin_hormander_log(dim, j_range, delta, delta1, delta2, 0.5 * delta1 / (1.0 + delta1));
    spec.check()?;
    let mut out = Vec::new();
    let mut push = |e: TileEntry| -> Result<()> {
        out.push(e);
        Ok(())
    };
    mikhlin_tiles(dim, j_range, delta, delta1, delta2, None, 1.0, &mut push)?;
    Ok(out)
}

struct Budget {
    count: usize,
    limit: usize,
}

impl Budget {
    fn take(&mut self) -> Result<()> {
        self.count += 1;
        if self.count > self.limit {
            return Err(Error::RegionTooLarge {
                count: self.count,
                budget: self.limit,
            });
        }
        Ok(())
    }
}

/// Integer range of lattice indices `k` with `[k·h + a − w, k·h + a + w]`
/// meeting `[lo, hi]`.
fn index_range(lo: f64, hi: f64, offset: f64, step: f64, half: f64) -> (i64, i64) {
    let a = ((lo - half - offset) / step).ceil() as i64;
    let b = ((hi + half - offset) / step).floor() as i64;
    (a, b)
}

fn odometer(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64]) -> Result<()>) -> Result<()> {
    if ranges.iter().any(|(a, b)| a > b) {
        return Ok(());
    }
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&idx)?;
        let mut axis = 0;
        loop {
            if axis == ranges.len() {
                return Ok(());
            }
            idx[axis] += 1;
            if idx[axis] <= ranges[axis].1 {
                break;
            }
            idx[axis] = ranges[axis].0;
            axis += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn mikhlin_tiles(
    dim: usize,
    j_range: (i32, i32),
    delta: f64,
    delta1: f64,
    delta2: f64,
    region: Option<&FrequencyBox>,
    t_cap: f64,
    push: &mut dyn FnMut(TileEntry) -> Result<()>,
) -> Result<()> {
    let js: Vec<(i64, i64)> = vec![(j_range.0 as i64, j_range.1 as i64); dim];
    let signs: Vec<(i64, i64)> = vec![(0, 1); dim];
    odometer(&js, |j| {
        let max_abs = j.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as u32;
        let n = mikhlin_parts(max_abs, delta);
        let rho = mikhlin_rho(max_abs, delta2);
        odometer(&signs, |s| {
            let mut ranges = Vec::with_capacity(dim);
            let mut sides = Vec::with_capacity(dim);
            let mut starts = Vec::with_capacity(dim);
            for i in 0..dim {
                let scale = 2f64.powi(j[i] as i32);
                let side = scale / n as f64;
                // subtile k covers sign·[scale + k·side, scale + (k+1)·side]
                let start = if s[i] == 0 { scale } else { -2.0 * scale };
                let half = t_cap * (1.0 + delta1) * side / 2.0;
                let (mut a, mut b) = (0i64, n as i64 - 1);
                if let Some(reg) = region {
                    let (ra, rb) = index_range(reg.lo[i], reg.hi[i], start + side / 2.0, side, half);
                    a = a.max(ra);
                    b = b.min(rb);
                }
                ranges.push((a, b));
                sides.push(side);
                starts.push(start);
            }
            odometer(&ranges, |k| {
                let center: Vec<f64> = (0..dim)
                    .map(|i| starts[i] + (k[i] as f64 + 0.5) * sides[i])
                    .collect();
                let diag: Vec<f64> = sides.iter().map(|w| w * (1.0 + delta1)).collect();
                push(TileEntry {
                    tile: Tile::diagonal(&diag, center)?,
                    rho,
                    label: format!("j={j:?} s={s:?} k={k:?}"),
                })
            })
        })
    })
}

/// All tiles `T` of the family with `(t_cap · T) ∩ region ≠ ∅`, in a
/// deterministic order.
pub fn generate(spec: &TilingSpec, region: &FrequencyBox, t_cap: f64) -> Result<Vec<TileEntry>> {
    generate_with_budget(spec, region, t_cap, TILE_BUDGET)
}

pub fn generate_with_budget(
    spec: &TilingSpec,
    region: &FrequencyBox,
    t_cap: f64,
    budget: usize,
) -> Result<Vec<TileEntry>> {
    spec.check()?;
    let d = spec.dim();
    if region.dim() != d {
        return Err(Error::DimMismatch {
            expected: d,
            got: region.dim(),
        });
    }
    if !(t_cap >= 1.0 && t_cap.is_finite()) {
        return Err(Error::InvalidInputs(format!("t_cap = {t_cap} must be ≥ 1")));
    }
    let limit = budget;
    let mut out = Vec::new();
    let mut budget = Budget { count: 0, limit };
    let mut push = |e: TileEntry| -> Result<()> {
        let (lo, hi) = e.tile.bounding_box(t_cap);
        if region.intersects(&lo, &hi) {
            budget.take()?;
            out.push(e);
        }
        Ok(())
    };
    match &spec.generator {
        Generator::DyadicWavelet {
            j_min,
            j_max,
            dilation,
            lowpass,
        } => {
            if *lowpass {
                let w = 2f64.powi(j_min + 1) * (1.0 + dilation);
                push(TileEntry {
                    tile: Tile::diagonal(&[w], vec![0.0])?,
                    rho: 1.0,
                    label: "lowpass".into(),
                })?;
            }
            for j in *j_min..=*j_max {
                let scale = 2f64.powi(j);
                for s in [1.0, -1.0] {
                    push(TileEntry {
                        tile: Tile::diagonal(&[scale * (1.0 + dilation)], vec![s * 1.5 * scale])?,
                        rho: 1.0,
                        label: format!("j={j} s={}", if s > 0.0 { '+' } else { '-' }),
                    })?;
                }
            }
        }
        Generator::GaborLattice { dim, c } => {
            let w = 1.0 + 2.0 * c;
            let rho = 1.0 + 2.0 * c / w;
            let ranges: Vec<(i64, i64)> = (0..*dim)
                .map(|i| index_range(region.lo[i], region.hi[i], 0.0, 1.0, t_cap * w / 2.0))
                .collect();
            let count: f64 = ranges.iter().map(|(a, b)| (b - a + 1).max(0) as f64).product();
            if count > limit as f64 {
                return Err(Error::RegionTooLarge {
                    count: count.min(usize::MAX as f64) as usize,
                    budget: limit,
                });
            }
            odometer(&ranges, |k| {
                let center: Vec<f64> = k.iter().map(|&x| x as f64).collect();
                push(TileEntry {
                    tile: Tile::diagonal(&vec![w; *dim], center)?,
                    rho,
                    label: format!("k={k:?}"),
                })
            })?;
        }
        Generator::WaveAtoms { dim, dilation } => {
            let grow = 1.0 + dilation;
            // core: unit cubes of [−1, 1]^d
            odometer(&vec![(0, 1); *dim], |k| {
                let center: Vec<f64> = k.iter().map(|&x| x as f64 - 0.5).collect();
                push(TileEntry {
                    tile: Tile::diagonal(&vec![grow; *dim], center)?,
                    rho: 1.0,
                    label: format!("core k={k:?}"),
                })
            })?;
            let reach = region.radius();
            for m in 0u32..1000 {
                let inner = 2f64.powi(m as i32);
                let side = 2f64.powi(m.div_ceil(2) as i32);
                let half = t_cap * grow * side / 2.0;
                if inner - half + side / 2.0 > reach {
                    break;
                }
                let outer = 2.0 * inner;
                let cells = (2.0 * outer / side).round() as i64;
                let ranges: Vec<(i64, i64)> = (0..*dim)
                    .map(|i| {
                        let (a, b) = index_range(region.lo[i], region.hi[i], -outer + side / 2.0, side, half);
                        (a.max(0), b.min(cells - 1))
                    })
                    .collect();
                let rho = (side / 4.0).max(1.0);
                odometer(&ranges, |k| {
                    let center: Vec<f64> = k.iter().map(|&x| -outer + (x as f64 + 0.5) * side).collect();
                    let inside_core = center.iter().all(|c| c.abs() < inner);
                    if inside_core {
                        return Ok(());
                    }
                    push(TileEntry {
                        tile: Tile::diagonal(&vec![grow * side; *dim], center)?,
                        rho,
                        label: format!("m={m} k={k:?}"),
                    })
                })?;
            }
        }
        Generator::MikhlinHormanderLog {
            dim,
            j_min,
            j_max,
            delta,
            delta1,
            delta2,
        } => {
            mikhlin_tiles(*dim, (*j_min, *j_max), *delta, *delta1, *delta2, Some(region), t_cap, &mut push)?;
        }
        Generator::ComparableBoxes { boxes, r, c } => {
            let w = 1.0 + 2.0 * c;
            for (i, b) in boxes.iter().enumerate() {
                let center: Vec<f64> = b.lo.iter().map(|x| x + b.side / 2.0).collect();
                push(TileEntry {
                    tile: Tile::diagonal(&vec![w * b.side; d], center)?,
                    rho: 1.0 + 2.0 * c / w * r.eval(b.side),
                    label: format!("box {i}"),
                })?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centers(tiles: &[TileEntry]) -> Vec<f64> {
        let mut c: Vec<f64> = tiles.iter().map(|e| e.tile.center()[0]).collect();
        c.sort_by(f64::total_cmp);
        c
    }

    #[test]
    fn dyadic_region_enumeration() {
        let mut spec = TilingSpec::dyadic_wavelet(-10, 10, 0.0, true);
        spec.theta = 0.5;
        let region = FrequencyBox::new(vec![1.0], vec![8.0]).unwrap();
        let tiles = generate(&spec, &region, 1.0).unwrap();
        let expected: Vec<f64> = (-1..=3).map(|j| 1.5 * 2f64.powi(j)).collect();
        assert_eq!(centers(&tiles), expected);
        for e in &tiles {
            let w = e.tile.matrix()[(0, 0)];
            let c = e.tile.center()[0];
            assert_eq!((c - w / 2.0, c + w / 2.0), (w, 2.0 * w));
        }
    }

    #[test]
    fn gabor_region_enumeration() {
        let spec = TilingSpec::gabor_lattice(1, 0.5);
        let region = FrequencyBox::new(vec![0.0], vec![3.0]).unwrap();
        let tiles = generate(&spec, &region, 1.0).unwrap();
        assert_eq!(centers(&tiles), vec![-1.0, 0.0, 1.0, 2.0, 3.0, 4.0]);
        let small = TilingSpec::gabor_lattice(1, 0.1);
        let tiles = generate(&small, &region, 1.0).unwrap();
        assert_eq!(centers(&tiles), vec![0.0, 1.0, 2.0, 3.0]);
        assert!((tiles[0].rho - (1.0 + 0.2 / 1.2)).abs() < 1e-15);
    }

    #[test]
    fn region_budget() {
        let spec = TilingSpec::gabor_lattice(2, 0.1);
        let region = FrequencyBox::cube(2, -1e4, 1e4).unwrap();
        assert!(matches!(
            generate_with_budget(&spec, &region, 1.0, 1000),
            Err(Error::RegionTooLarge { .. })
        ));
    }

    #[test]
    fn mikhlin_counts() {
        assert_eq!(mikhlin_parts(0, 0.1), 1);
        assert_eq!(mikhlin_parts(6, 0.1), 4);
        let tiles = generate_mikhlin_log((6, 6), 0.1, 0.2, 0.1, 1).unwrap();
        assert_eq!(tiles.len(), 8);
        let one = generate_mikhlin_log((0, 0), 0.1, 0.2, 0.1, 2).unwrap();
        assert_eq!(one.len(), 4);
        let first = one
            .iter()
            .find(|e| e.tile.center().iter().all(|&c| c > 0.0))
            .unwrap();
        assert_eq!(first.tile.center(), &[1.5, 1.5]);
        assert_eq!(first.tile.diagonal_entries().unwrap(), vec![1.2, 1.2]);
        assert_eq!(first.rho, 1.0);
    }

    #[test]
    fn wave_atom_sides_track_distance() {
        let spec = TilingSpec::wave_atoms(2, 0.2);
        let region = FrequencyBox::cube(2, -64.0, 64.0).unwrap();
        let tiles = generate(&spec, &region, 1.0).unwrap();
        for e in &tiles {
            let side = e.tile.matrix()[(0, 0)] / 1.2;
            let r = crate::tile::sup_norm(e.tile.center());
            if r > 2.0 {
                assert!(side * side >= r / 4.0 && side * side <= 4.0 * r, "side {side} at {r}");
            }
        }
        // shrunk tiles partition: total area of [−64, 64]² plus the next shell
        let area: f64 = tiles
            .iter()
            .filter(|e| crate::tile::sup_norm(e.tile.center()) < 64.0)
            .map(|e| (e.tile.matrix()[(0, 0)] / 1.2).powi(2))
            .sum();
        assert_eq!(area, 128.0 * 128.0);
    }

    #[test]
    fn comparable_boxes_examples() {
        let unit: Vec<AxisBox> = (0..4)
            .map(|i| AxisBox {
                lo: vec![i as f64],
                side: 1.0,
            })
            .collect();
        let spec = generate_comparable_boxes(unit, RFunction::Constant { value: 1.0 }, 0.1, 2.0).unwrap();
        let region = FrequencyBox::new(vec![0.0], vec![4.0]).unwrap();
        for e in generate(&spec, &region, 1.0).unwrap() {
            assert!((e.rho - 7.0 / 6.0).abs() < 1e-15);
        }

        let bad = vec![
            AxisBox { lo: vec![0.0], side: 1.0 },
            AxisBox { lo: vec![1.0], side: 3.0 },
        ];
        match generate_comparable_boxes(bad, RFunction::ShiftedLinear, 0.1, 2.0) {
            Err(Error::AdjacencyViolation { first, second, .. }) => assert_eq!((first, second), (0, 1)),
            other => panic!("{other:?}"),
        }

        let sides = [1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0];
        let mut lo = 0.0;
        let mut ok = Vec::new();
        for s in sides {
            ok.push(AxisBox { lo: vec![lo], side: s });
            lo += s;
        }
        assert!(generate_comparable_boxes(ok, RFunction::ShiftedLinear, 0.1, 2.0).is_ok());
    }
}
