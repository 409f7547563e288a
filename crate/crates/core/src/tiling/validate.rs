//! Sampling-based check of Covering and both Regularity conditions on a
//! bounded region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tile::{tile_metric, Tile, TileNormalForm};
use crate::tiling::{generate, FrequencyBox, TileEntry, TilingSpec};

pub const DEFAULT_SAMPLES: usize = 100_000;
const METRIC_SLACK: f64 = 1e-9;
const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut n: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while n > 0 {
        r += (n % b) as f64 * f;
        n /= b;
        f *= inv;
    }
    r
}

/// Halton points in `[0,1)^d` with an irrational Cranley–Patterson shift so
/// that no sample lands on a dyadic boundary.
pub fn halton(index: usize, dim: usize, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate().take(dim) {
        let shift = ((i as f64 + 1.0) * 0.618_033_988_749_894_9 + 0.141_421_356_237_309_5).fract();
        *o = (radical_inverse(index as u64 + 1, PRIMES[i]) + shift).fract();
    }
}

/// Tile count per `t` probe of regularity (b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallCount {
    pub t: f64,
    pub balls: usize,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub generator: String,
    pub region: FrequencyBox,
    pub tiles: usize,
    pub candidates: usize,
    pub t_cap: f64,
    pub samples: usize,
    pub covered_fraction: f64,
    pub max_multiplicity: usize,
    pub multiplicity_point: Vec<f64>,
    pub pairs_checked: usize,
    pub max_distance: f64,
    pub distance_witness: Option<(String, String)>,
    pub shapes: usize,
    pub ball_counts: Vec<BallCount>,
}

/// Uniform bucket grid over the region; each cell lists the tiles whose
/// bounding box meets it.
struct Buckets {
    lo: Vec<f64>,
    width: Vec<f64>,
    cells: usize,
    lists: Vec<Vec<u32>>,
}

impl Buckets {
    fn new(region: &FrequencyBox, tiles: &[TileEntry]) -> Self {
        let d = region.dim();
        let per_axis = ((2.0 * (tiles.len().max(1) as f64).powf(1.0 / d as f64)).ceil() as usize)
            .clamp(1, (1usize << (20 / d)).min(4096));
        let width: Vec<f64> = (0..d)
            .map(|i| ((region.hi[i] - region.lo[i]) / per_axis as f64).max(f64::MIN_POSITIVE))
            .collect();
        let mut lists = vec![Vec::new(); per_axis.pow(d as u32)];
        for (n, e) in tiles.iter().enumerate() {
            let (lo, hi) = e.tile.bounding_box(1.0);
            let ranges: Vec<(usize, usize)> = (0..d)
                .map(|i| {
                    let a = ((lo[i] - region.lo[i]) / width[i]).floor().max(0.0) as usize;
                    let b = ((hi[i] - region.lo[i]) / width[i]).floor().max(0.0) as usize;
                    (a.min(per_axis - 1), b.min(per_axis - 1))
                })
                .collect();
            let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            'outer: loop {
                let flat = idx.iter().rev().fold(0, |acc, &k| acc * per_axis + k);
                lists[flat].push(n as u32);
                for a in 0..d {
                    idx[a] += 1;
                    if idx[a] <= ranges[a].1 {
                        continue 'outer;
                    }
                    idx[a] = ranges[a].0;
                }
                break;
            }
        }
        Buckets {
            lo: region.lo.clone(),
            width,
            cells: per_axis,
            lists,
        }
    }

    fn get(&self, x: &[f64]) -> &[u32] {
        let flat = (0..x.len()).rev().fold(0, |acc, i| {
            let k = ((x[i] - self.lo[i]) / self.width[i]).floor().max(0.0) as usize;
            acc * self.cells + k.min(self.cells - 1)
        });
        &self.lists[flat]
    }
}

fn boxes_meet(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> bool {
    a.0.iter().zip(&a.1).zip(b.0.iter().zip(&b.1)).all(|((al, ah), (bl, bh))| al <= bh && bl <= ah)
}

/// Whether the tile sets of `a` (dilated by `t`) and `b` intersect.
/// Exact for diagonal tiles, a bounding-box test otherwise.
fn tiles_meet(a: &Tile, t: f64, b: &Tile) -> bool {
    boxes_meet(&a.bounding_box(t), &b.bounding_box(1.0))
}

/// Checks Covering, Regularity (a) and Regularity (b) for the tiles of
/// `spec` that meet `region`.
pub fn validate_admissibility(spec: &TilingSpec, region: &FrequencyBox, samples: usize) -> Result<ValidationReport> {
    spec.check()?;
    let d = spec.dim();
    let tiles = generate(spec, region, 1.0)?;
    let mut point = vec![0.0; d];

    // Covering
    let at = |n: usize, out: &mut [f64]| {
        halton(n, d, out);
        for i in 0..d {
            out[i] = region.lo[i] + out[i] * (region.hi[i] - region.lo[i]);
        }
    };
    if tiles.is_empty() {
        at(0, &mut point);
        return Err(Error::CoverageGap(point));
    }
    let buckets = Buckets::new(region, &tiles);
    let shrink = 1.0 - spec.theta;
    let per_sample: Vec<(usize, bool)> = (0..samples)
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |x, n| {
                at(n, x);
                let mut count = 0;
                let mut covered = false;
                for &k in buckets.get(x) {
                    let t = &tiles[k as usize].tile;
                    if t.contains(x, 1.0).unwrap_or(false) {
                        count += 1;
                        covered = covered || t.contains(x, shrink).unwrap_or(false);
                    }
                }
                (count, covered)
            },
        )
        .collect();
    if let Some(n) = per_sample.iter().position(|s| !s.1) {
        at(n, &mut point);
        return Err(Error::CoverageGap(point));
    }
    if let Some(n) = per_sample.iter().position(|s| s.0 as f64 > spec.multiplicity) {
        at(n, &mut point);
        return Err(Error::MultiplicityExceeded {
            point,
            count: per_sample[n].0,
            bound: spec.multiplicity,
        });
    }
    let (arg, max_mult) = per_sample
        .iter()
        .enumerate()
        .fold((0, 0), |b, (n, s)| if s.0 > b.1 { (n, s.0) } else { b });
    at(arg, &mut point);
    let multiplicity_point = point.clone();

    // Regularity (a): every T2 meeting ρ(T1)T1
    let t_cap = tiles.iter().map(|e| e.rho).fold(1.0, f64::max);
    let mut lo = region.lo.clone();
    let mut hi = region.hi.clone();
    for e in &tiles {
        let (a, b) = e.tile.bounding_box(e.rho);
        for i in 0..d {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(b[i]);
        }
    }
    let reach = FrequencyBox::new(lo, hi)?;
    let mut candidates = generate(spec, &reach, 1.0)?;
    candidates.sort_by(|a, b| a.tile.bounding_box(1.0).0[0].total_cmp(&b.tile.bounding_box(1.0).0[0]));
    let starts: Vec<f64> = candidates.iter().map(|e| e.tile.bounding_box(1.0).0[0]).collect();
    let results: Vec<(usize, f64, Option<(usize, usize)>)> = tiles
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let dilated = e.tile.bounding_box(e.rho);
            let end = starts.partition_point(|&s| s <= dilated.1[0]);
            let mut pairs = 0;
            let mut worst = 0.0;
            let mut witness = None;
            for (j, c) in candidates[..end].iter().enumerate() {
                if !tiles_meet(&e.tile, e.rho, &c.tile) {
                    continue;
                }
                pairs += 1;
                let dist = tile_metric(&e.tile, &c.tile).unwrap_or(f64::INFINITY);
                if dist > worst {
                    worst = dist;
                    witness = Some((i, j));
                }
            }
            (pairs, worst, witness)
        })
        .collect();
    let pairs_checked = results.iter().map(|r| r.0).sum();
    let (max_distance, witness) = results
        .iter()
        .fold((0.0, None), |b, r| if r.1 > b.0 { (r.1, r.2) } else { b });
    let distance_witness = witness.map(|(i, j)| (tiles[i].label.clone(), candidates[j].label.clone()));
    if max_distance > spec.multiplicity + METRIC_SLACK {
        let (first, second) = distance_witness.expect("a pair realises the maximum");
        return Err(Error::RegularityViolation {
            first,
            second,
            distance: max_distance,
        });
    }

    // Regularity (b): greedy balls of radius 𝒞 over shapes ordered by ρ
    let mut order: Vec<usize> = (0..tiles.len()).collect();
    order.sort_by(|&a, &b| tiles[a].rho.total_cmp(&tiles[b].rho));
    let mut shapes: Vec<TileNormalForm> = Vec::new();
    let mut centers: Vec<Tile> = Vec::new();
    let mut ball_counts: Vec<BallCount> = Vec::new();
    for (pos, &k) in order.iter().enumerate() {
        let e = &tiles[k];
        let nf = e.tile.normal_form();
        if !shapes.iter().any(|s| s.approx_eq(&nf, 1e-9)) {
            let dot = e.tile.centered();
            let near = centers
                .iter()
                .any(|c| tile_metric(c, &dot).map_or(false, |m| m <= spec.multiplicity));
            if !near {
                centers.push(dot);
            }
            shapes.push(nf);
        }
        let last_at_level = order.get(pos + 1).map_or(true, |&n| tiles[n].rho > e.rho);
        if last_at_level {
            let budget = spec.growth.eval(e.rho.max(1.0));
            ball_counts.push(BallCount {
                t: e.rho,
                balls: centers.len(),
                budget,
            });
            if centers.len() as f64 > budget * (1.0 + 1e-12) {
                return Err(Error::KBudgetExceeded {
                    t: e.rho,
                    balls: centers.len(),
                    budget,
                });
            }
        }
    }

    Ok(ValidationReport {
        generator: spec.generator.name().to_string(),
        region: region.clone(),
        tiles: tiles.len(),
        candidates: candidates.len(),
        t_cap,
        samples,
        covered_fraction: 1.0,
        max_multiplicity: max_mult,
        multiplicity_point,
        pairs_checked,
        max_distance,
        distance_witness,
        shapes: shapes.len(),
        ball_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::{generate_comparable_boxes, AxisBox, RFunction};

    #[test]
    fn halton_in_unit_cube() {
        let mut x = [0.0; 3];
        for n in 0..1000 {
            halton(n, 3, &mut x);
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn gabor_passes() {
        for d in [1, 2] {
            let spec = TilingSpec::gabor_lattice(d, 0.25);
            let region = FrequencyBox::cube(d, -5.0, 5.0).unwrap();
            let r = validate_admissibility(&spec, &region, 20_000).unwrap();
            assert!(r.max_multiplicity as f64 <= spec.multiplicity);
            assert_eq!(r.max_distance, 0.0);
            assert_eq!(r.ball_counts.last().unwrap().balls, 1);
        }
    }

    #[test]
    fn shrunk_partition_leaves_gap() {
        let boxes: Vec<AxisBox> = (0..6).map(|i| AxisBox { lo: vec![i as f64], side: 1.0 }).collect();
        let mut spec = generate_comparable_boxes(boxes, RFunction::Constant { value: 1.0 }, 0.1, 2.0).unwrap();
        if let crate::tiling::Generator::ComparableBoxes { c, .. } = &mut spec.generator {
            *c = 1e-9;
        }
        spec.theta = 0.5;
        let region = FrequencyBox::new(vec![0.5], vec![5.5]).unwrap();
        assert!(matches!(
            validate_admissibility(&spec, &region, 5000),
            Err(Error::CoverageGap(_))
        ));
    }

    #[test]
    fn dyadic_and_wave_atoms_pass() {
        let spec = TilingSpec::dyadic_wavelet(-4, 3, 0.25, true);
        let region = FrequencyBox::new(vec![-16.0], vec![16.0]).unwrap();
        validate_admissibility(&spec, &region, 20_000).unwrap();
        for d in [1, 2] {
            let spec = TilingSpec::wave_atoms(d, 0.2);
            let region = FrequencyBox::cube(d, -100.0, 100.0).unwrap();
            let r = validate_admissibility(&spec, &region, 20_000).unwrap();
            assert!(r.max_distance <= 1.0 + 1e-12, "{r:?}");
        }
    }

    #[test]
    fn mikhlin_margin() {
        let region = FrequencyBox::new(vec![1.0 / 64.0], vec![128.0]).unwrap();
        let ok = TilingSpec::mikhlin_hormander_log(1, (-6, 6), 0.1, 0.2, 0.1, 0.1);
        validate_admissibility(&ok, &region, 20_000).unwrap();
        let thin = TilingSpec::mikhlin_hormander_log(1, (-6, 6), 0.1, 0.05, 0.1, 0.1);
        assert!(matches!(
            validate_admissibility(&thin, &region, 20_000),
            Err(Error::CoverageGap(_))
        ));
    }
}
