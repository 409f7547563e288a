//! Tiles `(D, ξ)` of frequency space, their tile sets
//! `{η : |D⁻¹(η − ξ)|_∞ ≤ 1/2}`, and the shape metric on origin-centred tiles.
//!
//! All norms here are ℓ∞ norms; matrix norms are the induced ℓ∞ → ℓ∞
//! operator norm (maximum absolute row sum).

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

/// Tiles whose ℓ∞ condition number exceeds this are rejected.
pub const CONDITION_CAP: f64 = 1e12;

/// Relative slack used by membership tests. Boundary ties count as inside.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

/// A tile: invertible matrix `D` and centre `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TileRepr", into = "TileRepr")]
pub struct Tile {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    center: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TileRepr {
    dim: usize,
    #[serde(rename = "D")]
    matrix: Vec<f64>,
    center: Vec<f64>,
}

impl TryFrom<TileRepr> for Tile {
    type Error = Error;

    fn try_from(r: TileRepr) -> Result<Self> {
        Tile::from_rows(r.dim, &r.matrix, r.center)
    }
}

impl From<Tile> for TileRepr {
    fn from(t: Tile) -> Self {
        let dim = t.dim();
        let mut matrix = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                matrix.push(t.matrix[(i, j)]);
            }
        }
        TileRepr {
            dim,
            matrix,
            center: t.center,
        }
    }
}

/// ℓ∞ → ℓ∞ operator norm: maximum absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// ℓ∞ norm of a vector.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl Tile {
    pub fn new(matrix: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::InvalidTile(format!(
                "matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if dim > MAX_DIM {
            return Err(Error::InvalidTile(format!(
                "dimension {dim} exceeds cap {MAX_DIM}"
            )));
        }
        if center.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                got: center.len(),
            });
        }
        if matrix.iter().chain(center.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidTile("non-finite entry".into()));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidTile("matrix is singular".into()))?;
        let cond = inf_norm(&matrix) * inf_norm(&inverse);
        if !cond.is_finite() || cond > CONDITION_CAP {
            return Err(Error::InvalidTile(format!(
                "condition estimate {cond:e} exceeds cap {CONDITION_CAP:e}"
            )));
        }
        Ok(Tile {
            matrix,
            inverse,
            center,
        })
    }

    /// Builds a tile from a row-major matrix.
    pub fn from_rows(dim: usize, rows: &[f64], center: Vec<f64>) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                got: rows.len(),
            });
        }
        Tile::new(DMatrix::from_row_slice(dim, dim, rows), center)
    }

    pub fn diagonal(diag: &[f64], center: Vec<f64>) -> Result<Self> {
        Tile::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)),
            center,
        )
    }

    /// Axis-aligned box `∏ [lo_i, hi_i]` as a tile.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let side: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
        let center = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        Tile::diagonal(&side, center)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.matrix[(i, j)] == 0.0))
    }

    /// Diagonal entries, or `None` when `D` is not diagonal.
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        self.is_diagonal()
            .then(|| (0..self.dim()).map(|i| self.matrix[(i, i)]).collect())
    }

    /// `tT`: isotropic dilation about the centre.
    pub fn dilate(&self, t: f64) -> Result<Tile> {
        Tile::new(&self.matrix * t, self.center.clone())
    }

    /// `Ṫ`: the same tile moved to the origin.
    pub fn centered(&self) -> Tile {
        Tile {
            matrix: self.matrix.clone(),
            inverse: self.inverse.clone(),
            center: vec![0.0; self.dim()],
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// Normalised coordinates `D⁻¹(η − ξ)`, written into `out`.
    pub fn local_coords_into(&self, eta: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.inverse[(i, j)] * (eta[j] - self.center[j]);
            }
            out[i] = acc;
        }
    }

    pub fn local_coords(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(eta.len())?;
        let mut out = vec![0.0; self.dim()];
        self.local_coords_into(eta, &mut out);
        Ok(out)
    }

    /// `|D⁻¹(η − ξ)|_∞`.
    pub fn local_radius(&self, eta: &[f64]) -> Result<f64> {
        Ok(sup_norm(&self.local_coords(eta)?))
    }

    /// Membership of `η` in the tile set of `tT`.
    pub fn contains(&self, eta: &[f64], t: f64) -> Result<bool> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInputs(format!("dilation {t} must be finite and >= 0")));
        }
        if eta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInputs("non-finite query point".into()));
        }
        let r = self.local_radius(eta)?;
        Ok(within_half(r, t))
    }

    /// Bounding box of the tile set of `tT`.
    pub fn bounding_box(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for i in 0..d {
            let half: f64 = (0..d).map(|j| self.matrix[(i, j)].abs()).sum::<f64>() * 0.5 * t;
            lo[i] = self.center[i] - half;
            hi[i] = self.center[i] + half;
        }
        (lo, hi)
    }

    pub fn normal_form(&self) -> TileNormalForm {
        normal_form(self)
    }
}

/// `r ≤ t/2` with the library's relative slack.
#[inline]
pub fn within_half(r: f64, t: f64) -> bool {
    let half = 0.5 * t;
    r <= half + MEMBERSHIP_RTOL * half.max(r)
}

/// Shape distance `log₂ max{|D₁⁻¹D₂|, |D₂⁻¹D₁|}`; independent of centres.
pub fn tile_metric(a: &Tile, b: &Tile) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.matrix() == b.matrix() {
        return Ok(0.0);
    }
    let n12 = inf_norm(&(a.inverse() * b.matrix()));
    let n21 = inf_norm(&(b.inverse() * a.matrix()));
    // Rounding can push the product of the norms slightly below one.
    Ok(n12.max(n21).log2().max(0.0))
}

/// Two-sided bound on `|D₂⁻¹x|` predicted from `|D₁⁻¹x|` and the metric.
pub fn comparability_envelope(a: &Tile, b: &Tile, x: &[f64]) -> Result<(f64, f64)> {
    let dist = tile_metric(a, b)?;
    let base = sup_norm(&a.centered().local_coords(x)?);
    let scale = dist.exp2();
    Ok((base / scale, base * scale))
}

/// Number of tiles whose `t`-dilate contains `xi`.
pub fn count_overlaps(tiles: &[Tile], xi: &[f64], t: f64) -> Result<usize> {
    let mut n = 0;
    for tile in tiles {
        if tile.contains(xi, t)? {
            n += 1;
        }
    }
    Ok(n)
}

/// Canonical representative of a tile modulo column permutations and sign
/// flips, which leave the tile set unchanged.
///
/// `D = representative · P` with `P` a signed permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct TileNormalForm {
    pub representative: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    pub center: Vec<f64>,
}

impl TileNormalForm {
    /// Entrywise comparison with relative tolerance.
    pub fn approx_eq(&self, other: &TileNormalForm, rtol: f64) -> bool {
        if self.representative.shape() != other.representative.shape() {
            return false;
        }
        let scale = self
            .representative
            .iter()
            .chain(other.representative.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(1e-300);
        let mat_ok = self
            .representative
            .iter()
            .zip(other.representative.iter())
            .all(|(a, b)| (a - b).abs() <= rtol * scale);
        let cscale = self
            .center
            .iter()
            .chain(other.center.iter())
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let c_ok = self
            .center
            .iter()
            .zip(&other.center)
            .all(|(a, b)| (a - b).abs() <= rtol * cscale);
        mat_ok && c_ok
    }
}

fn column_order(a: &[f64], b: &[f64]) -> Ordering {
    let na = sup_norm(a);
    let nb = sup_norm(b);
    nb.total_cmp(&na)
        .then_with(|| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.abs().total_cmp(&y.abs()))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

pub fn normal_form(tile: &Tile) -> TileNormalForm {
    let d = tile.dim();
    let m = tile.matrix();
    let mut columns: Vec<(usize, f64, Vec<f64>)> = (0..d)
        .map(|j| {
            let col: Vec<f64> = m.column(j).iter().copied().collect();
            // first index of the largest magnitude decides the sign
            let mut best = 0;
            for i in 1..d {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            let sign = if col[best] < 0.0 { -1.0 } else { 1.0 };
            let fixed = col.iter().map(|x| x * sign).collect();
            (j, sign, fixed)
        })
        .collect();
    columns.sort_by(|a, b| column_order(&a.2, &b.2));

    let mut representative = DMatrix::zeros(d, d);
    let mut factor = DMatrix::zeros(d, d);
    for (pos, (orig, sign, col)) in columns.iter().enumerate() {
        for i in 0..d {
            representative[(i, pos)] = col[i];
        }
        factor[(pos, *orig)] = *sign;
    }
    TileNormalForm {
        representative,
        factor,
        center: tile.center().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1(d: f64, c: f64) -> Tile {
        Tile::diagonal(&[d], vec![c]).unwrap()
    }

    #[test]
    fn unit_tile_boundary_and_dilation() {
        let t = t1(1.0, 0.0);
        assert!(t.contains(&[0.5], 1.0).unwrap());
        assert!(!t.contains(&[0.75], 1.0).unwrap());
        assert!(t.contains(&[0.75], 2.0).unwrap());
        assert!(t.contains(&[0.0], 0.0).unwrap());
    }

    #[test]
    fn anisotropic_membership() {
        let t = Tile::diagonal(&[2.0, 1.0], vec![4.0, 0.0]).unwrap();
        assert_eq!(t.local_radius(&[5.0, 0.4]).unwrap(), 0.5);
        assert!(t.contains(&[5.0, 0.4], 1.0).unwrap());
        assert!(!t.contains(&[5.0, 0.51], 1.0).unwrap());
    }

    #[test]
    fn singular_and_ill_conditioned_rejected() {
        assert!(matches!(
            Tile::from_rows(2, &[1.0, 2.0, 2.0, 4.0], vec![0.0, 0.0]),
            Err(Error::InvalidTile(_))
        ));
        assert!(Tile::diagonal(&[1.0, 1e-13], vec![0.0, 0.0]).is_err());
        assert!(Tile::diagonal(&[f64::NAN], vec![0.0]).is_err());
        assert!(Tile::diagonal(&[1.0; 9], vec![0.0; 9]).is_err());
    }

    #[test]
    fn metric_examples() {
        let a = Tile::diagonal(&[1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let b = Tile::diagonal(&[2.0, 2.0], vec![3.0, -1.0]).unwrap();
        assert!((tile_metric(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(tile_metric(&b, &b).unwrap(), 0.0);
        let c = Tile::diagonal(&[4.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!((tile_metric(&a, &c).unwrap() - 2.0).abs() < 1e-15);
        let e = t1(1.0, 0.0);
        assert!(matches!(
            tile_metric(&a, &e),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn envelope_examples() {
        let a = t1(1.0, 0.0);
        let b = t1(2.0, 0.0);
        let (lo, hi) = comparability_envelope(&a, &b, &[1.0]).unwrap();
        assert_eq!((lo, hi), (0.5, 2.0));
        let (lo, hi) = comparability_envelope(&a, &a, &[0.3]).unwrap();
        assert_eq!((lo, hi), (0.3, 0.3));
    }

    #[test]
    fn normal_form_examples() {
        let a = Tile::diagonal(&[1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let b = Tile::from_rows(2, &[0.0, 1.0, 2.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(a.normal_form().representative, b.normal_form().representative);

        // diag(2,1)·swap spans the transposed box, so it is not equivalent
        let c = Tile::from_rows(2, &[0.0, 2.0, 1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let d = Tile::diagonal(&[2.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(c.normal_form().representative, d.normal_form().representative);
        assert_ne!(a.normal_form().representative, c.normal_form().representative);
        assert!(c.contains(&[1.0, 0.0], 1.0).unwrap());
        assert!(!a.contains(&[1.0, 0.0], 1.0).unwrap());

        let r = t1(-3.0, 0.0).normal_form();
        assert_eq!(r.representative[(0, 0)], 3.0);
        assert_eq!(r.factor[(0, 0)], -1.0);
    }

    #[test]
    fn normal_form_factorises() {
        let t = Tile::from_rows(3, &[1.0, -4.0, 0.5, 2.0, 1.0, -3.0, 0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0])
            .unwrap();
        let nf = t.normal_form();
        let back = &nf.representative * &nf.factor;
        assert!((back - t.matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn overlap_counts_on_integer_lattice() {
        let tiles: Vec<Tile> = (-5..=5).map(|k| t1(1.0, k as f64)).collect();
        assert_eq!(count_overlaps(&tiles, &[0.5], 1.0).unwrap(), 2);
        // brute force: k with |0.5 - k| <= 1.5
        let brute = (-5..=5).filter(|k| (0.5 - *k as f64).abs() <= 1.5).count();
        assert_eq!(brute, 4);
        assert_eq!(count_overlaps(&tiles, &[0.5], 3.0).unwrap(), brute);
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let t = Tile::from_rows(2, &[0.1, 0.7, -1.0 / 3.0, 2.5], vec![1e-17, 3.3]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"dim\":2"));
        let back: Tile = serde_json::from_str(&s).unwrap();
        assert_eq!(back.matrix(), t.matrix());
        assert_eq!(back.center(), t.center());
        assert!(serde_json::from_str::<Tile>(r#"{"dim":2,"D":[1,0,0],"center":[0,0]}"#).is_err());
    }
}
