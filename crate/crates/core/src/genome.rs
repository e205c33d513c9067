//! Low-rank factorized genomes and their variation operators.
//!
//! A genome is a list of `(B, A)` factor pairs, one per adapted layer, with
//! `B: d x r` and `A: r x k_cols`. The effective update of a layer is
//! `(alpha / r) * B * A`, which has rank at most `r`.
//!
//! Parameters live in one contiguous flat vector (per layer: `B` row-major,
//! then `A` row-major) so that single-objective baselines can treat a genome
//! as a point in `R^D` with `D = sum((d + k_cols) * r)`.

use base64::Engine;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, label};

/// Default LoRA scaling factor.
pub const DEFAULT_ALPHA: f64 = 32.0;

#[derive(Debug, Error, PartialEq)]
pub enum GenomeError {
    #[error("invalid layer shape d={d}, k_cols={k_cols}, r={r}: need 1 <= r <= min(d, k_cols)")]
    Shape { d: usize, k_cols: usize, r: usize },
    #[error("invalid parameter {name} = {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("incompatible genomes: {0}")]
    Incompatible(String),
    #[error("layer index {index} out of range for a genome with {layers} layers")]
    LayerOutOfRange { index: usize, layers: usize },
    #[error("genome contains a non-finite entry")]
    NonFinite,
    #[error("malformed genome snapshot: {0}")]
    Snapshot(String),
}

/// Dimensions of one adapted layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerShape {
    pub d: usize,
    pub k_cols: usize,
    pub r: usize,
}

impl LayerShape {
    pub fn new(d: usize, k_cols: usize, r: usize) -> Result<Self, GenomeError> {
        let shape = Self { d, k_cols, r };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        if self.d == 0 || self.k_cols == 0 || self.r == 0 || self.r > self.d.min(self.k_cols) {
            return Err(GenomeError::Shape {
                d: self.d,
                k_cols: self.k_cols,
                r: self.r,
            });
        }
        Ok(())
    }

    /// Number of scalar parameters in `B` and `A` together.
    pub fn param_count(&self) -> usize {
        (self.d + self.k_cols) * self.r
    }
}

/// Total flat dimension of a shape list.
pub fn flat_dim(shapes: &[LayerShape]) -> usize {
    shapes.iter().map(LayerShape::param_count).sum()
}

/// Desk-scale default: two 32x32 layers at rank 4 (`D = 512`).
pub fn default_shapes() -> Vec<LayerShape> {
    vec![LayerShape { d: 32, k_cols: 32, r: 4 }; 2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenomeId(pub u64);

/// The evolved individual. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankGenome {
    shapes: Vec<LayerShape>,
    params: Vec<f64>,
    alpha: f64,
    id: GenomeId,
}

impl AsRef<LowRankGenome> for LowRankGenome {
    fn as_ref(&self) -> &LowRankGenome {
        self
    }
}

impl LowRankGenome {
    /// Builds a genome from its flat parameter vector.
    pub fn from_flat(
        shapes: Vec<LayerShape>,
        params: Vec<f64>,
        alpha: f64,
        id: GenomeId,
    ) -> Result<Self, GenomeError> {
        for s in &shapes {
            s.validate()?;
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(GenomeError::Parameter { name: "alpha", value: alpha });
        }
        let dim = flat_dim(&shapes);
        if params.len() != dim {
            return Err(GenomeError::Incompatible(format!(
                "flat vector has {} entries, shape list needs {dim}",
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(GenomeError::NonFinite);
        }
        Ok(Self { shapes, params, alpha, id })
    }

    /// Builds a genome from per-layer `(B, A)` pairs.
    pub fn from_layers(
        layers: &[(DMatrix<f64>, DMatrix<f64>)],
        alpha: f64,
        id: GenomeId,
    ) -> Result<Self, GenomeError> {
        let mut shapes = Vec::with_capacity(layers.len());
        let mut params = Vec::new();
        for (b, a) in layers {
            let shape = LayerShape::new(b.nrows(), a.ncols(), b.ncols())?;
            if a.nrows() != shape.r {
                return Err(GenomeError::Incompatible(format!(
                    "B is {}x{} but A is {}x{}",
                    b.nrows(),
                    b.ncols(),
                    a.nrows(),
                    a.ncols()
                )));
            }
            push_row_major(&mut params, b);
            push_row_major(&mut params, a);
            shapes.push(shape);
        }
        Self::from_flat(shapes, params, alpha, id)
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn id(&self) -> GenomeId {
        self.id
    }

    pub fn with_id(mut self, id: GenomeId) -> Self {
        self.id = id;
        self
    }

    /// Flat dimension `D`.
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn num_layers(&self) -> usize {
        self.shapes.len()
    }

    /// Flat parameter view.
    pub fn flatten(&self) -> &[f64] {
        &self.params
    }

    /// Inverse of [`flatten`](Self::flatten): same shapes, alpha and id, new parameters.
    pub fn unflatten(&self, params: Vec<f64>) -> Result<Self, GenomeError> {
        Self::from_flat(self.shapes.clone(), params, self.alpha, self.id)
    }

    fn layer_offset(&self, index: usize) -> Result<usize, GenomeError> {
        if index >= self.shapes.len() {
            return Err(GenomeError::LayerOutOfRange {
                index,
                layers: self.shapes.len(),
            });
        }
        Ok(self.shapes[..index].iter().map(LayerShape::param_count).sum())
    }

    pub fn b(&self, index: usize) -> Result<DMatrix<f64>, GenomeError> {
        let off = self.layer_offset(index)?;
        let s = self.shapes[index];
        Ok(DMatrix::from_row_slice(s.d, s.r, &self.params[off..off + s.d * s.r]))
    }

    pub fn a(&self, index: usize) -> Result<DMatrix<f64>, GenomeError> {
        let off = self.layer_offset(index)?;
        let s = self.shapes[index];
        let off = off + s.d * s.r;
        Ok(DMatrix::from_row_slice(s.r, s.k_cols, &self.params[off..off + s.r * s.k_cols]))
    }

    /// Effective update `(alpha / r) * B * A` of one layer.
    pub fn effective_delta(&self, index: usize) -> Result<DMatrix<f64>, GenomeError> {
        let b = self.b(index)?;
        let a = self.a(index)?;
        let scale = self.alpha / self.shapes[index].r as f64;
        Ok((b * a) * scale)
    }

    pub fn to_snapshot(&self) -> GenomeSnapshot {
        let mut layers = Vec::with_capacity(self.shapes.len());
        for (i, s) in self.shapes.iter().enumerate() {
            // Indices come from our own shape list.
            let b = self.b(i).expect("layer index in range");
            let a = self.a(i).expect("layer index in range");
            layers.push(LayerSnapshot {
                d: s.d,
                k_cols: s.k_cols,
                r: s.r,
                b: MatrixPayload::from_matrix(&b),
                a: MatrixPayload::from_matrix(&a),
            });
        }
        GenomeSnapshot {
            id: self.id.0,
            alpha: self.alpha,
            layers,
        }
    }

    pub fn from_snapshot(snap: &GenomeSnapshot) -> Result<Self, GenomeError> {
        let mut layers = Vec::with_capacity(snap.layers.len());
        for l in &snap.layers {
            let shape = LayerShape::new(l.d, l.k_cols, l.r)?;
            let b = l.b.to_matrix(shape.d, shape.r)?;
            let a = l.a.to_matrix(shape.r, shape.k_cols)?;
            layers.push((b, a));
        }
        Self::from_layers(&layers, snap.alpha, GenomeId(snap.id))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_snapshot()).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GenomeError> {
        let snap: GenomeSnapshot =
            serde_json::from_str(text).map_err(|e| GenomeError::Snapshot(e.to_string()))?;
        Self::from_snapshot(&snap)
    }
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
}

/// Serialized genome: shape header per layer plus matrix payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeSnapshot {
    pub id: u64,
    pub alpha: f64,
    pub layers: Vec<LayerSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSnapshot {
    pub d: usize,
    pub k_cols: usize,
    pub r: usize,
    pub b: MatrixPayload,
    pub a: MatrixPayload,
}

/// Row-major matrix payload, either as nested arrays or as base64 of
/// little-endian `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixPayload {
    Rows(Vec<Vec<f64>>),
    Base64 { encoding: String, data: String },
}

pub const BASE64_ENCODING: &str = "base64-f64le";

impl MatrixPayload {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixPayload::Rows((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
    }

    pub fn base64_from_matrix(m: &DMatrix<f64>) -> Self {
        let mut bytes = Vec::with_capacity(m.len() * 8);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
        MatrixPayload::Base64 {
            encoding: BASE64_ENCODING.to_string(),
            data: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn to_matrix(&self, rows: usize, cols: usize) -> Result<DMatrix<f64>, GenomeError> {
        let values: Vec<f64> = match self {
            MatrixPayload::Rows(r) => {
                if r.len() != rows || r.iter().any(|row| row.len() != cols) {
                    return Err(GenomeError::Snapshot(format!("expected a {rows}x{cols} matrix")));
                }
                r.iter().flatten().copied().collect()
            }
            MatrixPayload::Base64 { encoding, data } => {
                if encoding != BASE64_ENCODING {
                    return Err(GenomeError::Snapshot(format!("unknown encoding {encoding}")));
                }
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(data)
                    .map_err(|e| GenomeError::Snapshot(e.to_string()))?;
                if bytes.len() != rows * cols * 8 {
                    return Err(GenomeError::Snapshot(format!(
                        "payload has {} bytes, expected {}",
                        bytes.len(),
                        rows * cols * 8
                    )));
                }
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect()
            }
        };
        Ok(DMatrix::from_row_slice(rows, cols, &values))
    }
}

/// Draws every entry i.i.d. from `N(0, sigma_init^2)`.
pub fn random_init(
    shapes: &[LayerShape],
    sigma_init: f64,
    alpha: f64,
    seed: u64,
) -> Result<LowRankGenome, GenomeError> {
    if !(sigma_init.is_finite() && sigma_init > 0.0) {
        return Err(GenomeError::Parameter { name: "sigma_init", value: sigma_init });
    }
    for s in shapes {
        s.validate()?;
    }
    let mut rng = rng::stream(seed, &[label::INIT]);
    let normal = Normal::new(0.0, sigma_init).expect("positive finite std");
    let params = (0..flat_dim(shapes)).map(|_| normal.sample(&mut rng)).collect();
    LowRankGenome::from_flat(
        shapes.to_vec(),
        params,
        alpha,
        GenomeId(rng::derive_seed(seed, &[label::INIT])),
    )
}

/// `child = parent + sigma * N(0, I)` over all `B` and `A` entries.
pub fn gaussian_mutate(
    parent: &LowRankGenome,
    sigma: f64,
    seed: u64,
) -> Result<LowRankGenome, GenomeError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(GenomeError::Parameter { name: "sigma", value: sigma });
    }
    let mut rng = rng::stream(seed, &[label::MUTATE]);
    let params = parent
        .params
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(&mut rng);
            p + sigma * z
        })
        .collect();
    LowRankGenome::from_flat(
        parent.shapes.clone(),
        params,
        parent.alpha,
        GenomeId(rng::derive_seed(seed, &[label::MUTATE])),
    )
}

/// Convex combination of the factors: `A' = g*A1 + (1-g)*A2`, `B' = g*B1 + (1-g)*B2`.
///
/// Each layer of the child is again a product of a `d x r` and an `r x k_cols`
/// matrix, so its effective update keeps rank at most `r`.
pub fn rank_preserving_crossover(
    p1: &LowRankGenome,
    p2: &LowRankGenome,
    gamma: f64,
) -> Result<LowRankGenome, GenomeError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(GenomeError::Parameter { name: "gamma", value: gamma });
    }
    if p1.shapes != p2.shapes {
        return Err(GenomeError::Incompatible("parents have different shape lists".into()));
    }
    if p1.alpha != p2.alpha {
        return Err(GenomeError::Incompatible(format!(
            "parents have different alpha ({} vs {})",
            p1.alpha, p2.alpha
        )));
    }
    let params = p1
        .params
        .iter()
        .zip(&p2.params)
        .map(|(&a, &b)| gamma * a + (1.0 - gamma) * b)
        .collect();
    let id = rng::derive_seed(p1.id.0, &[p2.id.0, gamma.to_bits()]);
    LowRankGenome::from_flat(p1.shapes.clone(), params, p1.alpha, GenomeId(id))
}

pub const GAMMA_LOW: f64 = 0.3;
pub const GAMMA_HIGH: f64 = 0.7;

/// Crossover weight, uniform on `[0.3, 0.7]`.
pub fn sample_gamma(seed: u64) -> f64 {
    let mut rng = rng::stream(seed, &[label::GAMMA]);
    rng.random_range(GAMMA_LOW..=GAMMA_HIGH)
}

/// Singular-value threshold for [`numerical_rank`].
pub const RANK_REL_TOL: f64 = 1e-8;

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shapes() -> Vec<LayerShape> {
        vec![LayerShape::new(6, 5, 2).unwrap(), LayerShape::new(4, 7, 3).unwrap()]
    }

    #[test]
    fn shape_validation() {
        assert!(LayerShape::new(4, 4, 5).is_err());
        assert!(LayerShape::new(0, 4, 1).is_err());
        assert!(LayerShape::new(4, 2, 2).is_ok());
        let bad = [LayerShape { d: 3, k_cols: 2, r: 3 }];
        assert!(matches!(random_init(&bad, 0.1, 32.0, 1), Err(GenomeError::Shape { .. })));
    }

    #[test]
    fn init_is_small_and_deterministic() {
        let g1 = random_init(&default_shapes(), 0.01, DEFAULT_ALPHA, 9).unwrap();
        let g2 = random_init(&default_shapes(), 0.01, DEFAULT_ALPHA, 9).unwrap();
        let g3 = random_init(&default_shapes(), 0.01, DEFAULT_ALPHA, 10).unwrap();
        assert_eq!(g1, g2);
        assert_ne!(g1.flatten(), g3.flatten());
        assert_eq!(g1.dim(), 512);
        assert!(g1.flatten().iter().all(|v| v.abs() < 0.1));
        assert!(random_init(&default_shapes(), 0.0, DEFAULT_ALPHA, 1).is_err());
    }

    #[test]
    fn seeds_one_and_two_differ() {
        let a = random_init(&shapes(), 0.01, DEFAULT_ALPHA, 1).unwrap();
        let b = random_init(&shapes(), 0.01, DEFAULT_ALPHA, 2).unwrap();
        assert!(a.flatten().iter().zip(b.flatten()).any(|(x, y)| x != y));
    }

    #[test]
    fn mutation_rejects_bad_sigma_and_keeps_parent() {
        let p = random_init(&shapes(), 0.1, DEFAULT_ALPHA, 3).unwrap();
        let before = p.clone();
        assert!(gaussian_mutate(&p, f64::NAN, 1).is_err());
        assert!(gaussian_mutate(&p, f64::INFINITY, 1).is_err());
        let c = gaussian_mutate(&p, 0.5, 1).unwrap();
        assert_eq!(p, before);
        assert_eq!(c.shapes(), p.shapes());
        assert_eq!(c, gaussian_mutate(&p, 0.5, 1).unwrap());
    }

    #[test]
    fn tiny_sigma_converges_to_parent() {
        let p = random_init(&shapes(), 0.1, DEFAULT_ALPHA, 3).unwrap();
        let c = gaussian_mutate(&p, 1e-12, 5).unwrap();
        let max = p.flatten().iter().zip(c.flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max < 1e-10);
    }

    #[test]
    fn mutation_displacement_matches_variance() {
        // 32x32 r=4 layer, sigma = 0.01: E[(child - parent)^2] = 1e-4 per entry.
        let shape = [LayerShape::new(32, 32, 4).unwrap()];
        let p = random_init(&shape, 0.05, DEFAULT_ALPHA, 11).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..1000 {
            let c = gaussian_mutate(&p, 0.01, seed).unwrap();
            for (a, b) in p.flatten().iter().zip(c.flatten()) {
                total += (a - b).powi(2);
                count += 1;
            }
        }
        let msd = total / count as f64;
        assert!((msd - 1e-4).abs() < 0.2e-4, "msd = {msd}");
    }

    #[test]
    fn crossover_endpoints_and_identity() {
        let p1 = random_init(&shapes(), 0.1, DEFAULT_ALPHA, 1).unwrap();
        let p2 = random_init(&shapes(), 0.1, DEFAULT_ALPHA, 2).unwrap();
        assert_eq!(rank_preserving_crossover(&p1, &p2, 1.0).unwrap().flatten(), p1.flatten());
        assert_eq!(rank_preserving_crossover(&p1, &p2, 0.0).unwrap().flatten(), p2.flatten());
        for gamma in [0.0, 0.3, 0.5, 0.77, 1.0] {
            let c = rank_preserving_crossover(&p1, &p1, gamma).unwrap();
            for (a, b) in c.flatten().iter().zip(p1.flatten()) {
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn crossover_matches_factor_formula() {
        let p1 = random_init(&shapes(), 0.1, DEFAULT_ALPHA, 1).unwrap();
        let p2 = random_init(&shapes(), 0.1, DEFAULT_ALPHA, 2).unwrap();
        let c = rank_preserving_crossover(&p1, &p2, 0.4).unwrap();
        for l in 0..2 {
            let b = p1.b(l).unwrap() * 0.4 + p2.b(l).unwrap() * 0.6;
            let a = p1.a(l).unwrap() * 0.4 + p2.a(l).unwrap() * 0.6;
            assert!((c.b(l).unwrap() - b).abs().max() < 1e-15);
            assert!((c.a(l).unwrap() - a).abs().max() < 1e-15);
        }
    }

    #[test]
    fn crossover_shape_mismatch() {
        let p1 = random_init(&shapes(), 0.1, DEFAULT_ALPHA, 1).unwrap();
        let p2 = random_init(&default_shapes(), 0.1, DEFAULT_ALPHA, 2).unwrap();
        assert!(matches!(
            rank_preserving_crossover(&p1, &p2, 0.5),
            Err(GenomeError::Incompatible(_))
        ));
    }

    #[test]
    fn gamma_range_mean_and_determinism() {
        let mut sum = 0.0;
        for seed in 0..10_000u64 {
            let g = sample_gamma(seed);
            assert!((GAMMA_LOW..=GAMMA_HIGH).contains(&g));
            sum += g;
        }
        assert!((sum / 10_000.0 - 0.5).abs() < 0.01);
        assert_eq!(sample_gamma(42), sample_gamma(42));
    }

    #[test]
    fn effective_delta_cases() {
        let zero_b = DMatrix::zeros(3, 2);
        let a = DMatrix::from_fn(2, 4, |i, j| (i + j) as f64);
        let g = LowRankGenome::from_layers(&[(zero_b, a)], 32.0, GenomeId(0)).unwrap();
        assert_eq!(g.effective_delta(0).unwrap(), DMatrix::zeros(3, 4));
        assert!(matches!(g.effective_delta(1), Err(GenomeError::LayerOutOfRange { .. })));

        let mut b = DMatrix::zeros(3, 1);
        b[(0, 0)] = 1.0;
        let mut a = DMatrix::zeros(1, 4);
        a[(0, 0)] = 1.0;
        let g = LowRankGenome::from_layers(&[(b, a)], 1.0, GenomeId(0)).unwrap();
        let delta = g.effective_delta(0).unwrap();
        let mut expected = DMatrix::zeros(3, 4);
        expected[(0, 0)] = 1.0;
        assert_eq!(delta, expected);
    }

    #[test]
    fn effective_delta_matches_loop_matmul() {
        let g = random_init(&shapes(), 1.0, DEFAULT_ALPHA, 4).unwrap();
        for l in 0..g.num_layers() {
            let s = g.shapes()[l];
            let b = g.b(l).unwrap();
            let a = g.a(l).unwrap();
            let delta = g.effective_delta(l).unwrap();
            for i in 0..s.d {
                for j in 0..s.k_cols {
                    let mut acc = 0.0;
                    for t in 0..s.r {
                        acc += b[(i, t)] * a[(t, j)];
                    }
                    acc *= DEFAULT_ALPHA / s.r as f64;
                    assert!((delta[(i, j)] - acc).abs() <= 1e-12 * acc.abs().max(1e-300) + 1e-300);
                }
            }
        }
    }

    #[test]
    fn snapshot_round_trip_both_encodings() {
        let g = random_init(&shapes(), 0.3, DEFAULT_ALPHA, 8).unwrap();
        assert_eq!(LowRankGenome::from_json(&g.to_json()).unwrap(), g);

        let mut snap = g.to_snapshot();
        for (l, layer) in snap.layers.iter_mut().enumerate() {
            layer.b = MatrixPayload::base64_from_matrix(&g.b(l).unwrap());
            layer.a = MatrixPayload::base64_from_matrix(&g.a(l).unwrap());
        }
        let text = serde_json::to_string(&snap).unwrap();
        assert!(text.contains(BASE64_ENCODING));
        assert_eq!(LowRankGenome::from_json(&text).unwrap(), g);
        assert!(LowRankGenome::from_json("{\"id\":1}").is_err());
    }

    proptest! {
        #[test]
        fn unflatten_inverts_flatten(seed in any::<u64>(), sigma in 0.001f64..10.0) {
            let g = random_init(&shapes(), sigma, DEFAULT_ALPHA, seed).unwrap();
            let back = g.unflatten(g.flatten().to_vec()).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn crossover_child_rank_bounded(s1 in any::<u64>(), s2 in any::<u64>(), gamma in 0.0f64..=1.0) {
            let shape = [LayerShape::new(10, 9, 3).unwrap()];
            let p1 = random_init(&shape, 1.0, DEFAULT_ALPHA, s1).unwrap();
            let p2 = random_init(&shape, 1.0, DEFAULT_ALPHA, s2).unwrap();
            let c = rank_preserving_crossover(&p1, &p2, gamma).unwrap();
            prop_assert_eq!(c.shapes(), p1.shapes());
            prop_assert!(numerical_rank(&c.effective_delta(0).unwrap(), RANK_REL_TOL) <= 3);
        }
    }
}
