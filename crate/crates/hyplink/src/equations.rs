//! The label equations of a diagram as a polynomial residual system.
//!
//! Unknowns: one complex label per edge (the black-side value; the white
//! side differs by the edge constant kappa) and one complex label per
//! crossing, ordered edges first. Each region contributes the condition
//! that its ordered matrix product
//!
//! ```text
//!   P(R) = [[0,-w_n],[1,0]] [[1,eps_n u_n],[0,1]] ... [[0,-w_1],[1,0]] [[1,eps_1 u_1],[0,1]]
//! ```
//!
//! is a scalar matrix: three complex residuals (both off-diagonal entries
//! and the diagonal difference). Bigons additionally pin their two side
//! labels to zero. The residual map is polynomial with real coefficients,
//! and its Jacobian is assembled analytically from prefix and suffix
//! products of each region chain.

use crate::diagram::{
    CrossingId, EdgeIdx, FaceColor, FaceId, PlanarDiagram, ValidatePolicy,
};
use crate::moebius::MoebiusMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquationsError {
    #[error("diagram rejected by validation: {0:?}")]
    UnvalidatedDiagram(Vec<String>),
    #[error("zero edge label at a corner of a region with at least 3 sides")]
    ZeroEdgeLabel,
    #[error("unknown vector has length {got}, system expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Numerical threshold below which an edge label counts as zero.
pub const ZERO_LABEL_TOL: f64 = 1e-12;

/// Complete set of labels: both sides of every edge plus all crossings.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelAssignment {
    /// Black-side label of each edge.
    pub edge_black: Vec<C64>,
    /// Crossing labels.
    pub crossing: Vec<C64>,
    /// Per-edge difference between black and white side.
    pub kappa: Vec<i8>,
}

impl LabelAssignment {
    pub fn side(&self, edge: EdgeIdx, color: FaceColor) -> C64 {
        match color {
            FaceColor::Black => self.edge_black[edge],
            FaceColor::White => self.edge_black[edge] - C64::from(self.kappa[edge] as f64),
        }
    }

    pub fn white(&self, edge: EdgeIdx) -> C64 {
        self.side(edge, FaceColor::White)
    }
}

/// Ordered list of independent complex unknowns: black-side edge labels
/// then crossing labels.
#[derive(Debug, Clone, PartialEq)]
pub struct UnknownVector(pub Vec<C64>);

impl UnknownVector {
    pub fn conjugate(&self) -> UnknownVector {
        UnknownVector(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn inf_norm_distance(&self, other: &UnknownVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.0.iter().all(|z| z.im.abs() <= tol)
    }
}

/// One u-then-w step of a region walk.
#[derive(Debug, Clone, Copy)]
struct ChainFactor {
    edge: EdgeIdx,
    eps: f64,
    black_side: bool,
    crossing: CrossingId,
}

#[derive(Debug, Clone)]
struct RegionChain {
    face: FaceId,
    factors: Vec<ChainFactor>,
}

/// The polynomial residual map of a diagram, with analytic Jacobian.
#[derive(Debug, Clone)]
pub struct ResidualSystem {
    diagram: PlanarDiagram,
    chains: Vec<RegionChain>,
    /// (edge, side color) pairs pinned to zero by bigon degeneration.
    bigon_zero: Vec<(EdgeIdx, FaceColor)>,
}

impl ResidualSystem {
    /// Assemble the system for a diagram accepted by `validate`.
    pub fn assemble(
        diagram: &PlanarDiagram,
        policy: ValidatePolicy,
    ) -> Result<ResidualSystem, EquationsError> {
        let report = diagram.validate(policy);
        if !report.accepted {
            return Err(EquationsError::UnvalidatedDiagram(report.reasons));
        }
        Ok(Self::assemble_unchecked(diagram))
    }

    /// Assemble without the validation gate (used for degenerate inputs
    /// such as tangle closures whose solution sets are not isolated).
    pub fn assemble_unchecked(diagram: &PlanarDiagram) -> ResidualSystem {
        let mut chains = Vec::new();
        let mut bigon_zero = Vec::new();
        for face in 0..diagram.face_count() {
            let region = diagram
                .region_corners(face)
                .expect("face ids are in range");
            let color = region.color;
            let factors = region
                .corners
                .iter()
                .map(|corner| ChainFactor {
                    edge: corner.edge_before,
                    eps: corner.eps_before as f64,
                    black_side: color == FaceColor::Black,
                    crossing: corner.crossing,
                })
                .collect::<Vec<_>>();
            chains.push(RegionChain { face, factors });
            if region.sides() == 2 {
                for corner in &region.corners {
                    bigon_zero.push((corner.edge_before, color));
                }
            }
        }
        ResidualSystem {
            diagram: diagram.clone(),
            chains,
            bigon_zero,
        }
    }

    pub fn diagram(&self) -> &PlanarDiagram {
        &self.diagram
    }

    /// Number of complex unknowns, 3c.
    pub fn n_unknowns(&self) -> usize {
        3 * self.diagram.crossing_count()
    }

    /// Number of complex residuals, 3(c+2) plus two per bigon.
    pub fn n_residuals(&self) -> usize {
        3 * self.diagram.face_count() + self.bigon_zero.len()
    }

    fn edge_count(&self) -> usize {
        self.diagram.edge_count()
    }

    fn check_len(&self, x: &[C64]) -> Result<(), EquationsError> {
        if x.len() != self.n_unknowns() {
            return Err(EquationsError::DimensionMismatch {
                expected: self.n_unknowns(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Side label of an edge seen from a face of the given color.
    fn side_value(&self, x: &[C64], edge: EdgeIdx, black_side: bool) -> C64 {
        if black_side {
            x[edge]
        } else {
            x[edge] - C64::from(self.diagram.kappa(edge) as f64)
        }
    }

    fn factor_matrix(&self, x: &[C64], f: &ChainFactor) -> MoebiusMatrix {
        let u = self.side_value(x, f.edge, f.black_side);
        let w = x[self.edge_count() + f.crossing];
        MoebiusMatrix::crossing(w) * MoebiusMatrix::translation(C64::from(f.eps) * u)
    }

    /// The full region product `P(R)` for one face.
    pub fn region_product(&self, x: &[C64], face: FaceId) -> MoebiusMatrix {
        let chain = &self.chains[face];
        let mut p = MoebiusMatrix::identity();
        for f in &chain.factors {
            p = self.factor_matrix(x, f) * p;
        }
        p
    }

    /// Region product starting the walk at a rotated corner (used by the
    /// basepoint-invariance checks).
    pub fn region_product_rotated(
        &self,
        x: &[C64],
        face: FaceId,
        rotation: usize,
    ) -> MoebiusMatrix {
        let chain = &self.chains[face];
        let m = chain.factors.len();
        let mut p = MoebiusMatrix::identity();
        for i in 0..m {
            let f = &chain.factors[(i + rotation) % m];
            p = self.factor_matrix(x, f) * p;
        }
        p
    }

    /// Evaluate all complex residuals.
    pub fn residual(&self, x: &UnknownVector) -> Result<Vec<C64>, EquationsError> {
        self.check_len(&x.0)?;
        let x = &x.0;
        let mut r = Vec::with_capacity(self.n_residuals());
        for chain in &self.chains {
            let p = self.region_product(x, chain.face);
            r.push(p.b);
            r.push(p.c);
            r.push(p.a - p.d);
        }
        for &(edge, color) in &self.bigon_zero {
            r.push(self.side_value(x, edge, color == FaceColor::Black));
        }
        Ok(r)
    }

    /// Largest residual magnitude.
    pub fn residual_max_norm(&self, x: &UnknownVector) -> Result<f64, EquationsError> {
        Ok(self
            .residual(x)?
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    /// Analytic complex Jacobian, residuals by unknowns.
    pub fn jacobian(&self, x: &UnknownVector) -> Result<DMatrix<C64>, EquationsError> {
        self.check_len(&x.0)?;
        let x = &x.0;
        let ne = self.edge_count();
        let mut jac = DMatrix::<C64>::zeros(self.n_residuals(), self.n_unknowns());
        let mut row = 0;
        for chain in &self.chains {
            let m = chain.factors.len();
            let factors: Vec<MoebiusMatrix> = chain
                .factors
                .iter()
                .map(|f| self.factor_matrix(x, f))
                .collect();
            // suffix[i] = F_i ... F_1 (suffix[0] = I)
            let mut suffix = Vec::with_capacity(m + 1);
            suffix.push(MoebiusMatrix::identity());
            for i in 0..m {
                suffix.push(factors[i] * suffix[i]);
            }
            // prefix[i] = F_m ... F_{i+1} (prefix[m] = I)
            let mut prefix = vec![MoebiusMatrix::identity(); m + 1];
            for i in (0..m).rev() {
                prefix[i] = prefix[i + 1] * factors[i];
            }
            for (i, f) in chain.factors.iter().enumerate() {
                // dF/du = [[0,0],[0,eps]], dF/dw = [[0,-1],[0,0]]
                let du = MoebiusMatrix::new(
                    C64::ZERO,
                    C64::ZERO,
                    C64::ZERO,
                    C64::from(f.eps),
                );
                let dw = MoebiusMatrix::new(C64::ZERO, -C64::ONE, C64::ZERO, C64::ZERO);
                let dp_du = prefix[i + 1] * du * suffix[i];
                let dp_dw = prefix[i + 1] * dw * suffix[i];
                let cols = [(f.edge, dp_du), (ne + f.crossing, dp_dw)];
                for (col, dp) in cols {
                    jac[(row, col)] += dp.b;
                    jac[(row + 1, col)] += dp.c;
                    jac[(row + 2, col)] += dp.a - dp.d;
                }
            }
            row += 3;
        }
        for &(edge, color) in &self.bigon_zero {
            let _ = color;
            jac[(row, edge)] = C64::ONE;
            row += 1;
        }
        Ok(jac)
    }

    /// Expand the reduced unknowns into a full label assignment.
    pub fn expand(&self, x: &UnknownVector) -> Result<LabelAssignment, EquationsError> {
        self.check_len(&x.0)?;
        let ne = self.edge_count();
        Ok(LabelAssignment {
            edge_black: x.0[..ne].to_vec(),
            crossing: x.0[ne..].to_vec(),
            kappa: (0..ne).map(|e| self.diagram.kappa(e)).collect(),
        })
    }

    /// Reduce a full assignment back to the unknown vector.
    pub fn reduce(&self, labels: &LabelAssignment) -> UnknownVector {
        let mut v = labels.edge_black.clone();
        v.extend_from_slice(&labels.crossing);
        UnknownVector(v)
    }

    /// Conjugate shape parameters of a region's corners in walk order.
    ///
    /// Fails on a zero incident edge label, which for regions with at least
    /// three sides signals a degenerate solution.
    pub fn region_shapes(
        &self,
        x: &UnknownVector,
        face: FaceId,
    ) -> Result<Vec<C64>, EquationsError> {
        self.check_len(&x.0)?;
        let chain = &self.chains[face];
        let m = chain.factors.len();
        let mut shapes = Vec::with_capacity(m);
        for i in 0..m {
            let before = &chain.factors[i];
            let after = &chain.factors[(i + 1) % m];
            let u1 = self.side_value(&x.0, before.edge, before.black_side);
            let u2 = self.side_value(&x.0, after.edge, after.black_side);
            let w = x.0[self.edge_count() + before.crossing];
            let kappa = before.eps * after.eps;
            shapes.push(shape_from_labels(w, u1, u2, kappa)?);
        }
        Ok(shapes)
    }

    /// Crossings in the order their shapes are reported by `region_shapes`.
    pub fn region_crossings(&self, face: FaceId) -> Vec<CrossingId> {
        self.chains[face]
            .factors
            .iter()
            .map(|f| f.crossing)
            .collect()
    }
}

/// Conjugate shape parameter at a corner: `kappa * w / (u1 * u2)`.
///
/// `kappa` is +1 when exactly one of the two incident edges points at the
/// crossing, -1 otherwise. Reporting layers conjugate the result back when
/// displaying a shape parameter proper.
pub fn shape_from_labels(w: C64, u1: C64, u2: C64, kappa: f64) -> Result<C64, EquationsError> {
    if u1.norm() < ZERO_LABEL_TOL || u2.norm() < ZERO_LABEL_TOL {
        return Err(EquationsError::ZeroEdgeLabel);
    }
    Ok(C64::from(kappa) * w / (u1 * u2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census;
    use crate::diagram::FaceColor;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The two label assignments obtained by giving each twist region's
    /// crossing pair one of the values `u` and `-(u+1)`; exactly one solves
    /// the system.
    fn fig8_candidate_vectors() -> (ResidualSystem, Vec<UnknownVector>) {
        let d = census::fig8();
        let sys = ResidualSystem::assemble(&d, ValidatePolicy::default()).unwrap();
        let u = c(-0.5, 0.75f64.sqrt());
        let ne = d.edge_count();
        // Edge labels: a bigon edge has label 0 on the bigon side; the
        // remaining edges carry white-side value u, black-side u + 1.
        let bigons = d.bigons();
        let mut edge_black = vec![C64::ZERO; ne];
        for e in 0..ne {
            let on_bigon = bigons
                .iter()
                .any(|&f| d.left_face(e) == f || d.right_face(e) == f);
            edge_black[e] = if on_bigon {
                let bigon_face = bigons
                    .iter()
                    .copied()
                    .find(|&f| d.left_face(e) == f || d.right_face(e) == f)
                    .unwrap();
                if d.face_color(bigon_face) == FaceColor::Black {
                    C64::ZERO
                } else {
                    C64::ONE
                }
            } else {
                u + C64::ONE
            };
        }
        // Crossing labels come in the two bigon pairs.
        let pair_of = |f: usize| -> Vec<usize> {
            let mut xs: Vec<usize> = d.faces()[f].corners.iter().map(|c| c.crossing).collect();
            xs.sort_unstable();
            xs
        };
        let (p1, p2) = (pair_of(bigons[0]), pair_of(bigons[1]));
        let mut variants = Vec::new();
        for (wa, wb) in [(u, -(u + C64::ONE)), (-(u + C64::ONE), u)] {
            let mut crossing = vec![C64::ZERO; d.crossing_count()];
            for &x in &p1 {
                crossing[x] = wa;
            }
            for &x in &p2 {
                crossing[x] = wb;
            }
            let mut v = edge_black.clone();
            v.extend(crossing);
            variants.push(UnknownVector(v));
        }
        (sys, variants)
    }

    #[test]
    fn fig8_counts() {
        let d = census::fig8();
        let sys = ResidualSystem::assemble(&d, ValidatePolicy::default()).unwrap();
        assert_eq!(sys.n_unknowns(), 12);
        // 3(c+2) region residuals plus two zero labels per bigon
        assert_eq!(sys.n_residuals(), 18 + 4);
    }

    #[test]
    fn fig8_known_solution_has_tiny_residual() {
        let (sys, variants) = fig8_candidate_vectors();
        let norms: Vec<f64> = variants
            .iter()
            .map(|v| sys.residual_max_norm(v).unwrap())
            .collect();
        let best = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            best < 1e-12,
            "neither crossing-label pairing solves the system: {norms:?}"
        );
        // conjugating the solving vector also solves (real coefficients)
        let solving = &variants[norms.iter().position(|&n| n == best).unwrap()];
        assert!(sys.residual_max_norm(&solving.conjugate()).unwrap() < 1e-12);
    }

    #[test]
    fn fig8_solution_shapes_are_one_on_trigons() {
        let (sys, variants) = fig8_candidate_vectors();
        let solving = variants
            .into_iter()
            .min_by(|a, b| {
                sys.residual_max_norm(a)
                    .unwrap()
                    .total_cmp(&sys.residual_max_norm(b).unwrap())
            })
            .unwrap();
        let d = sys.diagram().clone();
        for f in 0..d.face_count() {
            if d.faces()[f].sides() != 3 {
                continue;
            }
            for z in sys.region_shapes(&solving, f).unwrap() {
                assert!((z - C64::ONE).norm() < 1e-12, "trigon shape {z}");
            }
        }
    }

    #[test]
    fn bigon_product_reduces_to_crossing_label_swap() {
        // [[0,-w2],[1,0]] * [[0,-w1],[1,0]] = diag(-w2, -w1)
        let w1 = c(0.3, 0.4);
        let w2 = c(-1.2, 0.1);
        let p = MoebiusMatrix::crossing(w2) * MoebiusMatrix::crossing(w1);
        assert!((p.a - -w2).norm() < 1e-15);
        assert!((p.d - -w1).norm() < 1e-15);
        assert!(p.b.norm() < 1e-15 && p.c.norm() < 1e-15);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        use rand::prelude::*;
        let d = census::fig8();
        let sys = ResidualSystem::assemble(&d, ValidatePolicy::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let x = UnknownVector(
                (0..sys.n_unknowns())
                    .map(|_| c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
                    .collect(),
            );
            let jac = sys.jacobian(&x).unwrap();
            let h = 1e-6;
            let mut worst: f64 = 0.0;
            for j in 0..sys.n_unknowns() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp.0[j] += C64::from(h);
                xm.0[j] -= C64::from(h);
                let rp = sys.residual(&xp).unwrap();
                let rm = sys.residual(&xm).unwrap();
                for i in 0..sys.n_residuals() {
                    let fd = (rp[i] - rm[i]) / C64::from(2.0 * h);
                    let scale = jac[(i, j)].norm().max(1.0);
                    worst = worst.max((jac[(i, j)] - fd).norm() / scale);
                }
            }
            assert!(worst < 1e-6, "jacobian mismatch {worst}");
        }
    }

    #[test]
    fn residual_is_first_order_accurate() {
        use rand::prelude::*;
        let d = census::fig8();
        let sys = ResidualSystem::assemble(&d, ValidatePolicy::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = UnknownVector(
            (0..sys.n_unknowns())
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        let r0 = sys.residual(&x).unwrap();
        let jac = sys.jacobian(&x).unwrap();
        for delta in [1e-3, 1e-4] {
            let dx: Vec<C64> = (0..sys.n_unknowns())
                .map(|_| c(rng.random_range(-delta..delta), rng.random_range(-delta..delta)))
                .collect();
            let mut xp = x.clone();
            for (a, b) in xp.0.iter_mut().zip(&dx) {
                *a += b;
            }
            let rp = sys.residual(&xp).unwrap();
            for i in 0..sys.n_residuals() {
                let lin: C64 = (0..sys.n_unknowns()).map(|j| jac[(i, j)] * dx[j]).sum();
                let err = (rp[i] - r0[i] - lin).norm();
                assert!(err < 20.0 * delta * delta, "second-order term too big: {err}");
            }
        }
    }

    #[test]
    fn conjugating_unknowns_conjugates_residuals() {
        use rand::prelude::*;
        let d = census::borromean();
        let sys = ResidualSystem::assemble(&d, ValidatePolicy::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = UnknownVector(
            (0..sys.n_unknowns())
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        let r = sys.residual(&x).unwrap();
        let rc = sys.residual(&x.conjugate()).unwrap();
        for (a, b) in r.iter().zip(&rc) {
            assert!((a.conj() - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rotated_region_products_vanish_together() {
        let (sys, variants) = fig8_candidate_vectors();
        let solving = variants
            .into_iter()
            .min_by(|a, b| {
                sys.residual_max_norm(a)
                    .unwrap()
                    .total_cmp(&sys.residual_max_norm(b).unwrap())
            })
            .unwrap();
        for face in 0..sys.diagram().face_count() {
            let sides = sys.diagram().faces()[face].sides();
            for rot in 0..sides {
                let p = sys.region_product_rotated(&solving.0, face, rot);
                assert!(
                    p.scalar_deviation() < 1e-12,
                    "face {face} rotation {rot} deviation {}",
                    p.scalar_deviation()
                );
            }
        }
        // at a random point no rotation is scalar
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let x: Vec<C64> = (0..sys.n_unknowns())
            .map(|_| c(rng.random_range(0.5..1.5), rng.random_range(0.2..1.0)))
            .collect();
        for face in 0..sys.diagram().face_count() {
            let sides = sys.diagram().faces()[face].sides();
            for rot in 0..sides {
                let p = sys.region_product_rotated(&x, face, rot);
                assert!(p.scalar_deviation() > 1e-6);
            }
        }
    }

    #[test]
    fn shape_from_labels_basics() {
        // w = u^2 / 2 at a corner with equal labels gives the square shape
        let u = c(0.3, 0.9);
        let w = u * u * 0.5;
        let z = shape_from_labels(w, u, u, 1.0).unwrap();
        assert!((z - c(0.5, 0.0)).norm() < 1e-15);
        // flipping both edge directions leaves kappa, hence the value
        let z2 = shape_from_labels(w, u, u, (-1.0f64) * (-1.0)).unwrap();
        assert!((z - z2).norm() < 1e-15);
        assert!(matches!(
            shape_from_labels(w, C64::ZERO, u, 1.0),
            Err(EquationsError::ZeroEdgeLabel)
        ));
    }
}
