//! Numerical solution of the label equations and selection of the
//! geometric candidate.
//!
//! The complex polynomial system is overdetermined but consistent, so it is
//! solved as a real nonlinear least-squares problem of twice the dimension
//! by damped Gauss-Newton steps with Levenberg-Marquardt damping, from a
//! regularity-based heuristic start and a budget of random restarts.
//!
//! The matrix-product residuals vanish not only on honest label solutions
//! but also on collapsed branches where edge or crossing labels hit zero
//! (a zero crossing label is an infinitely distant crossing geodesic), and
//! those branches soak up almost every unguarded start on larger diagrams.
//! Random restarts therefore descend a barrier-regularized functional
//! first: the residuals augmented with `mu / label` rows for every side
//! label on a region with three or more sides and every crossing label,
//! with `mu` stepped down geometrically. The endpoint is then polished and
//! certified against the plain polynomial system. Distinct converged points
//! are deduplicated, closed under entrywise conjugation, and sorted by how
//! far their region polygons deviate from regular ones.

use crate::diagram::{FaceColor, FaceId};
use crate::equations::{LabelAssignment, ResidualSystem, UnknownVector};
use crate::moebius::regular_shape;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no start converged within the iteration cap")]
    NoConvergence,
    #[error("no geometric candidate survived the filters")]
    NoCandidate,
    #[error(transparent)]
    Equations(#[from] crate::equations::EquationsError),
}

/// Tunable solver behavior; the defaults match the documented contract.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Number of starts (the first is the regularity heuristic).
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Converged when the residual infinity norm drops below this.
    pub residual_tol: f64,
    /// ... or when the step infinity norm drops below this.
    pub step_tol: f64,
    /// A converged point is accepted as a solution below this residual.
    pub accept_tol: f64,
    /// Solutions closer than this in the infinity norm are duplicates.
    pub dedup_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restarts: 64,
            seed: 1,
            max_iterations: 200,
            residual_tol: 1e-11,
            step_tol: 1e-13,
            accept_tol: 1e-9,
            dedup_tol: 1e-6,
        }
    }
}

/// Classification tags recomputable from the labels.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SolutionTags {
    /// No side label vanishes on a region with three or more sides.
    pub all_labels_nonzero: bool,
    /// No crossing label vanishes (all crossing geodesics at finite
    /// distance).
    pub crossing_labels_nonzero: bool,
    /// Every black-side edge label has imaginary part >= -1e-9.
    pub nonneg_imaginary: bool,
    /// All labels are real.
    pub real_solution: bool,
    /// Index of the entrywise-conjugate solution in the returned list.
    pub conjugate_partner: Option<usize>,
}

impl SolutionTags {
    /// Labels describe honest (non-collapsed) peripheral geometry.
    pub fn nondegenerate(&self) -> bool {
        self.all_labels_nonzero && self.crossing_labels_nonzero
    }
}

/// A converged label assignment with derived shape data.
#[derive(Debug, Clone)]
pub struct Solution {
    pub unknowns: UnknownVector,
    pub labels: LabelAssignment,
    pub max_residual: f64,
    pub tags: SolutionTags,
    /// Conjugate shape parameters per face (empty for bigons and for faces
    /// with a vanishing incident label).
    pub shapes: Vec<Vec<C64>>,
    /// Max over regions of the max corner distance to the regular shape.
    pub regularity_deviation: f64,
    /// Total squared distance of all corner shapes to the regular values.
    pub regularity_sq_sum: f64,
    /// Iterations used by the converging run (0 for conjugate closures).
    pub iterations: usize,
}

impl Solution {
    /// Shape parameters of one region (conjugated values).
    pub fn region_shapes(&self, face: FaceId) -> &[C64] {
        &self.shapes[face]
    }
}

/// Threshold for the zero-label degeneracy filters.
const NONZERO_TOL: f64 = 1e-6;
/// Tolerance on imaginary parts for the orientation-normalization filter.
const IM_TOL: f64 = 1e-9;
/// Barrier schedule for restarts.
const BARRIER_SCHEDULE: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];
const BARRIER_ITERATIONS: usize = 30;

fn real_view_residual(r: &[C64]) -> DVector<f64> {
    let mut v = DVector::zeros(2 * r.len());
    for (i, z) in r.iter().enumerate() {
        v[2 * i] = z.re;
        v[2 * i + 1] = z.im;
    }
    v
}

fn real_view_jacobian(j: &DMatrix<C64>) -> DMatrix<f64> {
    let (m, n) = j.shape();
    let mut out = DMatrix::zeros(2 * m, 2 * n);
    for i in 0..m {
        for k in 0..n {
            let z = j[(i, k)];
            out[(2 * i, 2 * k)] = z.re;
            out[(2 * i, 2 * k + 1)] = -z.im;
            out[(2 * i + 1, 2 * k)] = z.im;
            out[(2 * i + 1, 2 * k + 1)] = z.re;
        }
    }
    out
}

/// The residual system together with optional barrier rows `mu / label`.
struct DampedProblem<'a> {
    system: &'a ResidualSystem,
    /// (edge, sees-black-side) pairs guarded against collapse.
    guarded_sides: &'a [(usize, bool)],
    mu: f64,
}

impl DampedProblem<'_> {
    fn side(&self, x: &UnknownVector, e: usize, black: bool) -> C64 {
        if black {
            x.0[e]
        } else {
            x.0[e] - C64::from(self.system.diagram().kappa(e) as f64)
        }
    }

    fn eval(&self, x: &UnknownVector) -> Vec<C64> {
        let mut r = self.system.residual(x).expect("dimension checked");
        if self.mu == 0.0 {
            return r;
        }
        let ne = self.system.diagram().edge_count();
        for &(e, black) in self.guarded_sides {
            r.push(C64::from(self.mu) / self.side(x, e, black));
        }
        for w in 0..self.system.diagram().crossing_count() {
            r.push(C64::from(self.mu) / x.0[ne + w]);
        }
        r
    }

    fn jac(&self, x: &UnknownVector) -> DMatrix<C64> {
        let base = self.system.jacobian(x).expect("dimension checked");
        if self.mu == 0.0 {
            return base;
        }
        let ne = self.system.diagram().edge_count();
        let nx = self.system.diagram().crossing_count();
        let extra = self.guarded_sides.len() + nx;
        let (m, n) = base.shape();
        let mut jac = DMatrix::<C64>::zeros(m + extra, n);
        jac.view_mut((0, 0), (m, n)).copy_from(&base);
        for (k, &(e, black)) in self.guarded_sides.iter().enumerate() {
            let u = self.side(x, e, black);
            jac[(m + k, e)] = -C64::from(self.mu) / (u * u);
        }
        for w in 0..nx {
            let ww = x.0[ne + w];
            jac[(m + self.guarded_sides.len() + w, ne + w)] = -C64::from(self.mu) / (ww * ww);
        }
        jac
    }
}

/// Result of a single damped least-squares run.
#[derive(Debug, Clone)]
pub struct LmRun {
    pub point: UnknownVector,
    pub max_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn lm_core(problem: &DampedProblem, start: &UnknownVector, opts: &SolverOptions) -> LmRun {
    let n = problem.system.n_unknowns();
    let mut x = start.clone();
    let mut lambda = 1e-3;
    let mut r = real_view_residual(&problem.eval(&x));
    let mut cost = r.norm_squared();
    let mut iterations = 0;
    if !cost.is_finite() {
        return LmRun {
            point: x,
            max_residual: f64::INFINITY,
            iterations,
            converged: false,
        };
    }
    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let max_res = r.amax();
        if max_res < opts.residual_tol {
            return LmRun {
                point: x,
                max_residual: max_res,
                iterations,
                converged: true,
            };
        }
        let jac = real_view_jacobian(&problem.jac(&x));
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut stepped = false;
        for _ in 0..14 {
            let mut a = jtj.clone();
            for i in 0..2 * n {
                a[(i, i)] += lambda;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 3.0;
                continue;
            };
            let delta = chol.solve(&(-&jtr));
            let mut x_new = x.clone();
            for i in 0..n {
                x_new.0[i] += C64::new(delta[2 * i], delta[2 * i + 1]);
            }
            let r_new = real_view_residual(&problem.eval(&x_new));
            let cost_new = r_new.norm_squared();
            if cost_new.is_finite() && cost_new < cost {
                let step = delta.amax();
                x = x_new;
                r = r_new;
                cost = cost_new;
                lambda = (lambda / 3.0).max(1e-14);
                stepped = true;
                if step < opts.step_tol {
                    let max_res = r.amax();
                    return LmRun {
                        converged: max_res < opts.accept_tol,
                        point: x,
                        max_residual: max_res,
                        iterations,
                    };
                }
                break;
            }
            lambda *= 3.0;
        }
        if !stepped {
            break; // damping exhausted without progress
        }
    }
    let max_res = r.amax();
    LmRun {
        converged: max_res < opts.accept_tol,
        point: x,
        max_residual: max_res,
        iterations,
    }
}

/// Damped least squares on the polynomial system from a single start.
pub fn lm_solve(system: &ResidualSystem, start: &UnknownVector, opts: &SolverOptions) -> LmRun {
    let mut start = start.clone();
    // A vanishing start sits at a singular point of bigon-free systems;
    // nudge it deterministically.
    if start.0.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-8 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e3779b97f4a7c15);
        for z in start.0.iter_mut() {
            *z += C64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        }
    }
    let problem = DampedProblem {
        system,
        guarded_sides: &[],
        mu: 0.0,
    };
    lm_core(&problem, &start, opts)
}

/// How a start vector is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuessMode {
    /// Labels seeded so every corner shape approximates the regular polygon
    /// of its adjacent regions, with a small seeded perturbation. The
    /// parameter scales the imaginary parts and sweeps a one-parameter
    /// family of near-regular starts.
    RegularHeuristic(f64),
    /// Independent samples from a centered disk of radius 2.
    Random,
}

/// Imply every crossing label from the seeded edge labels by averaging the
/// regular-shape corner targets of the adjacent regions.
fn imply_crossing_labels(system: &ResidualSystem, edge_black: &mut Vec<C64>) {
    let d = system.diagram();
    let nx = d.crossing_count();
    let mut acc = vec![(C64::ZERO, 0usize); nx];
    for face in 0..d.face_count() {
        let region = d.region_corners(face).expect("face ids in range");
        let n = region.sides();
        if n < 3 {
            continue;
        }
        let target = C64::from(regular_shape(n).expect("n >= 3"));
        for corner in &region.corners {
            let side = |e: usize| -> C64 {
                if d.face_color(face) == FaceColor::Black {
                    edge_black[e]
                } else {
                    edge_black[e] - C64::from(d.kappa(e) as f64)
                }
            };
            let kappa = C64::from(corner.kappa() as f64);
            let w = kappa * target * side(corner.edge_before) * side(corner.edge_after);
            let (sum, count) = acc[corner.crossing];
            acc[corner.crossing] = (sum + w, count + 1);
        }
    }
    for (sum, count) in acc {
        edge_black.push(if count > 0 {
            sum / C64::from(count as f64)
        } else {
            C64::new(0.0, 0.5)
        });
    }
}

/// Produce a start vector for the solver.
pub fn initial_guess(
    system: &ResidualSystem,
    mode: GuessMode,
    rng: &mut ChaCha8Rng,
) -> UnknownVector {
    let d = system.diagram();
    let ne = d.edge_count();
    let nx = d.crossing_count();
    match mode {
        GuessMode::Random => {
            let mut v = Vec::with_capacity(ne + nx);
            for _ in 0..ne + nx {
                let r = 2.0 * rng.random_range(0.0f64..1.0).sqrt();
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                v.push(C64::from_polar(r, t));
            }
            UnknownVector(v)
        }
        GuessMode::RegularHeuristic(t) => {
            // Balance the regular shape targets of the two faces at each
            // edge: with r the ratio of the faces' regular half-secants,
            // the white-side label sits near (-r^2 + i r)/(1 + r^2).
            let lam = |k: usize| 0.5 / (std::f64::consts::PI / k as f64).cos();
            let mut v: Vec<C64> = (0..ne)
                .map(|e| {
                    let p = d.faces()[d.side_face(e, FaceColor::White)].sides();
                    let q = d.faces()[d.side_face(e, FaceColor::Black)].sides();
                    let kappa = C64::from(d.kappa(e) as f64);
                    let jitter =
                        C64::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02));
                    if p == 2 {
                        // white side of a bigon edge vanishes
                        kappa + jitter
                    } else if q == 2 {
                        C64::ZERO + jitter
                    } else {
                        let r = lam(q) / lam(p);
                        let white = C64::new(-r * r / (1.0 + r * r), t * r / (1.0 + r * r));
                        white + kappa + jitter
                    }
                })
                .collect();
            imply_crossing_labels(system, &mut v);
            UnknownVector(v)
        }
    }
}

fn guarded_sides(system: &ResidualSystem) -> Vec<(usize, bool)> {
    let d = system.diagram();
    let mut sides = Vec::new();
    for e in 0..d.edge_count() {
        for (color, black) in [(FaceColor::Black, true), (FaceColor::White, false)] {
            if d.faces()[d.side_face(e, color)].sides() >= 3 {
                sides.push((e, black));
            }
        }
    }
    sides
}

fn build_solution(
    system: &ResidualSystem,
    point: UnknownVector,
    max_residual: f64,
    iterations: usize,
) -> Solution {
    let d = system.diagram();
    let labels = system.expand(&point).expect("dimension checked");
    let mut shapes = Vec::with_capacity(d.face_count());
    let mut all_nonzero = true;
    let mut dev_max: f64 = 0.0;
    let mut dev_sq = 0.0;
    for face in 0..d.face_count() {
        let n = d.faces()[face].sides();
        if n < 3 {
            shapes.push(Vec::new());
            continue;
        }
        // Zero labels on a big region disqualify geometricity.
        let region = d.region_corners(face).expect("face ids in range");
        let color = d.face_color(face);
        for corner in &region.corners {
            if labels.side(corner.edge_before, color).norm() < NONZERO_TOL {
                all_nonzero = false;
            }
        }
        match system.region_shapes(&point, face) {
            Ok(zs) => {
                let reg = C64::from(regular_shape(n).expect("n >= 3"));
                for z in &zs {
                    let dev = (z - reg).norm();
                    dev_max = dev_max.max(dev);
                    dev_sq += dev * dev;
                }
                shapes.push(zs);
            }
            Err(_) => {
                all_nonzero = false;
                dev_max = f64::INFINITY;
                dev_sq = f64::INFINITY;
                shapes.push(Vec::new());
            }
        }
    }
    let crossing_labels_nonzero = labels.crossing.iter().all(|w| w.norm() > NONZERO_TOL);
    let nonneg_imaginary = labels.edge_black.iter().all(|z| z.im >= -IM_TOL);
    let real_solution = point.is_real(1e-8);
    Solution {
        labels,
        max_residual,
        tags: SolutionTags {
            all_labels_nonzero: all_nonzero,
            crossing_labels_nonzero,
            nonneg_imaginary,
            real_solution,
            conjugate_partner: None,
        },
        shapes,
        regularity_deviation: dev_max,
        regularity_sq_sum: dev_sq,
        iterations,
        unknowns: point,
    }
}

/// Find all distinct solutions reachable within the restart budget.
///
/// The returned list is deduplicated, closed under entrywise conjugation,
/// and sorted by regularity deviation with a lexicographic tie-break, so it
/// is a pure function of `(system, opts)`.
pub fn solve_all(
    system: &ResidualSystem,
    opts: &SolverOptions,
) -> Result<Vec<Solution>, SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sides = guarded_sides(system);
    let mut found: Vec<(UnknownVector, f64, usize)> = Vec::new();
    let mut push_unique = |pt: UnknownVector, res: f64, iters: usize| {
        if found
            .iter()
            .all(|(q, _, _)| pt.inf_norm_distance(q) > opts.dedup_tol)
        {
            found.push((pt, res, iters));
        }
    };
    let barrier_opts = SolverOptions {
        max_iterations: BARRIER_ITERATIONS,
        ..opts.clone()
    };
    for attempt in 0..opts.restarts.max(1) {
        let run = if attempt < 4 {
            // Near-regular starts usually sit in the geometric basin;
            // polish them directly, sweeping the imaginary scale.
            let t = match attempt {
                0 => 1.0,
                1 => 0.75,
                2 => 0.55,
                _ => rng.random_range(0.4..1.1),
            };
            let start = initial_guess(system, GuessMode::RegularHeuristic(t), &mut rng);
            lm_solve(system, &start, opts)
        } else {
            let mut start = initial_guess(system, GuessMode::Random, &mut rng);
            // every third restart searches the real slice, where the real
            // non-geometric solutions live
            if attempt % 3 == 2 {
                for z in start.0.iter_mut() {
                    *z = C64::from(1.75 * z.re);
                }
            }
            // anneal the barrier down, then certify on the plain system
            let mut x = start;
            for mu in BARRIER_SCHEDULE {
                let problem = DampedProblem {
                    system,
                    guarded_sides: &sides,
                    mu,
                };
                x = lm_core(&problem, &x, &barrier_opts).point;
            }
            lm_solve(system, &x, opts)
        };
        if run.converged && run.max_residual < opts.accept_tol {
            push_unique(run.point, run.max_residual, run.iterations);
        }
    }
    if found.is_empty() {
        return Err(SolverError::NoConvergence);
    }
    // Conjugation closure: the coefficients are real, so the conjugate of a
    // solution is a solution; add missing partners directly.
    let mut extra = Vec::new();
    for (pt, _, _) in &found {
        let conj = pt.conjugate();
        let missing = found
            .iter()
            .all(|(q, _, _)| conj.inf_norm_distance(q) > opts.dedup_tol)
            && extra
                .iter()
                .all(|(q, _, _): &(UnknownVector, f64, usize)| {
                    conj.inf_norm_distance(q) > opts.dedup_tol
                });
        if missing {
            let res = system.residual_max_norm(&conj)?;
            if res < opts.accept_tol {
                extra.push((conj, res, 0));
            }
        }
    }
    found.extend(extra);

    let mut solutions: Vec<Solution> = found
        .into_iter()
        .map(|(pt, res, iters)| build_solution(system, pt, res, iters))
        .collect();
    solutions.sort_by(|a, b| {
        a.regularity_sq_sum
            .total_cmp(&b.regularity_sq_sum)
            .then_with(|| {
                for (p, q) in a.unknowns.0.iter().zip(&b.unknowns.0) {
                    let ord = p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im));
                    if ord != std::cmp::Ordering::Equal {
                        return ord;
                    }
                }
                std::cmp::Ordering::Equal
            })
    });
    // Conjugate partner indices on the sorted list.
    for i in 0..solutions.len() {
        if solutions[i].tags.conjugate_partner.is_some() {
            continue;
        }
        let conj = solutions[i].unknowns.conjugate();
        if let Some(j) = solutions
            .iter()
            .position(|s| conj.inf_norm_distance(&s.unknowns) < opts.dedup_tol)
        {
            solutions[i].tags.conjugate_partner = Some(j);
            solutions[j].tags.conjugate_partner = Some(i);
        }
    }
    Ok(solutions)
}

/// Pick the geometric candidate: drop solutions with a vanishing label, and
/// for alternating diagrams prefer those whose edge labels have
/// non-negative imaginary part; among the survivors take the one whose
/// polygons are closest to regular. The choice is a documented heuristic;
/// callers should surface all solutions alongside it.
pub fn select_geometric(solutions: &[Solution], alternating: bool) -> Result<usize, SolverError> {
    if solutions.is_empty() {
        return Err(SolverError::NoCandidate);
    }
    let mut pool: Vec<usize> = (0..solutions.len())
        .filter(|&i| solutions[i].tags.nondegenerate())
        .collect();
    if pool.is_empty() {
        return Err(SolverError::NoCandidate);
    }
    // An entirely real solution has a collapsed peripheral structure and
    // cannot induce the complete structure; drop them whenever a genuinely
    // complex candidate exists.
    let complex_pool: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| !solutions[i].tags.real_solution)
        .collect();
    if !complex_pool.is_empty() {
        pool = complex_pool;
    }
    if alternating {
        let preferred: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&i| solutions[i].tags.nonneg_imaginary)
            .collect();
        if !preferred.is_empty() {
            pool = preferred;
        }
    }
    pool.into_iter()
        .min_by(|&a, &b| {
            solutions[a]
                .regularity_sq_sum
                .total_cmp(&solutions[b].regularity_sq_sum)
        })
        .ok_or(SolverError::NoCandidate)
}
