//! Built-in example diagrams: braid closures and frozen PD fixtures.

use crate::diagram::{CrossingTuple, DiagramError, PlanarDiagram};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("braid needs at least 2 strands, got {0}")]
    TooFewStrands(usize),
    #[error("braid word letter {0} out of range for {1} strands")]
    LetterOutOfRange(i32, usize),
    #[error("braid word must use every position 1..strands-1")]
    PositionUnused,
    #[error("unknown census name {0:?}")]
    UnknownCensusName(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

// Ports of a braid crossing in counterclockwise order.
const NE: usize = 0;
const NW: usize = 1;
const SW: usize = 2;
const SE: usize = 3;

/// PD tuples of the closure of a braid word on the given number of strands.
///
/// Strands run downwards; the letter `j > 0` crosses the strand at position
/// j over the strand at position j+1, `j < 0` crosses it under. Every
/// position must be used at least once so the closure is a connected
/// diagram.
pub fn braid_closure(strands: usize, word: &[i32]) -> Result<Vec<CrossingTuple>, CensusError> {
    if strands < 2 {
        return Err(CensusError::TooFewStrands(strands));
    }
    let mut used = vec![false; strands - 1];
    for &letter in word {
        let j = letter.unsigned_abs() as usize;
        if letter == 0 || j >= strands {
            return Err(CensusError::LetterOutOfRange(letter, strands));
        }
        used[j - 1] = true;
    }
    if word.is_empty() || used.iter().any(|u| !u) {
        return Err(CensusError::PositionUnused);
    }

    let c = word.len();
    // Matching on (crossing, port): link[crossing][port] = peer.
    let mut link: Vec<[Option<(usize, usize)>; 4]> = vec![[None; 4]; c];
    let mut connect = |a: (usize, usize), b: (usize, usize)| {
        link[a.0][a.1] = Some(b);
        link[b.0][b.1] = Some(a);
    };
    // Dangling lower port per strand position, and the first top port fed.
    let mut pending: Vec<Option<(usize, usize)>> = vec![None; strands];
    let mut first_top: Vec<Option<(usize, usize)>> = vec![None; strands];
    for (x, &letter) in word.iter().enumerate() {
        let j = letter.unsigned_abs() as usize - 1; // 0-based left position
        for (pos, top, bottom) in [(j, NW, SW), (j + 1, NE, SE)] {
            match pending[pos] {
                Some(prev) => connect(prev, (x, top)),
                None => first_top[pos] = Some((x, top)),
            }
            pending[pos] = Some((x, bottom));
        }
    }
    for pos in 0..strands {
        match (pending[pos], first_top[pos]) {
            (Some(p), Some(t)) => connect(p, t),
            _ => return Err(CensusError::PositionUnused),
        }
    }

    // Trace strands downward to number the edges 1..2c consecutively along
    // each component. Every edge runs from a bottom port to a top port.
    let mut edge_at: Vec<[usize; 4]> = vec![[usize::MAX; 4]; c];
    let mut next_edge = 1usize;
    for x0 in 0..c {
        for p0 in [SW, SE] {
            if edge_at[x0][p0] != usize::MAX {
                continue;
            }
            let (mut x, mut p) = (x0, p0);
            loop {
                let (y, q) = link[x][p].expect("complete matching");
                edge_at[x][p] = next_edge;
                edge_at[y][q] = next_edge;
                next_edge += 1;
                // continue through crossing y: NW -> SE, NE -> SW
                let out = match q {
                    NW => SE,
                    NE => SW,
                    _ => unreachable!("edges end on top ports"),
                };
                (x, p) = (y, out);
                if (x, p) == (x0, p0) {
                    break;
                }
            }
        }
    }

    let tuples = word
        .iter()
        .enumerate()
        .map(|(x, &letter)| {
            // positive: over-strand NW -> SE, so the under-strand comes in
            // at NE; negative: under-strand comes in at NW.
            let start = if letter > 0 { NE } else { NW };
            let e = |p: usize| edge_at[x][(start + p) % 4];
            CrossingTuple::new(e(0), e(1), e(2), e(3))
        })
        .collect();
    Ok(tuples)
}

/// Closure of `(sigma_1 sigma_2^-1)^n` on three strands: the family whose
/// regions are two n-gons and 2n triangles. n = 2 is the figure-eight,
/// n = 3 the Borromean rings, n = 4 the Turk's head knot.
pub fn l_n(n: usize) -> Result<PlanarDiagram, CensusError> {
    let word: Vec<i32> = (0..n).flat_map(|_| [1, -2]).collect();
    Ok(PlanarDiagram::from_tuples(braid_closure(3, &word)?)?)
}

/// Exact geometric label assignment of the closure of
/// `(sigma_1 sigma_2^-1)^n`, usable as a solver start.
///
/// The symmetric solution has a single trigon-side value `u2` solving
/// `(1 + 2 cos(pi/n)) (u2^2 + u2) + 1 = 0` and n-gon side values
/// `u1 = u2 / lambda_n`; edges are classified by the sizes of their two
/// faces. Crossing labels are implied from the regular corner shapes.
pub fn l_n_geometric_labels(
    n: usize,
    diagram: &PlanarDiagram,
) -> crate::equations::UnknownVector {
    use crate::diagram::FaceColor;
    use num_complex::Complex64 as C64;
    let a = 1.0 + 2.0 * (std::f64::consts::PI / n as f64).cos();
    let lambda = 0.5 / (std::f64::consts::PI / n as f64).cos();
    let u2 = C64::new(-0.5, 0.5 * (4.0 / a - 1.0).sqrt());
    let u1 = u2 / lambda;
    let ne = diagram.edge_count();
    let mut v: Vec<C64> = (0..ne)
        .map(|e| {
            let p = diagram.faces()[diagram.side_face(e, FaceColor::White)].sides();
            let q = diagram.faces()[diagram.side_face(e, FaceColor::Black)].sides();
            if p == n && q == 3 && n != 3 {
                u1 + C64::ONE
            } else if q == n && p == 3 && n != 3 {
                -u1.conj()
            } else if n == 3 {
                // every face is a trigon; the three classes coincide
                u2 + C64::ONE
            } else {
                u2 + C64::ONE
            }
        })
        .collect();
    // crossing labels from the trigon corners: shapes are 1 there
    let mut acc = vec![(C64::ZERO, 0usize); diagram.crossing_count()];
    for face in 0..diagram.face_count() {
        let region = diagram.region_corners(face).expect("face ids in range");
        let m = region.sides();
        if m < 3 {
            continue;
        }
        let target = C64::from(0.25 / (std::f64::consts::PI / m as f64).cos().powi(2));
        for corner in &region.corners {
            let side = |e: usize| -> C64 {
                if diagram.face_color(face) == FaceColor::Black {
                    v[e]
                } else {
                    v[e] - C64::from(diagram.kappa(e) as f64)
                }
            };
            let kappa = C64::from(corner.kappa() as f64);
            let w = kappa * target * side(corner.edge_before) * side(corner.edge_after);
            let (sum, count) = acc[corner.crossing];
            acc[corner.crossing] = (sum + w, count + 1);
        }
    }
    for (sum, count) in acc {
        v.push(sum / C64::from(count as f64));
    }
    crate::equations::UnknownVector(v)
}

/// Standard diagram of the (2, n)-torus link: closure of `sigma_1^n`.
pub fn torus_2n(n: usize) -> Result<PlanarDiagram, CensusError> {
    let word: Vec<i32> = vec![1; n];
    Ok(PlanarDiagram::from_tuples(braid_closure(2, &word)?)?)
}

/// The standard 4-crossing figure-eight diagram.
pub fn fig8() -> PlanarDiagram {
    PlanarDiagram::from_tuples(vec![
        CrossingTuple::new(4, 2, 5, 1),
        CrossingTuple::new(8, 6, 1, 5),
        CrossingTuple::new(6, 3, 7, 4),
        CrossingTuple::new(2, 7, 3, 8),
    ])
    .expect("figure-eight fixture is valid")
}

pub fn borromean() -> PlanarDiagram {
    l_n(3).expect("Borromean fixture is valid")
}

pub fn turks_head() -> PlanarDiagram {
    l_n(4).expect("Turk's head fixture is valid")
}
