//! Planar link diagrams from PD codes: orientation, faces, checkerboard
//! coloring and the combinatorial signs consumed by the label equations.
//!
//! A PD code lists one tuple `X a b c d` per crossing: the four incident
//! edge indices in counterclockwise order starting at the incoming
//! under-strand edge. Edges are numbered `1..=2c`, consecutively along each
//! link component in the direction of its orientation.

use std::collections::VecDeque;
use thiserror::Error;

/// Index into the dense edge table (edge id minus one).
pub type EdgeIdx = usize;
/// Crossing index (order of appearance in the PD code).
pub type CrossingId = usize;
/// Face index assigned by the face trace.
pub type FaceId = usize;
/// Slot 0..4 around a crossing: 0 = incoming under, then counterclockwise.
pub type Slot = usize;

#[derive(Debug, Error, PartialEq)]
pub enum DiagramError {
    #[error("line {0}: malformed PD line {1:?}")]
    MalformedLine(usize, String),
    #[error("edge index {0} appears {1} times, expected exactly 2")]
    EdgeIndexNotTwice(usize, usize),
    #[error("edge indices must be exactly 1..=2c without gaps (2c = {expected}, saw {got})")]
    NonSequentialEdgeIndices { expected: usize, got: usize },
    #[error("diagram has no crossings")]
    Empty,
    #[error("cannot orient over-strands consistently (edge {0})")]
    InconsistentOrientation(usize),
    #[error("component edges are not a consecutive run (edge {0} followed by {1})")]
    NonSequentialComponent(usize, usize),
    #[error("rotation system is not planar: {faces} faces for {crossings} crossings")]
    NonPlanarRotationSystem { faces: usize, crossings: usize },
    #[error("diagram is disconnected")]
    DisconnectedDiagram,
    #[error("checkerboard coloring inconsistent")]
    ColoringInconsistent,
    #[error("no face with id {0}")]
    NoSuchFace(usize),
}

/// One PD tuple: edge indices counterclockwise from the incoming under-edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingTuple(pub [usize; 4]);

impl CrossingTuple {
    pub fn new(a: usize, b: usize, c: usize, d: usize) -> Self {
        CrossingTuple([a, b, c, d])
    }
}

/// Whether a strand passes under or over at a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrandPlace {
    Under,
    Over,
}

/// Checkerboard color. Black is the color whose side of every edge carries
/// the independent label; for alternating diagrams it is chosen so that the
/// black-side label minus the white-side label is +1 on every edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FaceColor {
    Black,
    White,
}

impl FaceColor {
    pub fn other(self) -> FaceColor {
        match self {
            FaceColor::Black => FaceColor::White,
            FaceColor::White => FaceColor::Black,
        }
    }
}

/// A directed traversal of an edge: forward means tail to head, i.e. along
/// the component orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dart {
    pub edge: EdgeIdx,
    pub forward: bool,
}

/// One corner of a face: the sector of a crossing between the arriving and
/// departing darts of the face walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceCorner {
    pub crossing: CrossingId,
    /// Sector s lies counterclockwise between slots s and s+1.
    pub sector: Slot,
}

/// A face of the diagram, traced with the face on the left of the walker.
#[derive(Debug, Clone)]
pub struct Face {
    pub darts: Vec<Dart>,
    pub corners: Vec<FaceCorner>,
}

impl Face {
    pub fn sides(&self) -> usize {
        self.darts.len()
    }

    pub fn is_bigon(&self) -> bool {
        self.sides() == 2
    }
}

/// One side of a diagram edge, identified by the face it borders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSide {
    pub edge: EdgeIdx,
    pub face: FaceId,
}

/// One corner of a region as consumed by the label equations: the crossing
/// between two consecutive boundary edges, with their direction signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCorner {
    pub crossing: CrossingId,
    /// Edge traversed before the crossing, with its direction sign
    /// (+1 when the walk agrees with the edge orientation).
    pub edge_before: EdgeIdx,
    pub eps_before: i8,
    pub edge_after: EdgeIdx,
    pub eps_after: i8,
}

impl RegionCorner {
    /// Sign entering the shape-parameter formula at this corner.
    pub fn kappa(&self) -> i8 {
        self.eps_before * self.eps_after
    }
}

/// Cyclic corner sequence of one face, in walk order.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub face: FaceId,
    pub color: FaceColor,
    pub corners: Vec<RegionCorner>,
}

impl Region {
    pub fn sides(&self) -> usize {
        self.corners.len()
    }

    /// Equality up to cyclic rotation of the corner sequence.
    pub fn cyclically_equal(&self, other: &Region) -> bool {
        if self.face != other.face || self.corners.len() != other.corners.len() {
            return false;
        }
        let n = self.corners.len();
        (0..n).any(|s| (0..n).all(|i| self.corners[(i + s) % n] == other.corners[i]))
    }
}

/// Validation strictness. The defaults accept exactly the diagrams the
/// solver is known to handle: connected, reduced, diagrammatically prime,
/// and either alternating or explicitly asserted taut by the caller.
#[derive(Debug, Clone, Copy)]
pub struct ValidatePolicy {
    pub require_reduced: bool,
    pub require_prime: bool,
    pub reject_torus_2n: bool,
    /// Accept non-alternating diagrams (the caller asserts tautness).
    pub assert_taut: bool,
}

impl Default for ValidatePolicy {
    fn default() -> Self {
        ValidatePolicy {
            require_reduced: true,
            require_prime: true,
            reject_torus_2n: true,
            assert_taut: false,
        }
    }
}

/// Report-style result of [`PlanarDiagram::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub connected: bool,
    pub alternating: bool,
    pub reduced: bool,
    pub diagrammatically_prime: bool,
    pub torus_2n_pattern: bool,
    pub bigons: Vec<FaceId>,
    pub accepted: bool,
    pub reasons: Vec<String>,
}

/// A parsed, oriented planar diagram with faces and checkerboard data.
#[derive(Debug, Clone)]
pub struct PlanarDiagram {
    tuples: Vec<CrossingTuple>,
    /// Tail occurrence of each edge: the crossing/slot it leaves.
    tail: Vec<(CrossingId, Slot)>,
    /// Head occurrence of each edge: the crossing/slot it enters.
    head: Vec<(CrossingId, Slot)>,
    component_of: Vec<usize>,
    components: Vec<Vec<EdgeIdx>>,
    faces: Vec<Face>,
    /// Face at each sector: `sector_face[crossing][sector]`.
    sector_face: Vec<[FaceId; 4]>,
    /// Face on the left of each oriented edge.
    left_face: Vec<FaceId>,
    right_face: Vec<FaceId>,
    color: Vec<FaceColor>,
    /// Black-side label minus white-side label, per edge.
    kappa: Vec<i8>,
    /// Crossing handedness: +1 when the over-strand runs d -> b.
    sign: Vec<i8>,
    alternating: bool,
}

impl PlanarDiagram {
    /// Parse the PD file format: `X a b c d` lines, `#` comments, blank
    /// lines ignored.
    pub fn parse_pd(text: &str) -> Result<PlanarDiagram, DiagramError> {
        let mut tuples = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or("");
            let nums: Vec<usize> = parts.filter_map(|p| p.parse().ok()).collect();
            if !tag.eq_ignore_ascii_case("x") || nums.len() != 4 || nums.iter().any(|&n| n == 0) {
                return Err(DiagramError::MalformedLine(lineno + 1, raw.to_string()));
            }
            tuples.push(CrossingTuple([nums[0], nums[1], nums[2], nums[3]]));
        }
        PlanarDiagram::from_tuples(tuples)
    }

    /// Build and fully validate the combinatorial structure from tuples.
    pub fn from_tuples(tuples: Vec<CrossingTuple>) -> Result<PlanarDiagram, DiagramError> {
        if tuples.is_empty() {
            return Err(DiagramError::Empty);
        }
        let c = tuples.len();
        let n_edges = 2 * c;

        // Edge indices must each appear exactly twice and cover 1..=2c.
        let mut count = vec![0usize; n_edges + 1];
        let mut max_seen = 0;
        for t in &tuples {
            for &e in &t.0 {
                max_seen = max_seen.max(e);
                if e <= n_edges {
                    count[e] += 1;
                }
            }
        }
        if max_seen != n_edges {
            return Err(DiagramError::NonSequentialEdgeIndices {
                expected: n_edges,
                got: max_seen,
            });
        }
        for e in 1..=n_edges {
            if count[e] != 2 {
                return Err(DiagramError::EdgeIndexNotTwice(e, count[e]));
            }
        }

        // Orient every edge. Slot 0 is an incoming under-edge and slot 2 an
        // outgoing one; over pairs (slots 1 and 3) are resolved by
        // propagation, falling back on the numbering convention that
        // components are consecutive runs.
        let mut head: Vec<Option<(CrossingId, Slot)>> = vec![None; n_edges];
        let mut tail: Vec<Option<(CrossingId, Slot)>> = vec![None; n_edges];
        for (x, t) in tuples.iter().enumerate() {
            let a = t.0[0] - 1;
            let c_out = t.0[2] - 1;
            if head[a].replace((x, 0)).is_some() {
                return Err(DiagramError::InconsistentOrientation(a + 1));
            }
            if tail[c_out].replace((x, 2)).is_some() {
                return Err(DiagramError::InconsistentOrientation(c_out + 1));
            }
        }
        let mut unresolved: VecDeque<CrossingId> = (0..c).collect();
        let mut stuck = 0usize;
        while let Some(x) = unresolved.pop_front() {
            let b = tuples[x].0[1] - 1;
            let d = tuples[x].0[3] - 1;
            let b_must_enter = head[b].is_none() && tail[b].is_some();
            let b_must_leave = tail[b].is_none() && head[b].is_some();
            let d_must_enter = head[d].is_none() && tail[d].is_some();
            let d_must_leave = tail[d].is_none() && head[d].is_some();
            // (enter, leave) along the over-strand
            let choice = if b_must_enter || d_must_leave {
                Some((b, d))
            } else if d_must_enter || b_must_leave {
                Some((d, b))
            } else if stuck <= unresolved.len() {
                None // wait for neighbors to resolve first
            } else if d == b + 1 {
                Some((b, d))
            } else if b == d + 1 {
                Some((d, b))
            } else {
                // wraparound within a consecutive component run
                Some((b.max(d), b.min(d)))
            };
            match choice {
                Some((e_in, e_out)) => {
                    let slot_of =
                        |edge: usize| -> Slot { if tuples[x].0[1] - 1 == edge { 1 } else { 3 } };
                    if head[e_in].replace((x, slot_of(e_in))).is_some() {
                        return Err(DiagramError::InconsistentOrientation(e_in + 1));
                    }
                    if tail[e_out].replace((x, slot_of(e_out))).is_some() {
                        return Err(DiagramError::InconsistentOrientation(e_out + 1));
                    }
                    stuck = 0;
                }
                None => {
                    stuck += 1;
                    unresolved.push_back(x);
                }
            }
        }
        let head: Vec<(CrossingId, Slot)> = head
            .into_iter()
            .enumerate()
            .map(|(e, h)| h.ok_or(DiagramError::InconsistentOrientation(e + 1)))
            .collect::<Result<_, _>>()?;
        let tail: Vec<(CrossingId, Slot)> = tail
            .into_iter()
            .enumerate()
            .map(|(e, t)| t.ok_or(DiagramError::InconsistentOrientation(e + 1)))
            .collect::<Result<_, _>>()?;

        // Successor of an edge along its strand.
        let succ = |e: EdgeIdx| -> EdgeIdx {
            let (x, s) = head[e];
            tuples[x].0[(s + 2) % 4] - 1
        };

        // Components, which must be consecutive runs of edge indices.
        let mut component_of = vec![usize::MAX; n_edges];
        let mut components = Vec::new();
        for start in 0..n_edges {
            if component_of[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut run = Vec::new();
            let mut e = start;
            loop {
                component_of[e] = id;
                run.push(e);
                let next = succ(e);
                if next == start {
                    break;
                }
                if component_of[next] != usize::MAX {
                    return Err(DiagramError::InconsistentOrientation(next + 1));
                }
                e = next;
            }
            components.push(run);
        }
        for run in &components {
            for w in run.windows(2) {
                if w[1] != w[0] + 1 {
                    return Err(DiagramError::NonSequentialComponent(w[0] + 1, w[1] + 1));
                }
            }
        }

        // Face trace keeping the face on the left of the walk: a dart
        // arriving at slot s departs through slot s-1 (one step clockwise).
        let departing = |x: CrossingId, s: Slot| -> Dart {
            let e = tuples[x].0[s] - 1;
            Dart {
                edge: e,
                forward: tail[e] == (x, s),
            }
        };
        let arrival = |d: Dart| -> (CrossingId, Slot) {
            if d.forward {
                head[d.edge]
            } else {
                tail[d.edge]
            }
        };
        let dart_key = |d: &Dart| d.edge * 2 + usize::from(d.forward);
        let mut dart_face = vec![usize::MAX; 2 * n_edges];
        let mut faces: Vec<Face> = Vec::new();
        for e0 in 0..n_edges {
            for fwd in [true, false] {
                let start = Dart {
                    edge: e0,
                    forward: fwd,
                };
                if dart_face[dart_key(&start)] != usize::MAX {
                    continue;
                }
                let face_id = faces.len();
                let mut darts = Vec::new();
                let mut corners = Vec::new();
                let mut d = start;
                loop {
                    dart_face[dart_key(&d)] = face_id;
                    darts.push(d);
                    let (x, s) = arrival(d);
                    let dep = (s + 3) % 4;
                    corners.push(FaceCorner {
                        crossing: x,
                        sector: dep,
                    });
                    d = departing(x, dep);
                    if d == start {
                        break;
                    }
                }
                faces.push(Face { darts, corners });
            }
        }
        if faces.len() != c + 2 {
            return Err(DiagramError::NonPlanarRotationSystem {
                faces: faces.len(),
                crossings: c,
            });
        }

        // Connectivity of the underlying 4-valent graph.
        {
            let mut seen = vec![false; c];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut reached = 1;
            while let Some(x) = queue.pop_front() {
                for &e in &tuples[x].0 {
                    let e = e - 1;
                    for &(y, _) in &[head[e], tail[e]] {
                        if !seen[y] {
                            seen[y] = true;
                            reached += 1;
                            queue.push_back(y);
                        }
                    }
                }
            }
            if reached != c {
                return Err(DiagramError::DisconnectedDiagram);
            }
        }

        let mut sector_face = vec![[usize::MAX; 4]; c];
        for (f, face) in faces.iter().enumerate() {
            for corner in &face.corners {
                sector_face[corner.crossing][corner.sector] = f;
            }
        }
        let left_face: Vec<FaceId> = (0..n_edges)
            .map(|e| {
                dart_face[dart_key(&Dart {
                    edge: e,
                    forward: true,
                })]
            })
            .collect();
        let right_face: Vec<FaceId> = (0..n_edges)
            .map(|e| {
                dart_face[dart_key(&Dart {
                    edge: e,
                    forward: false,
                })]
            })
            .collect();

        // Two-color the faces by BFS over edge adjacencies.
        let mut parity: Vec<Option<bool>> = vec![None; faces.len()];
        parity[0] = Some(false);
        let mut queue = VecDeque::from([0usize]);
        while let Some(f) = queue.pop_front() {
            let p = parity[f].unwrap();
            for e in 0..n_edges {
                let (l, r) = (left_face[e], right_face[e]);
                let g = if l == f {
                    r
                } else if r == f {
                    l
                } else {
                    continue;
                };
                match parity[g] {
                    None => {
                        parity[g] = Some(!p);
                        queue.push_back(g);
                    }
                    Some(q) if q == p => return Err(DiagramError::ColoringInconsistent),
                    _ => {}
                }
            }
        }
        if parity.iter().any(|p| p.is_none()) {
            return Err(DiagramError::DisconnectedDiagram);
        }

        let place = |(_, s): (CrossingId, Slot)| -> StrandPlace {
            if s % 2 == 0 {
                StrandPlace::Under
            } else {
                StrandPlace::Over
            }
        };
        let alternating = (0..n_edges).all(|e| place(tail[e]) != place(head[e]));

        // Label difference across an edge, on the side of the given parity.
        // An edge rising from its under end to its over end along its
        // orientation carries +1 on its right side, -1 on its left.
        let kappa_for = |e: EdgeIdx, black_parity: bool| -> i8 {
            let rises = match (place(tail[e]), place(head[e])) {
                (StrandPlace::Under, StrandPlace::Over) => 1i8,
                (StrandPlace::Over, StrandPlace::Under) => -1,
                _ => 0,
            };
            let black_on_left = parity[left_face[e]].unwrap() == black_parity;
            if black_on_left {
                -rises
            } else {
                rises
            }
        };
        // Pick black so that alternating diagrams get kappa = +1 everywhere.
        let black_parity = if alternating {
            let all_plus = |bp: bool| (0..n_edges).all(|e| kappa_for(e, bp) == 1);
            if all_plus(false) {
                false
            } else if all_plus(true) {
                true
            } else {
                return Err(DiagramError::ColoringInconsistent);
            }
        } else {
            // Convention: the left side of edge 1 is black.
            parity[left_face[0]].unwrap()
        };
        let color: Vec<FaceColor> = parity
            .iter()
            .map(|p| {
                if p.unwrap() == black_parity {
                    FaceColor::Black
                } else {
                    FaceColor::White
                }
            })
            .collect();
        let kappa: Vec<i8> = (0..n_edges).map(|e| kappa_for(e, black_parity)).collect();

        // Handedness: the over-strand leaving through slot 3 means it runs
        // b -> d, the negative crossing.
        let sign: Vec<i8> = tuples
            .iter()
            .enumerate()
            .map(|(x, t)| {
                let d_edge = t.0[3] - 1;
                if tail[d_edge] == (x, 3) {
                    -1
                } else {
                    1
                }
            })
            .collect();

        Ok(PlanarDiagram {
            tuples,
            tail,
            head,
            component_of,
            components,
            faces,
            sector_face,
            left_face,
            right_face,
            color,
            kappa,
            sign,
            alternating,
        })
    }

    pub fn crossing_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn edge_count(&self) -> usize {
        2 * self.tuples.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn tuples(&self) -> &[CrossingTuple] {
        &self.tuples
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn components(&self) -> &[Vec<EdgeIdx>] {
        &self.components
    }

    pub fn component_of(&self, edge: EdgeIdx) -> usize {
        self.component_of[edge]
    }

    /// Per-face checkerboard colors (computed during construction).
    pub fn checkerboard(&self) -> &[FaceColor] {
        &self.color
    }

    pub fn face_color(&self, face: FaceId) -> FaceColor {
        self.color[face]
    }

    pub fn is_alternating(&self) -> bool {
        self.alternating
    }

    /// Black-side minus white-side label difference for an edge.
    pub fn kappa(&self, edge: EdgeIdx) -> i8 {
        self.kappa[edge]
    }

    /// Handedness sign of a crossing.
    pub fn sign(&self, crossing: CrossingId) -> i8 {
        self.sign[crossing]
    }

    /// Crossing and slot from which the edge departs.
    pub fn edge_tail(&self, edge: EdgeIdx) -> (CrossingId, Slot) {
        self.tail[edge]
    }

    /// Crossing and slot into which the edge arrives.
    pub fn edge_head(&self, edge: EdgeIdx) -> (CrossingId, Slot) {
        self.head[edge]
    }

    pub fn left_face(&self, edge: EdgeIdx) -> FaceId {
        self.left_face[edge]
    }

    pub fn right_face(&self, edge: EdgeIdx) -> FaceId {
        self.right_face[edge]
    }

    /// The face bordering the given side of the edge.
    pub fn side_face(&self, edge: EdgeIdx, color: FaceColor) -> FaceId {
        let l = self.left_face[edge];
        if self.color[l] == color {
            l
        } else {
            self.right_face[edge]
        }
    }

    pub fn face_at_sector(&self, crossing: CrossingId, sector: Slot) -> FaceId {
        self.sector_face[crossing][sector]
    }

    /// Whether the strand through the given slot passes under or over.
    pub fn place_at(&self, slot: Slot) -> StrandPlace {
        if slot % 2 == 0 {
            StrandPlace::Under
        } else {
            StrandPlace::Over
        }
    }

    /// Strand place of an edge end.
    pub fn end_place(&self, occ: (CrossingId, Slot)) -> StrandPlace {
        self.place_at(occ.1)
    }

    pub fn bigons(&self) -> Vec<FaceId> {
        (0..self.faces.len())
            .filter(|&f| self.faces[f].is_bigon())
            .collect()
    }

    /// Cyclic corner sequence of a face with direction signs.
    pub fn region_corners(&self, face: FaceId) -> Result<Region, DiagramError> {
        let f = self.faces.get(face).ok_or(DiagramError::NoSuchFace(face))?;
        let n = f.darts.len();
        let corners = (0..n)
            .map(|i| {
                let before = f.darts[i];
                let after = f.darts[(i + 1) % n];
                RegionCorner {
                    crossing: f.corners[i].crossing,
                    edge_before: before.edge,
                    eps_before: if before.forward { 1 } else { -1 },
                    edge_after: after.edge,
                    eps_after: if after.forward { 1 } else { -1 },
                }
            })
            .collect();
        Ok(Region {
            face,
            color: self.color[face],
            corners,
        })
    }

    /// The standard (2,n)-torus pattern: a closed chain of bigons.
    fn torus_2n_pattern(&self) -> bool {
        let c = self.crossing_count();
        let bigons = self.bigons().len();
        (c >= 3 && bigons == c) || (c == 2 && bigons == 4)
    }

    /// Report-style validation; acceptance is decided by the policy.
    pub fn validate(&self, policy: ValidatePolicy) -> ValidationReport {
        let bigons = self.bigons();
        // Nugatory crossing: some face meets the same crossing twice.
        let reduced = self.faces.iter().all(|f| {
            let mut seen: Vec<CrossingId> = f.corners.iter().map(|c| c.crossing).collect();
            seen.sort_unstable();
            seen.windows(2).all(|w| w[0] != w[1])
        });
        let prime = self.is_diagrammatically_prime();
        let torus = self.torus_2n_pattern();
        let mut reasons = Vec::new();
        if !self.alternating && !policy.assert_taut {
            reasons.push("diagram is not alternating and tautness was not asserted".into());
        }
        if policy.require_reduced && !reduced {
            reasons.push("diagram has a nugatory crossing".into());
        }
        if policy.require_prime && !prime {
            reasons.push("diagram is a diagrammatic connected sum".into());
        }
        if policy.reject_torus_2n && torus {
            reasons.push("standard (2,n)-torus diagram is not hyperbolic".into());
        }
        ValidationReport {
            connected: true, // construction rejects disconnected diagrams
            alternating: self.alternating,
            reduced,
            diagrammatically_prime: prime,
            torus_2n_pattern: torus,
            bigons,
            accepted: reasons.is_empty(),
            reasons,
        }
    }

    /// No pair of faces shares two edges whose removal disconnects the
    /// underlying 4-valent graph.
    fn is_diagrammatically_prime(&self) -> bool {
        let c = self.crossing_count();
        if c <= 1 {
            return true;
        }
        let n_edges = self.edge_count();
        for e1 in 0..n_edges {
            for e2 in (e1 + 1)..n_edges {
                let mut f1 = [self.left_face[e1], self.right_face[e1]];
                let mut f2 = [self.left_face[e2], self.right_face[e2]];
                f1.sort_unstable();
                f2.sort_unstable();
                if f1 != f2 || f1[0] == f1[1] {
                    continue;
                }
                if !self.connected_without(&[e1, e2]) {
                    return false;
                }
            }
        }
        true
    }

    fn connected_without(&self, removed: &[EdgeIdx]) -> bool {
        let c = self.crossing_count();
        let mut seen = vec![false; c];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(x) = queue.pop_front() {
            for &e in &self.tuples[x].0 {
                let e = e - 1;
                if removed.contains(&e) {
                    continue;
                }
                for &(y, _) in &[self.head[e], self.tail[e]] {
                    if !seen[y] {
                        seen[y] = true;
                        reached += 1;
                        queue.push_back(y);
                    }
                }
            }
        }
        reached == c
    }

    /// Serialize back to the PD file format.
    pub fn to_pd_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tuples {
            out.push_str(&format!("X {} {} {} {}\n", t.0[0], t.0[1], t.0[2], t.0[3]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn fig8_tuples() -> Vec<CrossingTuple> {
        vec![
            CrossingTuple::new(4, 2, 5, 1),
            CrossingTuple::new(8, 6, 1, 5),
            CrossingTuple::new(6, 3, 7, 4),
            CrossingTuple::new(2, 7, 3, 8),
        ]
    }

    #[test]
    fn fig8_basic_structure() {
        let d = PlanarDiagram::from_tuples(fig8_tuples()).unwrap();
        assert_eq!(d.crossing_count(), 4);
        assert_eq!(d.edge_count(), 8);
        assert_eq!(d.face_count(), 6);
        assert_eq!(d.components().len(), 1);
        assert!(d.is_alternating());
        assert_eq!(d.bigons().len(), 2);
        let blacks = d
            .checkerboard()
            .iter()
            .filter(|&&c| c == FaceColor::Black)
            .count();
        assert_eq!(blacks, 3);
        for e in 0..8 {
            assert_eq!(d.kappa(e), 1, "edge {}", e + 1);
        }
        // figure-eight has writhe zero
        let w: i32 = (0..4).map(|x| d.sign(x) as i32).sum();
        assert_eq!(w, 0);
    }

    #[test]
    fn fig8_faces_are_two_bigons_and_four_trigons() {
        let d = PlanarDiagram::from_tuples(fig8_tuples()).unwrap();
        let mut sides: Vec<usize> = d.faces().iter().map(|f| f.sides()).collect();
        sides.sort_unstable();
        assert_eq!(sides, vec![2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn parse_pd_roundtrip_and_comments() {
        let text = "# figure-eight\nX 4 2 5 1\nX 8 6 1 5\n\nX 6 3 7 4 # third\nX 2 7 3 8\n";
        let d = PlanarDiagram::parse_pd(text).unwrap();
        assert_eq!(d.crossing_count(), 4);
        let d2 = PlanarDiagram::parse_pd(&d.to_pd_text()).unwrap();
        assert_eq!(d2.tuples(), d.tuples());
    }

    #[test]
    fn parse_pd_rejects_malformed_line() {
        let err = PlanarDiagram::parse_pd("X 1 2 3\n").unwrap_err();
        assert!(matches!(err, DiagramError::MalformedLine(1, _)));
    }

    #[test]
    fn edge_appearing_three_times_is_rejected() {
        let err = PlanarDiagram::from_tuples(vec![
            CrossingTuple::new(4, 2, 5, 1),
            CrossingTuple::new(8, 6, 1, 5),
            CrossingTuple::new(6, 3, 7, 4),
            CrossingTuple::new(2, 7, 3, 3),
        ])
        .unwrap_err();
        assert_eq!(err, DiagramError::EdgeIndexNotTwice(3, 3));
    }

    #[test]
    fn single_crossing_unknot() {
        // a Reidemeister-one kink
        let d = PlanarDiagram::from_tuples(vec![CrossingTuple::new(1, 2, 2, 1)]).unwrap();
        assert_eq!(d.face_count(), 3);
        let blacks = d
            .checkerboard()
            .iter()
            .filter(|&&c| c == FaceColor::Black)
            .count();
        assert!(blacks == 1 || blacks == 2);
        let report = d.validate(ValidatePolicy::default());
        assert!(!report.reduced);
        assert!(!report.accepted);
    }

    #[test]
    fn region_corner_signs_multiply() {
        let d = PlanarDiagram::from_tuples(fig8_tuples()).unwrap();
        for f in 0..d.face_count() {
            let r = d.region_corners(f).unwrap();
            assert_eq!(r.sides(), d.faces()[f].sides());
            for corner in &r.corners {
                assert_eq!(corner.kappa(), corner.eps_before * corner.eps_after);
                assert!(corner.kappa() == 1 || corner.kappa() == -1);
            }
        }
    }

    #[test]
    fn region_equality_is_cyclic() {
        let d = PlanarDiagram::from_tuples(fig8_tuples()).unwrap();
        let r = d.region_corners(2).unwrap();
        let mut rotated = r.clone();
        rotated.corners.rotate_left(1);
        assert!(r.cyclically_equal(&rotated));
        assert_ne!(r, rotated);
    }

    #[test]
    fn fig8_validates_as_hyperbolic_candidate() {
        let d = PlanarDiagram::from_tuples(fig8_tuples()).unwrap();
        let report = d.validate(ValidatePolicy::default());
        assert!(report.accepted, "{:?}", report.reasons);
        assert!(report.alternating && report.reduced && report.diagrammatically_prime);
        assert!(!report.torus_2n_pattern);
    }
}
