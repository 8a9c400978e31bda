// SPDX-License-Identifier: MIT OR Apache-2.0

//! Geometry of Z² ⊂ ℂ: vertex colors, domains and dual contours.
//!
//! Lattice points with both coordinates even are *even-black*, both odd are
//! *odd-black*, mixed parity are *white*. Dual contours run through plaquette
//! centers (Z+½)²; a plaquette is stored by its lower-left lattice corner.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::C64;

/// The four unit steps 1, i, −1, −i.
pub const STEPS: [LatticePoint; 4] = [
    LatticePoint { x: 1, y: 0 },
    LatticePoint { x: 0, y: 1 },
    LatticePoint { x: -1, y: 0 },
    LatticePoint { x: 0, y: -1 },
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    White,
    EvenBlack,
    OddBlack,
}

impl Color {
    pub fn is_black(self) -> bool {
        self != Color::White
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

pub const fn pt(x: i64, y: i64) -> LatticePoint {
    LatticePoint { x, y }
}

pub fn classify(p: LatticePoint) -> Color {
    match (p.x.rem_euclid(2), p.y.rem_euclid(2)) {
        (0, 0) => Color::EvenBlack,
        (1, 1) => Color::OddBlack,
        _ => Color::White,
    }
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = pt(0, 0);

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn color(self) -> Color {
        classify(self)
    }

    pub fn is_white(self) -> bool {
        self.color() == Color::White
    }

    pub fn is_black(self) -> bool {
        !self.is_white()
    }

    /// Manhattan norm.
    pub fn norm(self) -> i64 {
        self.x.abs() + self.y.abs()
    }

    /// Multiplication by i.
    pub fn rot90(self) -> Self {
        pt(-self.y, self.x)
    }

    pub fn conj(self) -> Self {
        pt(self.x, -self.y)
    }

    /// Complex product of two Gaussian integers.
    pub fn mul(self, o: Self) -> Self {
        pt(self.x * o.x - self.y * o.y, self.x * o.y + self.y * o.x)
    }

    pub fn to_c64(self) -> C64 {
        Complex::new(self.x as f64, self.y as f64)
    }

    pub fn neighbors(self) -> [LatticePoint; 4] {
        STEPS.map(|d| self + d)
    }

    /// Parse "x,y" (whitespace and optional parentheses allowed).
    pub fn parse(s: &str) -> Result<Self, LatticeError> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut it = t.split(',');
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(LatticeError::Parse(format!("expected x,y, got {s:?}")));
        };
        let x = a.trim().parse().map_err(|_| LatticeError::Parse(format!("bad coordinate {a:?}")))?;
        let y = b.trim().parse().map_err(|_| LatticeError::Parse(format!("bad coordinate {b:?}")))?;
        Ok(pt(x, y))
    }
}

impl Add for LatticePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        pt(self.x + o.x, self.y + o.y)
    }
}

impl Sub for LatticePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        pt(self.x - o.x, self.y - o.y)
    }
}

impl Neg for LatticePoint {
    type Output = Self;
    fn neg(self) -> Self {
        pt(-self.x, -self.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("domain is empty")]
    Empty,
    #[error("domain is not connected")]
    NotConnected,
    #[error("domain is not simply connected (enclosed hole at {0:?})")]
    NotSimplyConnected(LatticePoint),
    #[error("corner at {0:?} is not even-black")]
    CornerNotEvenBlack(LatticePoint),
    #[error("domain boundary is not a Jordan curve: {0}")]
    Degenerate(String),
    #[error("invalid sink: {0}")]
    InvalidSink(String),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Finite set of lattice points with an optional sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    vertices: Vec<LatticePoint>,
    index: HashMap<LatticePoint, usize>,
    sink: Option<LatticePoint>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DomainFile {
    Vertices { vertices: Vec<[i64; 2]>, sink: Option<[i64; 2]> },
    Rect { rect: [i64; 4], sink: Option<[i64; 2]> },
}

impl Domain {
    /// Build a domain; points are deduplicated and sorted by (y, x).
    pub fn new<I: IntoIterator<Item = LatticePoint>>(
        points: I,
        sink: Option<LatticePoint>,
    ) -> Result<Self, LatticeError> {
        let set: BTreeSet<(i64, i64)> = points.into_iter().map(|p| (p.y, p.x)).collect();
        let vertices: Vec<LatticePoint> = set.into_iter().map(|(y, x)| pt(x, y)).collect();
        let index = vertices.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let d = Self { vertices, index, sink: None };
        match sink {
            Some(s) => d.with_sink(s),
            None => Ok(d),
        }
    }

    /// All points with x0 ≤ x ≤ x1, y0 ≤ y ≤ y1.
    pub fn rect(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        let pts = (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| pt(x, y)));
        Self::new(pts, None).expect("no sink")
    }

    /// Centered square [−h, h]², temperleyan when h is even.
    pub fn centered_square(h: i64) -> Self {
        Self::rect(-h, -h, h, h)
    }

    /// Centered temperleyan square with the sink at its most negative corner.
    pub fn temperleyan_square(h: i64) -> Self {
        let h = h + h.rem_euclid(2);
        Self::centered_square(h).with_sink(pt(-h, -h)).expect("corner sink is valid")
    }

    /// Attach a sink: an even-black vertex of the domain with a white
    /// neighbour outside it.
    pub fn with_sink(mut self, s: LatticePoint) -> Result<Self, LatticeError> {
        if !self.contains(s) {
            return Err(LatticeError::InvalidSink(format!("{s:?} is not in the domain")));
        }
        if s.color() != Color::EvenBlack {
            return Err(LatticeError::InvalidSink(format!("{s:?} is not even-black")));
        }
        if s.neighbors().iter().all(|n| self.contains(*n)) {
            return Err(LatticeError::InvalidSink(format!("{s:?} has no neighbour outside the domain")));
        }
        self.sink = Some(s);
        Ok(self)
    }

    pub fn without_sink(mut self) -> Self {
        self.sink = None;
        self
    }

    /// Parse a JSON domain file body or an inline `rect(x0,y0,x1,y1)`.
    pub fn parse(text: &str) -> Result<Self, LatticeError> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix("rect(") {
            let inner = rest.strip_suffix(')').ok_or_else(|| LatticeError::Parse(t.to_string()))?;
            let nums: Result<Vec<i64>, _> = inner.split(',').map(|s| s.trim().parse::<i64>()).collect();
            let nums = nums.map_err(|e| LatticeError::Parse(e.to_string()))?;
            if nums.len() != 4 {
                return Err(LatticeError::Parse("rect needs four integers".into()));
            }
            return Ok(Self::rect(nums[0], nums[1], nums[2], nums[3]));
        }
        let file: DomainFile = serde_json::from_str(t).map_err(|e| LatticeError::Parse(e.to_string()))?;
        let (d, sink) = match file {
            DomainFile::Vertices { vertices, sink } => {
                (Self::new(vertices.into_iter().map(|[x, y]| pt(x, y)), None)?, sink)
            }
            DomainFile::Rect { rect: [x0, y0, x1, y1], sink } => (Self::rect(x0, y0, x1, y1), sink),
        };
        match sink {
            Some([x, y]) => d.with_sink(pt(x, y)),
            None => Ok(d),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let verts: Vec<[i64; 2]> = self.vertices.iter().map(|p| [p.x, p.y]).collect();
        match self.sink {
            Some(s) => serde_json::json!({ "vertices": verts, "sink": [s.x, s.y] }),
            None => serde_json::json!({ "vertices": verts }),
        }
    }

    pub fn sink(&self) -> Option<LatticePoint> {
        self.sink
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.index.contains_key(&p)
    }

    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        self.index.get(&p).copied()
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    /// V^× = V ∖ {sink}, in storage order.
    pub fn active_vertices(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.vertices.iter().copied().filter(move |p| Some(*p) != self.sink)
    }

    pub fn count_color(&self, c: Color) -> usize {
        self.vertices.iter().filter(|p| p.color() == c).count()
    }

    pub fn bounding_box(&self) -> Option<(LatticePoint, LatticePoint)> {
        let first = *self.vertices.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.vertices {
            lo = pt(lo.x.min(p.x), lo.y.min(p.y));
            hi = pt(hi.x.max(p.x), hi.y.max(p.y));
        }
        Some((lo, hi))
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.first() else {
            return true;
        };
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for n in p.neighbors() {
                if self.contains(n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// First hole found by flooding the complement in a padded bounding box.
    fn find_hole(&self) -> Option<LatticePoint> {
        let (lo, hi) = self.bounding_box()?;
        let (lo, hi) = (lo - pt(1, 1), hi + pt(1, 1));
        let inside = |p: LatticePoint| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
        let mut seen = HashSet::from([lo]);
        let mut queue = VecDeque::from([lo]);
        while let Some(p) = queue.pop_front() {
            for n in p.neighbors() {
                if inside(n) && !self.contains(n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        (lo.y..=hi.y)
            .flat_map(|y| (lo.x..=hi.x).map(move |x| pt(x, y)))
            .find(|p| !self.contains(*p) && !seen.contains(p))
    }

    /// Boundary cycle of the union of closed unit faces, counterclockwise.
    pub fn boundary_cycle(&self) -> Result<Vec<LatticePoint>, LatticeError> {
        // Unit faces keyed by their lower-left corner.
        let faces: HashSet<LatticePoint> = self
            .vertices
            .iter()
            .copied()
            .filter(|p| {
                self.contains(*p + pt(1, 0)) && self.contains(*p + pt(0, 1)) && self.contains(*p + pt(1, 1))
            })
            .collect();
        if faces.is_empty() {
            return Err(LatticeError::Degenerate("no bounded face".into()));
        }
        for p in &self.vertices {
            let covered = [pt(0, 0), pt(-1, 0), pt(0, -1), pt(-1, -1)]
                .iter()
                .any(|o| faces.contains(&(*p + *o)));
            if !covered {
                return Err(LatticeError::Degenerate(format!("{p:?} lies on no face")));
            }
        }
        // Directed boundary edges with the region on the left.
        let mut next: HashMap<LatticePoint, LatticePoint> = HashMap::new();
        let mut push = |a: LatticePoint, b: LatticePoint| -> Result<(), LatticeError> {
            if next.insert(a, b).is_some() {
                return Err(LatticeError::Degenerate(format!("boundary pinches at {a:?}")));
            }
            Ok(())
        };
        let mut sorted: Vec<_> = faces.iter().copied().collect();
        sorted.sort_by_key(|p| (p.y, p.x));
        for f in &sorted {
            let (a, b, c, d) = (*f, *f + pt(1, 0), *f + pt(1, 1), *f + pt(0, 1));
            if !faces.contains(&(*f - pt(0, 1))) {
                push(a, b)?;
            }
            if !faces.contains(&(*f + pt(1, 0))) {
                push(b, c)?;
            }
            if !faces.contains(&(*f + pt(0, 1))) {
                push(c, d)?;
            }
            if !faces.contains(&(*f - pt(1, 0))) {
                push(d, a)?;
            }
        }
        let start = *next.keys().min_by_key(|p| (p.y, p.x)).expect("faces exist");
        let mut cycle = vec![start];
        let mut cur = next[&start];
        while cur != start {
            cycle.push(cur);
            cur = *next
                .get(&cur)
                .ok_or_else(|| LatticeError::Degenerate(format!("open boundary at {cur:?}")))?;
            if cycle.len() > next.len() {
                return Err(LatticeError::Degenerate("boundary does not close".into()));
            }
        }
        if cycle.len() != next.len() {
            return Err(LatticeError::Degenerate("boundary has several components".into()));
        }
        Ok(cycle)
    }

    /// Direction changes along the boundary cycle.
    pub fn corners(&self) -> Result<Vec<LatticePoint>, LatticeError> {
        let cyc = self.boundary_cycle()?;
        let n = cyc.len();
        Ok((0..n)
            .filter(|&i| {
                let prev = cyc[(i + n - 1) % n];
                let next = cyc[(i + 1) % n];
                cyc[i] - prev != next - cyc[i]
            })
            .map(|i| cyc[i])
            .collect())
    }

    /// Full temperleyan check with a distinct error per failure.
    pub fn check_temperleyan(&self) -> Result<(), LatticeError> {
        if self.vertices.is_empty() {
            return Err(LatticeError::Empty);
        }
        if !self.is_connected() {
            return Err(LatticeError::NotConnected);
        }
        if let Some(h) = self.find_hole() {
            return Err(LatticeError::NotSimplyConnected(h));
        }
        for c in self.corners()? {
            if c.color() != Color::EvenBlack {
                return Err(LatticeError::CornerNotEvenBlack(c));
            }
        }
        Ok(())
    }

    pub fn is_temperleyan(&self) -> bool {
        self.check_temperleyan().is_ok()
    }
}

/// A plaquette, stored by its lower-left corner; its center is (x+½, y+½).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Plaquette {
    pub x: i64,
    pub y: i64,
}

impl Plaquette {
    pub fn center(self) -> C64 {
        Complex::new(self.x as f64 + 0.5, self.y as f64 + 0.5)
    }
}

/// A dual edge together with the primal edge it crosses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualEdge {
    /// p_k − p_{k−1}, a unit step.
    pub step: LatticePoint,
    pub white: LatticePoint,
    pub black: LatticePoint,
}

/// Closed, non-self-intersecting sequence of plaquette centers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualContour {
    /// p₀, …, p_{n−1}; the closing point p_n = p₀ is implicit.
    points: Vec<Plaquette>,
}

impl DualContour {
    /// Validate a closed loop. A trailing copy of the first point is accepted.
    pub fn new(mut points: Vec<Plaquette>) -> Result<Self, LatticeError> {
        if points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 4 {
            return Err(LatticeError::InvalidContour("fewer than four steps".into()));
        }
        let n = points.len();
        let mut seen = HashSet::new();
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            if (a.x - b.x).abs() + (a.y - b.y).abs() != 1 {
                return Err(LatticeError::InvalidContour(format!("non-unit step at index {i}")));
            }
            if !seen.insert(a) {
                return Err(LatticeError::InvalidContour(format!("self-intersection at index {i}")));
            }
        }
        Ok(Self { points })
    }

    /// Positively oriented boundary of the union of unit pixels centred at
    /// the given points. Fails if that union is not a closed disk.
    pub fn around(points: &[LatticePoint]) -> Result<Self, LatticeError> {
        let set: HashSet<LatticePoint> = points.iter().copied().collect();
        if set.is_empty() {
            return Err(LatticeError::InvalidContour("empty point set".into()));
        }
        let mut next: HashMap<Plaquette, Plaquette> = HashMap::new();
        let q = |x: i64, y: i64| Plaquette { x, y };
        let mut push = |a: Plaquette, b: Plaquette| -> Result<(), LatticeError> {
            if next.insert(a, b).is_some() {
                return Err(LatticeError::InvalidContour(format!("pixel union pinches at {a:?}")));
            }
            Ok(())
        };
        let mut sorted: Vec<_> = set.iter().copied().collect();
        sorted.sort_by_key(|p| (p.y, p.x));
        for p in &sorted {
            let (x, y) = (p.x, p.y);
            if !set.contains(&pt(x, y - 1)) {
                push(q(x - 1, y - 1), q(x, y - 1))?;
            }
            if !set.contains(&pt(x + 1, y)) {
                push(q(x, y - 1), q(x, y))?;
            }
            if !set.contains(&pt(x, y + 1)) {
                push(q(x, y), q(x - 1, y))?;
            }
            if !set.contains(&pt(x - 1, y)) {
                push(q(x - 1, y), q(x - 1, y - 1))?;
            }
        }
        let start = *next.keys().min().expect("nonempty");
        let mut loop_pts = vec![start];
        let mut cur = next[&start];
        while cur != start {
            loop_pts.push(cur);
            cur = next[&cur];
            if loop_pts.len() > next.len() {
                break;
            }
        }
        if loop_pts.len() != next.len() {
            return Err(LatticeError::InvalidContour("pixel union is not a disk".into()));
        }
        Self::new(loop_pts)
    }

    /// Axis-aligned rectangle through x = ±(hw−½), y = ±(hh−½).
    pub fn rect(half_width: i64, half_height: i64) -> Self {
        assert!(half_width >= 1 && half_height >= 1);
        let pts: Vec<_> = (1 - half_height..half_height)
            .flat_map(|y| (1 - half_width..half_width).map(move |x| pt(x, y)))
            .collect();
        Self::around(&pts).expect("rectangles are disks")
    }

    /// Boundary of the Manhattan ball B♯(0; r) = {‖z‖ < r}.
    pub fn diamond(r: i64) -> Self {
        assert!(r >= 1);
        Self::around(&manhattan_ball(pt(0, 0), r)).expect("diamonds are disks")
    }

    pub fn points(&self) -> &[Plaquette] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut p = self.points.clone();
        p.reverse();
        Self { points: p }
    }

    pub fn translated(&self, by: LatticePoint) -> Self {
        Self {
            points: self.points.iter().map(|p| Plaquette { x: p.x + by.x, y: p.y + by.y }).collect(),
        }
    }

    /// Twice the signed area (shoelace over centers).
    pub fn signed_area2(&self) -> i64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                // Centers are offset by ½ in both coordinates; the offsets cancel in a closed sum.
                a.x * b.y - b.x * a.y
            })
            .sum()
    }

    /// +1 counterclockwise, −1 clockwise.
    pub fn orientation(&self) -> i32 {
        self.signed_area2().signum() as i32
    }

    /// Dual edges {p_{k−1}, p_k} in order, k = 1..n.
    pub fn edges(&self) -> Vec<DualEdge> {
        let n = self.points.len();
        (0..n)
            .map(|k| {
                let a = self.points[k];
                let b = self.points[(k + 1) % n];
                let s = pt(b.x - a.x, b.y - a.y);
                // Doubled coordinates: midpoint = 2a + 1 + s; crossed edge = mid ± i·s.
                let mx = 2 * a.x + 1 + s.x;
                let my = 2 * a.y + 1 + s.y;
                let u = pt((mx - s.y) / 2, (my + s.x) / 2);
                let v = pt((mx + s.y) / 2, (my - s.x) / 2);
                let (white, black) = if u.is_white() { (u, v) } else { (v, u) };
                DualEdge { step: s, white, black }
            })
            .collect()
    }

    /// Enclosed lattice points by winding number, sorted by (y, x).
    pub fn interior_points(&self) -> Vec<LatticePoint> {
        let n = self.points.len();
        let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for p in &self.points {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        // Vertical steps crossing height y, keyed by row: (plaquette x, ±1).
        let mut rows: HashMap<i64, Vec<(i64, i64)>> = HashMap::new();
        for k in 0..n {
            let (a, b) = (self.points[k], self.points[(k + 1) % n]);
            if a.x == b.x {
                let y = a.y.max(b.y);
                rows.entry(y).or_default().push((a.x, b.y - a.y));
            }
        }
        let mut out = Vec::new();
        for y in (y0 + 1)..=y1 {
            let Some(row) = rows.get(&y) else { continue };
            for x in (x0 + 1)..=x1 {
                // Plaquette column a has center a+½ > x iff a ≥ x.
                let w: i64 = row.iter().filter(|(a, _)| *a >= x).map(|(_, s)| *s).sum();
                if w != 0 {
                    out.push(pt(x, y));
                }
            }
        }
        out
    }

    /// Enclosed points split by color: (blacks, whites).
    pub fn interior(&self) -> (Vec<LatticePoint>, Vec<LatticePoint>) {
        self.interior_points().into_iter().partition(|p| p.is_black())
    }

    /// Largest Manhattan norm among enclosed points (−1 if none).
    pub fn interior_radius(&self) -> i64 {
        self.interior_points().iter().map(|p| p.norm()).max().unwrap_or(-1)
    }
}

/// B♯(c; r) = {z : ‖z − c‖ < r}, sorted by (y, x).
pub fn manhattan_ball(c: LatticePoint, r: i64) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    for dy in -(r - 1)..=(r - 1) {
        let m = r - 1 - dy.abs();
        for dx in -m..=m {
            out.push(c + pt(dx, dy));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors() {
        assert_eq!(classify(pt(0, 0)), Color::EvenBlack);
        assert_eq!(classify(pt(1, 1)), Color::OddBlack);
        assert_eq!(classify(pt(1, 0)), Color::White);
        assert_eq!(classify(pt(-3, -1)), Color::OddBlack);
    }

    #[test]
    fn temperleyan_examples() {
        assert!(Domain::rect(0, 0, 2, 2).is_temperleyan());
        // (1,0) is the first offending corner along the boundary walk.
        assert_eq!(
            Domain::rect(0, 0, 1, 1).check_temperleyan(),
            Err(LatticeError::CornerNotEvenBlack(pt(1, 0)))
        );
        assert!(matches!(
            Domain::new([pt(0, 0)], None).unwrap().check_temperleyan(),
            Err(LatticeError::Degenerate(_))
        ));
        let split = Domain::new([pt(0, 0), pt(2, 0)], None).unwrap();
        assert_eq!(split.check_temperleyan(), Err(LatticeError::NotConnected));
        let ring = Domain::new(Domain::rect(0, 0, 4, 4).vertices().iter().copied().filter(|p| *p != pt(2, 2)), None)
            .unwrap();
        assert_eq!(ring.check_temperleyan(), Err(LatticeError::NotSimplyConnected(pt(2, 2))));
    }

    #[test]
    fn l_shape_corners() {
        // L-shaped domain: [0,4]×[0,2] ∪ [0,2]×[2,4]; reflex corner at (2,2).
        let pts = Domain::rect(0, 0, 4, 2)
            .vertices()
            .iter()
            .chain(Domain::rect(0, 2, 2, 4).vertices())
            .copied()
            .collect::<Vec<_>>();
        let d = Domain::new(pts, None).unwrap();
        let mut c = d.corners().unwrap();
        c.sort();
        assert_eq!(c, vec![pt(0, 0), pt(0, 4), pt(2, 2), pt(2, 4), pt(4, 0), pt(4, 2)]);
        assert!(d.is_temperleyan());
    }

    #[test]
    fn sink_rules() {
        let d = Domain::rect(0, 0, 2, 2);
        assert!(d.clone().with_sink(pt(0, 0)).is_ok());
        assert!(d.clone().with_sink(pt(1, 1)).is_err());
        assert!(Domain::rect(0, 0, 4, 4).with_sink(pt(2, 2)).is_err());
    }

    #[test]
    fn parse_domains() {
        let a = Domain::parse("rect(0,0,2,2)").unwrap();
        let b = Domain::parse(r#"{"rect":[0,0,2,2],"sink":[0,0]}"#).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(b.sink(), Some(pt(0, 0)));
        let c = Domain::parse(r#"{"vertices":[[0,0],[1,0]]}"#).unwrap();
        assert_eq!(c.len(), 2);
        assert!(Domain::parse("{").is_err());
    }

    #[test]
    fn unit_plaquette_loop() {
        let q = |x, y| Plaquette { x, y };
        let g = DualContour::new(vec![q(-1, -1), q(0, -1), q(0, 0), q(-1, 0), q(-1, -1)]).unwrap();
        assert_eq!(g.orientation(), 1);
        assert_eq!(g.interior(), (vec![pt(0, 0)], vec![]));
        let r = g.reversed();
        assert_eq!(r.orientation(), -1);
        assert_eq!(r.interior(), g.interior());
        assert_eq!(g, DualContour::rect(1, 1));
    }

    #[test]
    fn rect_interiors() {
        let (b, w) = DualContour::rect(2, 2).interior();
        assert_eq!((b.len(), w.len()), (5, 4));
        assert_eq!(DualContour::rect(2, 2).len(), 12);
        assert_eq!(DualContour::rect(1, 2).interior_points(), vec![pt(0, -1), pt(0, 0), pt(0, 1)]);
        assert_eq!(DualContour::rect(1, 2).len(), 8);
    }

    #[test]
    fn diamond_interior_is_ball() {
        for r in 1..6 {
            let g = DualContour::diamond(r);
            assert_eq!(g.interior_points(), manhattan_ball(pt(0, 0), r));
            assert_eq!(g.orientation(), 1);
        }
    }

    #[test]
    fn dual_edges_straddle() {
        let g = DualContour::diamond(3);
        let inside: HashSet<_> = g.interior_points().into_iter().collect();
        for e in g.edges() {
            assert!(e.white.is_white() && e.black.is_black());
            assert_eq!((e.white - e.black).norm(), 1);
            assert_ne!(inside.contains(&e.white), inside.contains(&e.black));
            // Outward normal is −i·step.
            let (inn, out) = if inside.contains(&e.white) { (e.white, e.black) } else { (e.black, e.white) };
            assert_eq!(out - inn, e.step.mul(pt(0, -1)));
        }
    }
}
