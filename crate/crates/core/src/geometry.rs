//! Distances on finite point sets built only from the points themselves.
//!
//! Two constructions: exclusion chains of nearest neighbours (NNG) and the number of
//! empty triangles of a lattice triangulation touched by a segment (T-distance).
//! Planar predicates are exact in `i128`.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::Exec;
use crate::prob::RngSeed;

pub type Label = u32;

/// Largest lattice coordinate magnitude; keeps the in-circle determinant inside `i128`.
pub const MAX_LATTICE_COORD: i64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub label: Label,
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPointSet")]
pub struct PointSet {
    dim: u8,
    points: Vec<Point>,
}

#[derive(Deserialize)]
struct RawPointSet {
    dim: u8,
    points: Vec<Point>,
}

impl TryFrom<RawPointSet> for PointSet {
    type Error = Error;
    fn try_from(raw: RawPointSet) -> Result<Self> {
        Self::new(raw.dim, raw.points)
    }
}

impl PointSet {
    pub fn new(dim: u8, points: Vec<Point>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid("dim", "must be 1 or 2"));
        }
        let mut labels = BTreeSet::new();
        for p in &points {
            if !labels.insert(p.label) {
                return Err(invalid("points", format!("duplicate label {}", p.label)));
            }
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(invalid("points", format!("non-finite coordinate at label {}", p.label)));
            }
            if dim == 1 && p.y != 0.0 {
                return Err(invalid("points", format!("label {} has a y coordinate in a 1-D set", p.label)));
            }
        }
        Ok(Self { dim, points })
    }

    /// Points labelled `0..n` in the given order.
    pub fn line(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.iter().enumerate().map(|(k, &x)| Point { label: k as Label, x, y: 0.0 }).collect())
    }

    pub fn lattice(coords: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            2,
            coords.iter().enumerate().map(|(k, &(x, y))| Point { label: k as Label, x: x as f64, y: y as f64 }).collect(),
        )
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.points.iter().map(|p| p.label).collect()
    }

    pub fn index_of(&self, label: Label) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.label == label)
            .ok_or_else(|| invalid("label", format!("{label} is not in the set")))
    }

    fn dist2(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.points[i], self.points[j]);
        (a.x - b.x).powi(2) + (a.y - b.y).powi(2)
    }

    /// Integer coordinates, required for the planar T-distance.
    pub fn lattice_coords(&self) -> Result<Vec<(i64, i64)>> {
        self.points
            .iter()
            .map(|p| {
                let ok = |v: f64| v.fract() == 0.0 && v.abs() <= MAX_LATTICE_COORD as f64;
                if ok(p.x) && ok(p.y) {
                    Ok((p.x as i64, p.y as i64))
                } else {
                    Err(invalid("points", format!("label {} is not a lattice point within ±2^20", p.label)))
                }
            })
            .collect()
    }
}

fn closest_indices(set: &PointSet, from: usize, excluded: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for j in (0..set.len()).filter(|&j| j != from && !excluded(j)) {
        let d = set.dist2(from, j);
        if d < best {
            best = d;
            out.clear();
        }
        if d == best {
            out.push(j);
        }
    }
    out
}

/// Euclidean nearest neighbours of `a` outside `exclusions`; several labels mean a tie.
pub fn closest_point(set: &PointSet, a: Label, exclusions: &BTreeSet<Label>) -> Result<Vec<Label>> {
    let i = set.index_of(a)?;
    let found = closest_indices(set, i, |j| exclusions.contains(&set.points[j].label));
    if found.is_empty() {
        return Err(Error::NullEvent(format!("no candidate neighbour for {a}")));
    }
    let mut labels: Vec<Label> = found.into_iter().map(|j| set.points[j].label).collect();
    labels.sort_unstable();
    Ok(labels)
}

/// Shortest exclusion-chain length from point `a` to every point, minimised over ties.
///
/// A chain moves to the nearest point not yet on it. States are (current point,
/// visited set), so ties are branched exhaustively without revisiting a state.
fn chain_lengths_from(set: &PointSet, a: usize) -> Vec<Option<usize>> {
    assert!(set.len() <= 128, "visited masks are 128 bits");
    let n = set.len();
    let mut first = vec![None; n];
    first[a] = Some(0);
    let mut frontier: Vec<(usize, u128)> = vec![(a, 1u128 << a)];
    let mut seen: HashSet<(usize, u128)> = frontier.iter().copied().collect();
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        let mut next = Vec::new();
        for &(cur, mask) in &frontier {
            for j in closest_indices(set, cur, |j| mask & (1u128 << j) != 0) {
                first[j].get_or_insert(level);
                let state = (j, mask | (1u128 << j));
                if seen.insert(state) {
                    next.push(state);
                }
            }
        }
        frontier = next;
    }
    first
}

/// Length of the nearest-neighbour exclusion chain from `a` until it reaches `b`.
pub fn nng_delta(set: &PointSet, a: Label, b: Label) -> Result<usize> {
    if a == b {
        return Err(invalid("B", "chain endpoints must differ"));
    }
    let (i, j) = (set.index_of(a)?, set.index_of(b)?);
    let len = chain_lengths_from(set, i)[j];
    // Every chain visits all points before it stops, so `b` is always reached.
    Ok(len.expect("chain reaches every point"))
}

/// All chain lengths `δ(a, b)`; the diagonal is zero.
pub fn nng_delta_matrix(set: &PointSet, exec: Exec) -> Vec<Vec<usize>> {
    exec.map(set.len(), |i| chain_lengths_from(set, i).into_iter().map(|d| d.expect("chain reaches every point")).collect())
}

/// `(δ(a,b) + δ(b,a)) / 2`, zero on the diagonal.
pub fn nng_distance(set: &PointSet, a: Label, b: Label) -> Result<f64> {
    if a == b {
        set.index_of(a)?;
        return Ok(0.0);
    }
    Ok((nng_delta(set, a, b)? + nng_delta(set, b, a)?) as f64 / 2.0)
}

/// Number of set points strictly between `a` and `b` on the line.
pub fn t_distance_1d(set: &PointSet, a: Label, b: Label) -> Result<usize> {
    if set.dim() != 1 {
        return Err(invalid("dim", "the interval count needs a 1-D set"));
    }
    let (xa, xb) = (set.points[set.index_of(a)?].x, set.points[set.index_of(b)?].x);
    let (lo, hi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
    Ok(set.points.iter().filter(|p| p.x > lo && p.x < hi).count())
}

type P = (i64, i64);

fn orient(a: P, b: P, c: P) -> i128 {
    (b.0 - a.0) as i128 * (c.1 - a.1) as i128 - (b.1 - a.1) as i128 * (c.0 - a.0) as i128
}

/// Positive when `d` is strictly inside the circumcircle of the counter-clockwise triangle `abc`.
fn in_circle(a: P, b: P, c: P, d: P) -> i128 {
    let row = |p: P| {
        let (x, y) = ((p.0 - d.0) as i128, (p.1 - d.1) as i128);
        (x, y, x * x + y * y)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    ax * (by * cw - bw * cy) - ay * (bx * cw - bw * cx) + aw * (bx * cy - by * cx)
}

/// Closed-triangle membership for a counter-clockwise triangle.
fn in_closed_triangle(t: [P; 3], p: P) -> bool {
    (0..3).all(|k| orient(t[k], t[(k + 1) % 3], p) >= 0)
}

fn on_closed_segment(a: P, b: P, p: P) -> bool {
    orient(a, b, p) == 0
        && (a.0.min(b.0)..=a.0.max(b.0)).contains(&p.0)
        && (a.1.min(b.1)..=a.1.max(b.1)).contains(&p.1)
}

fn segments_meet(p1: P, p2: P, q1: P, q2: P) -> bool {
    let (d1, d2) = (orient(q1, q2, p1).signum(), orient(q1, q2, p2).signum());
    let (d3, d4) = (orient(p1, p2, q1).signum(), orient(p1, p2, q2).signum());
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    on_closed_segment(q1, q2, p1) || on_closed_segment(q1, q2, p2) || on_closed_segment(p1, p2, q1)
        || on_closed_segment(p1, p2, q2)
}

fn triangle_touches_segment(t: [P; 3], a: P, b: P) -> bool {
    in_closed_triangle(t, a) || in_closed_triangle(t, b) || (0..3).any(|k| segments_meet(a, b, t[k], t[(k + 1) % 3]))
}

/// Interiors of two counter-clockwise triangles are disjoint iff one of their edges separates them.
fn interiors_disjoint(s: [P; 3], t: [P; 3]) -> bool {
    let separates = |u: [P; 3], v: [P; 3]| (0..3).any(|k| v.iter().all(|&p| orient(u[k], u[(k + 1) % 3], p) <= 0));
    separates(s, t) || separates(t, s)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Bounding boxes larger than this use the boundary-gcd count instead of enumeration.
const PICK_ENUMERATION_CAP: i64 = 1 << 22;

/// Twice the area from Pick's count `2I + B - 2` of lattice points in a counter-clockwise triangle.
pub fn pick_doubled_area(t: [P; 3]) -> i64 {
    let (x0, x1) = (t.iter().map(|p| p.0).min().unwrap(), t.iter().map(|p| p.0).max().unwrap());
    let (y0, y1) = (t.iter().map(|p| p.1).min().unwrap(), t.iter().map(|p| p.1).max().unwrap());
    if (x1 - x0 + 1) * (y1 - y0 + 1) > PICK_ENUMERATION_CAP {
        // Boundary points from edge gcds, interior points from the shoelace area.
        let boundary: i64 = (0..3).map(|k| gcd(t[(k + 1) % 3].0 - t[k].0, t[(k + 1) % 3].1 - t[k].1)).sum();
        let interior = (orient(t[0], t[1], t[2]) as i64 - boundary + 2) / 2;
        return 2 * interior + boundary - 2;
    }
    let (mut interior, mut boundary) = (0i64, 0i64);
    for x in x0..=x1 {
        for y in y0..=y1 {
            let s: Vec<i128> = (0..3).map(|k| orient(t[k], t[(k + 1) % 3], (x, y))).collect();
            if s.iter().all(|&v| v > 0) {
                interior += 1;
            } else if s.iter().all(|&v| v >= 0) {
                boundary += 1;
            }
        }
    }
    2 * interior + boundary - 2
}

fn hull_doubled_area(pts: &[P]) -> i128 {
    let mut p = pts.to_vec();
    p.sort_unstable();
    p.dedup();
    if p.len() < 3 {
        return 0;
    }
    let mut hull: Vec<P> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &P>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    (0..hull.len()).map(|k| orient((0, 0), hull[k], hull[(k + 1) % hull.len()])).sum()
}

/// Tessellation of a lattice point set into point-empty triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    labels: Vec<Label>,
    coords: Vec<P>,
    /// Counter-clockwise vertex indices.
    triangles: Vec<[usize; 3]>,
    doubled_areas: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangulationDump {
    pub triangles: Vec<[Label; 3]>,
    pub areas: Vec<f64>,
}

impl Triangulation {
    /// Delaunay triangles, co-circular ambiguities resolved by smallest Pick area, then labels.
    pub fn build(set: &PointSet) -> Result<Self> {
        if set.dim() != 2 {
            return Err(invalid("dim", "the triangle count needs a 2-D set; use t_distance_1d on a line"));
        }
        let coords = set.lattice_coords()?;
        let n = coords.len();
        if coords.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::Degenerate("two labels share a lattice point".into()));
        }
        if n < 3 || (2..n).all(|k| orient(coords[0], coords[1], coords[k]) == 0) {
            return Err(Error::Degenerate("all points are collinear; use t_distance_1d".into()));
        }
        let labels = set.labels();
        let mut candidates: Vec<(i64, [Label; 3], [usize; 3])> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let o = orient(coords[i], coords[j], coords[k]);
                    if o == 0 {
                        continue;
                    }
                    let tri = if o > 0 { [i, j, k] } else { [i, k, j] };
                    let [a, b, c] = tri.map(|v| coords[v]);
                    if (0..n).any(|m| !tri.contains(&m) && in_circle(a, b, c, coords[m]) > 0) {
                        continue;
                    }
                    let mut key = [labels[i], labels[j], labels[k]];
                    key.sort_unstable();
                    candidates.push((pick_doubled_area([a, b, c]), key, tri));
                }
            }
        }
        candidates.sort_unstable_by_key(|x| (x.0, x.1));
        let mut triangles: Vec<[usize; 3]> = Vec::new();
        let mut doubled_areas = Vec::new();
        for (area, _, tri) in candidates {
            let t = tri.map(|v| coords[v]);
            if triangles.iter().all(|s| interiors_disjoint(s.map(|v| coords[v]), t)) {
                triangles.push(tri);
                doubled_areas.push(area);
            }
        }
        let covered: i128 = doubled_areas.iter().map(|&a| a as i128).sum();
        let hull = hull_doubled_area(&coords);
        if covered != hull {
            return Err(Error::Inconsistent(format!("triangles cover {covered}/2 of hull area {hull}/2")));
        }
        Ok(Self { labels, coords, triangles, doubled_areas })
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_labels(&self) -> Vec<[Label; 3]> {
        self.triangles.iter().map(|t| t.map(|v| self.labels[v])).collect()
    }

    pub fn dump(&self) -> TriangulationDump {
        TriangulationDump {
            triangles: self.triangle_labels(),
            areas: self.doubled_areas.iter().map(|&a| a as f64 / 2.0).collect(),
        }
    }

    /// Labels of set points in the closed triangle other than its vertices; empty for a valid tessellation.
    pub fn intruders(&self, t: usize) -> Vec<Label> {
        let tri = self.triangles[t];
        let corners = tri.map(|v| self.coords[v]);
        (0..self.coords.len())
            .filter(|m| !tri.contains(m) && in_closed_triangle(corners, self.coords[*m]))
            .map(|m| self.labels[m])
            .collect()
    }

    fn index_of(&self, label: Label) -> Result<usize> {
        self.labels.iter().position(|&l| l == label).ok_or_else(|| invalid("label", format!("{label} is not in the set")))
    }

    /// Triangles whose closed region meets the closed segment `ab`; zero when `a == b`.
    pub fn distance(&self, a: Label, b: Label) -> Result<usize> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        if i == j {
            return Ok(0);
        }
        let (pa, pb) = (self.coords[i], self.coords[j]);
        Ok(self.triangles.iter().filter(|t| triangle_touches_segment(t.map(|v| self.coords[v]), pa, pb)).count())
    }
}

pub fn t_distance_2d(set: &PointSet, a: Label, b: Label) -> Result<usize> {
    Triangulation::build(set)?.distance(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleViolation {
    pub a: Label,
    pub c: Label,
    pub b: Label,
    pub d_ab: f64,
    pub d_ac: f64,
    pub d_cb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiMetricReport {
    pub points: usize,
    pub symmetric: bool,
    pub asymmetric_pair: Option<(Label, Label)>,
    /// `d(x, y) = 0` exactly when `x = y`, and `d >= 0`.
    pub identity: bool,
    pub identity_failure: Option<(Label, Label)>,
    pub triangle_inequality: bool,
    pub triangle_violation: Option<TripleViolation>,
}

impl SemiMetricReport {
    pub fn is_semi_metric(&self) -> bool {
        self.symmetric && self.identity
    }
}

/// Checks the semi-metric axioms on every pair and the triangle inequality on every triple.
///
/// The reported triangle violation is the one with the largest gap, ties broken by labels.
pub fn semi_metric_check<F>(labels: &[Label], distance: F, exec: Exec) -> Result<SemiMetricReport>
where
    F: Fn(Label, Label) -> Result<f64> + Sync,
{
    let n = labels.len();
    let rows: Vec<Vec<f64>> =
        exec.map(n, |i| (0..n).map(|j| distance(labels[i], labels[j])).collect::<Result<Vec<_>>>())
            .into_iter()
            .collect::<Result<_>>()?;
    let mut report = SemiMetricReport {
        points: n,
        symmetric: true,
        asymmetric_pair: None,
        identity: true,
        identity_failure: None,
        triangle_inequality: true,
        triangle_violation: None,
    };
    for i in 0..n {
        for j in 0..n {
            let d = rows[i][j];
            if d != rows[j][i] && report.asymmetric_pair.is_none() {
                report.symmetric = false;
                report.asymmetric_pair = Some((labels[i], labels[j]));
            }
            if (d < 0.0 || (d == 0.0) != (i == j)) && report.identity_failure.is_none() {
                report.identity = false;
                report.identity_failure = Some((labels[i], labels[j]));
            }
        }
    }
    let mut worst = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in (0..n).filter(|&c| c != a && c != b && a != b) {
                let gap = rows[a][b] - rows[a][c] - rows[c][b];
                if gap > worst {
                    worst = gap;
                    report.triangle_inequality = false;
                    report.triangle_violation = Some(TripleViolation {
                        a: labels[a],
                        c: labels[c],
                        b: labels[b],
                        d_ab: rows[a][b],
                        d_ac: rows[a][c],
                        d_cb: rows[c][b],
                    });
                }
            }
        }
    }
    Ok(report)
}

/// A point set with `δ(a, b) != δ(b, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryWitness {
    pub points: PointSet,
    pub a: Label,
    pub b: Label,
    pub delta_ab: usize,
    pub delta_ba: usize,
}

/// A lattice point set whose T-distance breaks the triangle inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleWitness {
    pub points: PointSet,
    pub violation: TripleViolation,
    pub triangles: usize,
}

/// Subsets of the `w × w` lattice of size `k`, one per translation class (touching both axes).
pub fn canonical_lattice_sets(w: i64, k: usize) -> Vec<Vec<P>> {
    let cells: Vec<P> = (0..w).flat_map(|x| (0..w).map(move |y| (x, y))).collect();
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(k);
    fn rec(cells: &[P], start: usize, k: usize, pick: &mut Vec<P>, out: &mut Vec<Vec<P>>) {
        if pick.len() == k {
            if pick.iter().any(|p| p.0 == 0) && pick.iter().any(|p| p.1 == 0) {
                out.push(pick.clone());
            }
            return;
        }
        for s in start..cells.len() {
            pick.push(cells[s]);
            rec(cells, s + 1, k, pick, out);
            pick.pop();
        }
    }
    rec(&cells, 0, k, &mut pick, &mut out);
    out
}

/// First NNG asymmetry among canonical lattice sets of growing size, in enumeration order.
pub fn find_nng_asymmetry(window: i64, max_points: usize) -> Result<Option<AsymmetryWitness>> {
    for k in 3..=max_points {
        for coords in canonical_lattice_sets(window, k) {
            let set = PointSet::lattice(&coords)?;
            let deltas = nng_delta_matrix(&set, Exec::Sequential);
            for i in 0..k {
                for j in i + 1..k {
                    if deltas[i][j] != deltas[j][i] {
                        return Ok(Some(AsymmetryWitness {
                            a: i as Label,
                            b: j as Label,
                            delta_ab: deltas[i][j],
                            delta_ba: deltas[j][i],
                            points: set,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Seeded random search for a T-distance triangle-inequality violation.
///
/// Trials are independent streams of `seed`, so the first hit is the same under both
/// execution paths.
pub fn find_t_triangle_violation(
    window: i64,
    points: std::ops::RangeInclusive<usize>,
    trials: usize,
    seed: RngSeed,
    exec: Exec,
) -> Result<Option<TriangleWitness>> {
    const BATCH: usize = 64;
    let mut start = 0;
    while start < trials {
        let len = BATCH.min(trials - start);
        let hits = exec.map(len, |k| -> Result<Option<TriangleWitness>> {
            let mut rng = seed.fork((start + k) as u64).rng();
            let n = rng.random_range(points.clone());
            let mut chosen = BTreeMap::new();
            while chosen.len() < n {
                let p = (rng.random_range(0..window), rng.random_range(0..window));
                chosen.entry(p).or_insert(());
            }
            let coords: Vec<P> = chosen.into_keys().collect();
            let set = PointSet::lattice(&coords)?;
            let tri = match Triangulation::build(&set) {
                Ok(t) => t,
                Err(Error::Degenerate(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let report = semi_metric_check(&set.labels(), |a, b| Ok(tri.distance(a, b)? as f64), Exec::Sequential)?;
            Ok(report.triangle_violation.map(|violation| TriangleWitness { points: set, violation, triangles: tri.len() }))
        });
        for hit in hits {
            if let Some(w) = hit? {
                return Ok(Some(w));
            }
        }
        start += len;
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveNngReport {
    pub window: i64,
    pub max_points: usize,
    pub sets: usize,
    pub failures: usize,
    pub asymmetric_chains: usize,
}

/// Semi-metric axioms of the NNG distance on every canonical lattice set with `2..=max_points` points.
pub fn exhaustive_nng_check(window: i64, max_points: usize, exec: Exec) -> Result<ExhaustiveNngReport> {
    let mut report = ExhaustiveNngReport { window, max_points, sets: 0, failures: 0, asymmetric_chains: 0 };
    for k in 2..=max_points {
        let sets = canonical_lattice_sets(window, k);
        let outcomes = exec.map(sets.len(), |s| -> Result<(bool, bool)> {
            let set = PointSet::lattice(&sets[s])?;
            let deltas = nng_delta_matrix(&set, Exec::Sequential);
            let labels = set.labels();
            let d = |a: Label, b: Label| Ok((deltas[a as usize][b as usize] + deltas[b as usize][a as usize]) as f64 / 2.0);
            let rep = semi_metric_check(&labels, d, Exec::Sequential)?;
            let asym = (0..k).any(|i| (0..k).any(|j| deltas[i][j] != deltas[j][i]));
            Ok((rep.is_semi_metric(), asym))
        });
        for o in outcomes {
            let (ok, asym) = o?;
            report.sets += 1;
            report.failures += usize::from(!ok);
            report.asymmetric_chains += usize::from(asym);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_chain(set: &PointSet, a: usize, b: usize) -> usize {
        // Depth-first over every tie choice, keeping the shortest chain.
        fn go(set: &PointSet, path: &mut Vec<usize>, b: usize) -> usize {
            let cur = *path.last().unwrap();
            if cur == b {
                return path.len() - 1;
            }
            let pts = set.points();
            let cand: Vec<usize> = (0..pts.len()).filter(|j| !path.contains(j)).collect();
            let d = |j: usize| (pts[cur].x - pts[j].x).powi(2) + (pts[cur].y - pts[j].y).powi(2);
            let best = cand.iter().map(|&j| d(j)).fold(f64::INFINITY, f64::min);
            let mut out = usize::MAX;
            for j in cand.into_iter().filter(|&j| d(j) == best) {
                path.push(j);
                out = out.min(go(set, path, b));
                path.pop();
            }
            out
        }
        go(set, &mut vec![a], b)
    }

    #[test]
    fn closest_point_examples() {
        let two = PointSet::line(&[0.0, 5.0]).unwrap();
        assert_eq!(closest_point(&two, 0, &BTreeSet::new()).unwrap(), vec![1]);
        let line = PointSet::line(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(closest_point(&line, 0, &BTreeSet::new()).unwrap(), vec![1]);
        let tie = PointSet::line(&[0.0, -2.0, 2.0]).unwrap();
        assert_eq!(closest_point(&tie, 0, &BTreeSet::new()).unwrap(), vec![1, 2]);
        assert!(closest_point(&two, 0, &BTreeSet::from([1])).is_err());
        assert!(closest_point(&two, 7, &BTreeSet::new()).is_err());
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(3, vec![]).is_err());
        let dup = vec![Point { label: 1, x: 0.0, y: 0.0 }, Point { label: 1, x: 1.0, y: 0.0 }];
        assert!(PointSet::new(2, dup).is_err());
        assert!(PointSet::new(1, vec![Point { label: 0, x: 0.0, y: 1.0 }]).is_err());
        let json = r#"{"dim":2,"points":[{"label":0,"x":0,"y":0},{"label":0,"x":1,"y":0}]}"#;
        assert!(serde_json::from_str::<PointSet>(json).is_err());
        assert!(PointSet::new(2, vec![Point { label: 0, x: 0.5, y: 0.0 }]).unwrap().lattice_coords().is_err());
    }

    #[test]
    fn nng_examples() {
        let line = PointSet::line(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(nng_delta(&line, 0, 3).unwrap(), 3);
        assert_eq!(nng_distance(&line, 0, 3).unwrap(), 3.0);
        let two = PointSet::line(&[0.0, 1.0]).unwrap();
        assert_eq!(nng_delta(&two, 0, 1).unwrap(), 1);
        assert_eq!(nng_distance(&two, 1, 0).unwrap(), 1.0);
        assert_eq!(nng_distance(&two, 1, 1).unwrap(), 0.0);
        assert!(nng_delta(&two, 1, 1).is_err());
        // 1 → 0 → 3 → 2 against 2 → 3 → 1 → 0.
        let skew = PointSet::line(&[0.0, 1.0, 3.0, 2.5]).unwrap();
        assert_eq!(nng_delta(&skew, 1, 2).unwrap(), 3);
        assert_eq!(nng_delta(&skew, 2, 1).unwrap(), 2);
    }

    #[test]
    fn ties_take_the_shorter_branch() {
        // From 0 the tie {-1, 1} decides whether 5 is reached after one or three more steps.
        let set = PointSet::line(&[0.0, -1.0, 1.0, 2.5, -2.2]).unwrap();
        assert_eq!(nng_delta(&set, 0, 3).unwrap(), brute_chain(&set, 0, 3));
        assert_eq!(nng_delta(&set, 0, 3).unwrap(), 2);
    }

    #[test]
    fn one_dimensional_t_distance() {
        let line = PointSet::line(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t_distance_1d(&line, 0, 3).unwrap(), 2);
        assert_eq!(t_distance_1d(&line, 3, 0).unwrap(), 2);
        assert_eq!(t_distance_1d(&line, 1, 2).unwrap(), 0);
        assert_eq!(t_distance_1d(&line, 2, 2).unwrap(), 0);
        let rep = semi_metric_check(&line.labels(), |a, b| Ok(t_distance_1d(&line, a, b)? as f64), Exec::Sequential)
            .unwrap();
        assert!(rep.symmetric);
        assert!(!rep.identity);
        assert_eq!(rep.identity_failure, Some((0, 1)));
    }

    #[test]
    fn planar_t_distance_examples() {
        let tri = PointSet::lattice(&[(0, 0), (4, 0), (0, 3)]).unwrap();
        assert_eq!(t_distance_2d(&tri, 0, 1).unwrap(), 1);
        let quad = PointSet::lattice(&[(0, 0), (5, 1), (6, 6), (1, 4)]).unwrap();
        assert_eq!(Triangulation::build(&quad).unwrap().len(), 2);
        assert_eq!(t_distance_2d(&quad, 0, 2).unwrap(), 2);
        assert_eq!(t_distance_2d(&quad, 1, 3).unwrap(), 2);
        let square = PointSet::lattice(&[(0, 0), (1, 0), (1, 1), (0, 1)]).unwrap();
        assert_eq!(t_distance_2d(&square, 0, 2).unwrap(), 2);
        let collinear = PointSet::lattice(&[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert!(matches!(Triangulation::build(&collinear), Err(Error::Degenerate(_))));
        assert!(Triangulation::build(&PointSet::line(&[0.0, 1.0, 2.0]).unwrap()).is_err());
    }

    #[test]
    fn pick_matches_shoelace() {
        let mut rng = RngSeed::new(12, 0).rng();
        for _ in 0..200 {
            let t: [P; 3] = std::array::from_fn(|_| (rng.random_range(-9..10), rng.random_range(-9..10)));
            let o = orient(t[0], t[1], t[2]);
            if o == 0 {
                continue;
            }
            let ccw = if o > 0 { t } else { [t[0], t[2], t[1]] };
            assert_eq!(pick_doubled_area(ccw) as i128, o.abs());
        }
        let big = [(0, 0), (4000, 0), (0, 3000)];
        assert_eq!(pick_doubled_area(big), 12_000_000);
    }

    #[test]
    fn triangulations_are_empty_and_tile_the_hull() {
        for seed in 0..40 {
            let mut rng = RngSeed::new(seed, 1).rng();
            let n = rng.random_range(4..14);
            let mut pts = BTreeSet::new();
            while pts.len() < n {
                pts.insert((rng.random_range(0..7), rng.random_range(0..7)));
            }
            let coords: Vec<P> = pts.into_iter().collect();
            let set = PointSet::lattice(&coords).unwrap();
            let Ok(tri) = Triangulation::build(&set) else { continue };
            for t in 0..tri.len() {
                assert!(tri.intruders(t).is_empty());
            }
            // Euler count for a triangulated point set: 2n - h - 2 triangles, h points on the hull boundary.
            let h = coords
                .iter()
                .filter(|&&p| {
                    coords.iter().any(|&q| {
                        q != p && {
                            let side: Vec<i128> = coords.iter().map(|&r| orient(p, q, r).signum()).collect();
                            side.iter().all(|&x| x >= 0) || side.iter().all(|&x| x <= 0)
                        }
                    })
                })
                .count();
            assert_eq!(tri.len(), 2 * n - h - 2);
            assert_eq!(Triangulation::build(&set).unwrap(), tri);
        }
    }

    #[test]
    fn touching_is_closed() {
        let t = [(0, 0), (2, 0), (0, 2)];
        assert!(triangle_touches_segment(t, (1, 1), (3, 3)));
        assert!(triangle_touches_segment(t, (2, 0), (5, 0)));
        assert!(!triangle_touches_segment(t, (2, 1), (3, 3)));
        assert!(triangle_touches_segment(t, (-1, 1), (3, 1)));
    }

    #[test]
    fn nng_is_a_semi_metric_on_small_sets() {
        let rep = exhaustive_nng_check(4, 4, Exec::default()).unwrap();
        assert_eq!(rep.failures, 0);
        assert!(rep.sets > 0);
    }

    #[test]
    fn searches_find_witnesses() {
        let w = find_nng_asymmetry(5, 5).unwrap().expect("asymmetric chain");
        assert_ne!(w.delta_ab, w.delta_ba);
        assert_eq!(nng_delta(&w.points, w.a, w.b).unwrap(), w.delta_ab);
        let pts: Vec<usize> = (0..w.points.len()).collect();
        assert_eq!(brute_chain(&w.points, pts[w.a as usize], pts[w.b as usize]), w.delta_ab);
        let v = find_t_triangle_violation(8, 6..=14, 2000, RngSeed::new(5, 0), Exec::default()).unwrap().expect("violation");
        assert!(v.violation.d_ac + v.violation.d_cb < v.violation.d_ab);
        let seq = find_t_triangle_violation(8, 6..=14, 2000, RngSeed::new(5, 0), Exec::Sequential).unwrap();
        assert_eq!(seq, Some(v));
    }

    #[test]
    fn random_sets_agree_with_brute_force_chains() {
        for seed in 0..30 {
            let mut rng = RngSeed::new(seed, 2).rng();
            let xs: Vec<f64> = (0..6).map(|_| rng.random_range(0..6) as f64 + 0.5 * rng.random_range(0..2) as f64).collect();
            let ys: Vec<(i64, i64)> = (0..6).map(|_| (rng.random_range(0..4), rng.random_range(0..4))).collect();
            let mut dedup = ys.clone();
            dedup.sort_unstable();
            dedup.dedup();
            let planar = PointSet::lattice(&dedup).unwrap();
            for set in [PointSet::line(&xs).unwrap(), planar] {
                let m = nng_delta_matrix(&set, Exec::Sequential);
                for a in 0..set.len() {
                    for b in (0..set.len()).filter(|&b| b != a) {
                        assert_eq!(m[a][b], brute_chain(&set, a, b));
                    }
                }
            }
        }
    }
}
