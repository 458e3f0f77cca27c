//! Lattice points, finite paths, simple loops, and loop families on Z^d.
//!
//! Everything here is an immutable value: operations return new paths, so
//! decompositions can share structure safely across threads.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// A point of Z^d with 1 <= d <= MAX_DIM. Unused coordinates stay zero so
/// equality and hashing can look at the whole array.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    c: [i32; MAX_DIM],
    d: u8,
}

impl Point {
    pub fn origin(d: usize) -> Point {
        assert!((1..=MAX_DIM).contains(&d));
        Point {
            c: [0; MAX_DIM],
            d: d as u8,
        }
    }

    pub fn new(coords: &[i32]) -> Result<Point> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::BadDimension(coords.len()));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point {
            c,
            d: coords.len() as u8,
        })
    }

    /// Unit vector along `axis` with the given sign.
    pub fn unit(d: usize, axis: usize, positive: bool) -> Point {
        assert!(axis < d);
        let mut p = Point::origin(d);
        p.c[axis] = if positive { 1 } else { -1 };
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.c[..self.d as usize]
    }

    #[inline]
    pub fn is_origin(&self) -> bool {
        self.c == [0; MAX_DIM]
    }

    #[inline]
    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.d, other.d);
        let mut c = self.c;
        for i in 0..self.d as usize {
            c[i] += other.c[i];
        }
        Point { c, d: self.d }
    }

    #[inline]
    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.d, other.d);
        let mut c = self.c;
        for i in 0..self.d as usize {
            c[i] -= other.c[i];
        }
        Point { c, d: self.d }
    }

    /// l-infinity norm.
    #[inline]
    pub fn linf(&self) -> i64 {
        self.coords().iter().map(|x| (*x as i64).abs()).max().unwrap_or(0)
    }

    /// l-1 norm.
    #[inline]
    pub fn l1(&self) -> i64 {
        self.coords().iter().map(|x| (*x as i64).abs()).sum()
    }

    #[inline]
    pub fn is_unit_step_from(&self, other: &Point) -> bool {
        let mut seen = 0i64;
        for i in 0..self.d as usize {
            let diff = (self.c[i] - other.c[i]).abs() as i64;
            if diff > 1 {
                return false;
            }
            seen += diff;
        }
        seen == 1
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// A finite path in Z^d: an ordered sequence of points. The length of a path
/// is its number of steps, one less than its number of points; a single point
/// is a valid path of length 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pts: Vec<Point>,
    d: u8,
    nn: bool,
}

impl Path {
    /// Validate a point sequence into a path. The nearest-neighbor flag is set
    /// iff every step is a unit step; `require_nn` turns a violation into an
    /// error instead.
    pub fn validate(points: Vec<Point>, require_nn: bool) -> Result<Path> {
        let first = *points.first().ok_or(Error::EmptyPath)?;
        let d = first.dim();
        let mut nn = true;
        for (i, p) in points.iter().enumerate() {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                    index: i,
                });
            }
            if i > 0 && !p.is_unit_step_from(&points[i - 1]) {
                if require_nn {
                    return Err(Error::NonUnitStep { index: i });
                }
                nn = false;
            }
        }
        Ok(Path {
            pts: points,
            d: d as u8,
            nn,
        })
    }

    pub fn from_coords(coords: &[&[i32]], require_nn: bool) -> Result<Path> {
        let pts = coords
            .iter()
            .map(|c| Point::new(c))
            .collect::<Result<Vec<_>>>()?;
        Path::validate(pts, require_nn)
    }

    pub fn single(p: Point) -> Path {
        Path {
            d: p.dim() as u8,
            pts: vec![p],
            nn: true,
        }
    }

    pub fn origin(d: usize) -> Path {
        Path::single(Point::origin(d))
    }

    /// Number of steps.
    #[inline]
    pub fn len(&self) -> usize {
        self.pts.len() - 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    #[inline]
    pub fn is_walk(&self) -> bool {
        self.nn
    }

    #[inline]
    pub fn point(&self, i: usize) -> &Point {
        &self.pts[i]
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.pts
    }

    #[inline]
    pub fn first(&self) -> &Point {
        &self.pts[0]
    }

    #[inline]
    pub fn last(&self) -> &Point {
        self.pts.last().unwrap()
    }

    pub fn is_rooted(&self) -> bool {
        self.first().is_origin()
    }

    pub fn is_rooted_loop(&self) -> bool {
        self.first().is_origin() && self.last().is_origin()
    }

    /// The sub-path over point indices `a..=b`, untranslated.
    pub fn window(&self, a: usize, b: usize) -> Path {
        assert!(a <= b && b < self.pts.len());
        Path {
            pts: self.pts[a..=b].to_vec(),
            d: self.d,
            nn: self.nn,
        }
    }

    /// The sub-path over `a..=b`, translated so it starts at the origin.
    pub fn window_rooted(&self, a: usize, b: usize) -> Path {
        let base = self.pts[a];
        let pts = self.pts[a..=b].iter().map(|p| p.sub(&base)).collect();
        Path {
            pts,
            d: self.d,
            nn: self.nn,
        }
    }

    pub fn translate(&self, x: &Point) -> Path {
        Path {
            pts: self.pts.iter().map(|p| p.add(x)).collect(),
            d: self.d,
            nn: self.nn,
        }
    }

    /// Direct concatenation: requires `self.last() == other.first()`.
    pub fn concat_direct(&self, other: &Path) -> Result<Path> {
        if self.last() != other.first() {
            return Err(Error::EndpointMismatch);
        }
        let mut pts = self.pts.clone();
        pts.extend_from_slice(&other.pts[1..]);
        Ok(Path {
            pts,
            d: self.d,
            nn: self.nn && other.nn,
        })
    }

    /// Translated concatenation: requires `other` to start at the origin.
    pub fn concat_translated(&self, other: &Path) -> Result<Path> {
        if !other.first().is_origin() {
            return Err(Error::NotRootedAtOrigin);
        }
        let base = *self.last();
        let mut pts = self.pts.clone();
        pts.extend(other.pts[1..].iter().map(|p| p.add(&base)));
        Ok(Path {
            pts,
            d: self.d,
            nn: self.nn && other.nn,
        })
    }

    /// Insert a rooted path (loop cluster) immediately after step `j`,
    /// generalizing loop insertion. The inserted path must start at the
    /// origin; `self` is unchanged as a value.
    pub fn insert_rooted(&self, j: usize, piece: &Path) -> Result<Path> {
        if j > self.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                max: self.len(),
            });
        }
        if !piece.first().is_origin() {
            return Err(Error::NotRootedAtOrigin);
        }
        let base = self.pts[j];
        let mut pts = Vec::with_capacity(self.pts.len() + piece.len());
        pts.extend_from_slice(&self.pts[..=j]);
        pts.extend(piece.pts[1..].iter().map(|p| p.add(&base)));
        pts.extend_from_slice(&self.pts[j + 1..]);
        Ok(Path {
            pts,
            d: self.d,
            nn: self.nn && piece.nn,
        })
    }

    /// Insert a loop immediately after step `j`.
    pub fn insert_loop(&self, j: usize, e: &SimpleLoop) -> Result<Path> {
        self.insert_rooted(j, e.path())
    }

    /// Number of indices j with `self[j] == x`.
    pub fn local_time(&self, x: &Point) -> usize {
        self.pts.iter().filter(|p| *p == x).count()
    }

    /// Full occupation map site -> count.
    pub fn local_time_map(&self) -> HashMap<Point, u32> {
        let mut m = HashMap::with_capacity(self.pts.len());
        for p in &self.pts {
            *m.entry(*p).or_insert(0) += 1;
        }
        m
    }

    /// Maximum local time over all sites.
    pub fn max_local_time(&self) -> u32 {
        self.local_time_map().values().copied().max().unwrap_or(0)
    }

    pub fn into_points(self) -> Vec<Point> {
        self.pts
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.pts.iter()).finish()
    }
}

/// A simple loop: a path from the origin back to the origin whose points are
/// pairwise distinct before the final return.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SimpleLoop {
    path: Path,
}

impl SimpleLoop {
    pub fn new(path: Path) -> Result<SimpleLoop> {
        Self::checked(path, usize::MAX)
    }

    fn checked(path: Path, family_index: usize) -> Result<SimpleLoop> {
        let fail = |reason: &str| Error::BadLoop {
            index: family_index,
            reason: reason.to_string(),
        };
        if path.len() < 1 {
            return Err(fail("length must be at least 1"));
        }
        if !path.first().is_origin() || !path.last().is_origin() {
            return Err(fail("must start and end at the origin"));
        }
        let m = path.len();
        for i in 0..m {
            for j in (i + 1)..m {
                if path.point(i) == path.point(j) {
                    return Err(fail(&format!(
                        "revisits point {:?} at indices {} and {} before its endpoint",
                        path.point(i),
                        i,
                        j
                    )));
                }
            }
        }
        Ok(SimpleLoop { path })
    }

    pub fn from_coords(coords: &[&[i32]]) -> Result<SimpleLoop> {
        SimpleLoop::new(Path::from_coords(coords, false)?)
    }

    #[inline]
    pub fn path(&self) -> &Path {
        &self.path
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.path.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn point(&self, i: usize) -> &Point {
        self.path.point(i)
    }

    pub fn diameter_linf(&self) -> i64 {
        let pts = self.path.points();
        let mut best = 0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                best = best.max(pts[i].sub(&pts[j]).linf());
            }
        }
        best
    }
}

/// A fixed, ordered family of simple loops together with its derived
/// constants. The enumeration order is part of the value and is preserved by
/// serialization.
#[derive(Clone, Debug)]
pub struct LoopFamily {
    d: usize,
    loops: Vec<SimpleLoop>,
    lambdas: Vec<usize>,
    /// 1 + max l-infinity diameter over the loops.
    l_e: i64,
    /// Max l-infinity norm of any loop point.
    d_e: i64,
    walk_compatible: bool,
    /// Last increment of each loop, used to reject suffix matches cheaply.
    last_steps: Vec<Point>,
    max_len: usize,
}

impl LoopFamily {
    /// Validate a family. With `strict` set, every loop must have length at
    /// least 2 (as the tree and elementary-sequence codecs require).
    pub fn new(loops: Vec<SimpleLoop>, strict: bool) -> Result<LoopFamily> {
        if loops.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let d = loops[0].path().dim();
        for (i, e) in loops.iter().enumerate() {
            if e.path().dim() != d {
                return Err(Error::BadLoop {
                    index: i,
                    reason: format!("dimension {} differs from family dimension {}", e.path().dim(), d),
                });
            }
            // Re-run the simplicity check so family errors carry the loop index.
            SimpleLoop::checked(e.path().clone(), i)?;
            if strict && e.len() < 2 {
                return Err(Error::BadLoop {
                    index: i,
                    reason: "length must be at least 2 in strict mode".into(),
                });
            }
        }
        let lambdas = loops.iter().map(|e| e.len() - 1).collect();
        let l_e = 1 + loops.iter().map(|e| e.diameter_linf()).max().unwrap();
        let d_e = loops
            .iter()
            .flat_map(|e| e.path().points().iter().map(|p| p.linf()))
            .max()
            .unwrap();
        let walk_compatible = loops.iter().all(|e| e.path().is_walk());
        let last_steps = loops
            .iter()
            .map(|e| e.point(e.len()).sub(e.point(e.len() - 1)))
            .collect();
        let max_len = loops.iter().map(|e| e.len()).max().unwrap();
        Ok(LoopFamily {
            d,
            loops,
            lambdas,
            l_e,
            d_e,
            walk_compatible,
            last_steps,
            max_len,
        })
    }

    /// The one-loop family {(0, +u_axis, 0)}.
    pub fn back_and_forth(d: usize, axis: usize) -> LoopFamily {
        let u = Point::unit(d, axis, true);
        let path = Path::validate(vec![Point::origin(d), u, Point::origin(d)], true).unwrap();
        LoopFamily::new(vec![SimpleLoop::new(path).unwrap()], true).unwrap()
    }

    /// All 2d one-step excursions {(0, ±u_i, 0)}.
    pub fn all_back_and_forth(d: usize) -> LoopFamily {
        let mut loops = Vec::new();
        for axis in 0..d {
            for positive in [true, false] {
                let u = Point::unit(d, axis, positive);
                let path =
                    Path::validate(vec![Point::origin(d), u, Point::origin(d)], true).unwrap();
                loops.push(SimpleLoop::new(path).unwrap());
            }
        }
        LoopFamily::new(loops, true).unwrap()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn loops(&self) -> &[SimpleLoop] {
        &self.loops
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.loops.len()
    }

    #[inline]
    pub fn lambda(&self, j: usize) -> usize {
        self.lambdas[j]
    }

    #[inline]
    pub fn lambdas(&self) -> &[usize] {
        &self.lambdas
    }

    #[inline]
    pub fn l_e(&self) -> i64 {
        self.l_e
    }

    #[inline]
    pub fn d_e(&self) -> i64 {
        self.d_e
    }

    #[inline]
    pub fn walk_compatible(&self) -> bool {
        self.walk_compatible
    }

    #[inline]
    pub fn max_loop_len(&self) -> usize {
        self.max_len
    }

    #[inline]
    pub(crate) fn last_step(&self, j: usize) -> &Point {
        &self.last_steps[j]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(LoopFamilyFile::from(self))
    }

    pub fn from_json_str(s: &str) -> Result<LoopFamily> {
        let file: LoopFamilyFile = serde_json::from_str(s)?;
        file.build()
    }
}

/// On-disk family format: `{"d": int, "loops": [[[int,...],...],...]}` with
/// loops listed in enumeration order.
#[derive(Serialize, Deserialize)]
pub struct LoopFamilyFile {
    pub d: usize,
    pub loops: Vec<Vec<Vec<i32>>>,
}

impl From<&LoopFamily> for LoopFamilyFile {
    fn from(f: &LoopFamily) -> Self {
        LoopFamilyFile {
            d: f.d,
            loops: f
                .loops
                .iter()
                .map(|e| e.path().points().iter().map(|p| p.coords().to_vec()).collect())
                .collect(),
        }
    }
}

impl LoopFamilyFile {
    pub fn build(&self) -> Result<LoopFamily> {
        if !(1..=MAX_DIM).contains(&self.d) {
            return Err(Error::BadDimension(self.d));
        }
        let mut loops = Vec::with_capacity(self.loops.len());
        for (i, rows) in self.loops.iter().enumerate() {
            let mut pts = Vec::with_capacity(rows.len());
            for (k, row) in rows.iter().enumerate() {
                if row.len() != self.d {
                    return Err(Error::BadLoop {
                        index: i,
                        reason: format!("point {} has dimension {}, expected {}", k, row.len(), self.d),
                    });
                }
                pts.push(Point::new(row)?);
            }
            let path = Path::validate(pts, false).map_err(|e| Error::BadLoop {
                index: i,
                reason: e.to_string(),
            })?;
            loops.push(SimpleLoop::checked(path, i)?);
        }
        LoopFamily::new(loops, true)
    }
}

/// Exact path probability p(eta) = (2d)^(-|eta|) for nearest-neighbor paths
/// rooted at the origin, 0 otherwise. Stored as (base, exponent) so products
/// and comparisons stay exact; conversions to f64 or log-space serve the
/// simulation side.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PathWeight {
    zero: bool,
    two_d: u32,
    steps: u32,
}

impl PathWeight {
    pub fn one(d: usize) -> PathWeight {
        PathWeight {
            zero: false,
            two_d: 2 * d as u32,
            steps: 0,
        }
    }

    pub fn zero(d: usize) -> PathWeight {
        PathWeight {
            zero: true,
            two_d: 2 * d as u32,
            steps: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn mul(&self, other: &PathWeight) -> PathWeight {
        debug_assert_eq!(self.two_d, other.two_d);
        if self.zero || other.zero {
            return PathWeight::zero(self.two_d as usize / 2);
        }
        PathWeight {
            zero: false,
            two_d: self.two_d,
            steps: self.steps + other.steps,
        }
    }

    pub fn ln(&self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else {
            -(self.steps as f64) * (self.two_d as f64).ln()
        }
    }

    pub fn as_f64(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.ln().exp()
        }
    }
}

/// p(eta) for a path rooted at the origin.
pub fn path_probability(eta: &Path, d: usize) -> Result<PathWeight> {
    if !eta.is_rooted() {
        return Err(Error::NotRootedAtOrigin);
    }
    if eta.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: eta.dim(),
            index: 0,
        });
    }
    if !eta.is_walk() {
        return Ok(PathWeight::zero(d));
    }
    Ok(PathWeight {
        zero: false,
        two_d: 2 * d as u32,
        steps: eta.len() as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(axis: usize) -> Point {
        Point::unit(3, axis, true)
    }

    fn o() -> Point {
        Point::origin(3)
    }

    #[test]
    fn validate_single_point_is_length_zero() {
        let p = Path::validate(vec![o()], true).unwrap();
        assert_eq!(p.len(), 0);
        assert!(p.is_walk());
    }

    #[test]
    fn validate_unit_steps() {
        let p = Path::validate(vec![o(), u(0), o()], true).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn validate_rejects_long_step() {
        let two = Point::new(&[2, 0, 0]).unwrap();
        let err = Path::validate(vec![o(), two], true).unwrap_err();
        assert!(matches!(err, Error::NonUnitStep { index: 1 }));
    }

    #[test]
    fn validate_rejects_mixed_dimensions() {
        let p2 = Point::new(&[0, 0]).unwrap();
        let err = Path::validate(vec![o(), p2], false).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn concat_direct_and_translated() {
        let a = Path::validate(vec![o(), u(0)], true).unwrap();
        let b = Path::validate(vec![u(0), u(0).add(&u(1))], true).unwrap();
        let c = a.concat_direct(&b).unwrap();
        assert_eq!(c.points(), &[o(), u(0), u(0).add(&u(1))]);

        let b2 = Path::validate(vec![o(), u(1)], true).unwrap();
        let c2 = a.concat_translated(&b2).unwrap();
        assert_eq!(c2.points(), &[o(), u(0), u(0).add(&u(1))]);

        let bad = Path::validate(vec![u(1), o()], true).unwrap();
        assert!(matches!(a.concat_direct(&bad), Err(Error::EndpointMismatch)));
        assert!(matches!(
            a.concat_translated(&bad),
            Err(Error::NotRootedAtOrigin)
        ));
    }

    #[test]
    fn insert_loop_positions() {
        let e = SimpleLoop::new(Path::validate(vec![o(), u(0), o()], true).unwrap()).unwrap();
        let eta = Path::validate(vec![o(), u(1)], true).unwrap();
        let at0 = eta.insert_loop(0, &e).unwrap();
        assert_eq!(at0.points(), &[o(), u(0), o(), u(1)]);
        let at1 = eta.insert_loop(1, &e).unwrap();
        assert_eq!(at1.points(), &[o(), u(1), u(1).add(&u(0)), u(1)]);
        let trivial = Path::origin(3);
        let grown = trivial.insert_loop(0, &e).unwrap();
        assert_eq!(grown.points(), e.path().points());
        assert!(eta.insert_loop(3, &e).is_err());
    }

    #[test]
    fn local_time_counts() {
        let two = Point::new(&[2, 0, 0]).unwrap();
        let p = Path::validate(vec![o(), u(0), o(), u(0), o()], true).unwrap();
        assert_eq!(p.local_time(&o()), 3);
        assert_eq!(p.local_time(&u(1)), 0);
        let q = Path::validate(vec![o(), u(0), two, u(0), o()], true).unwrap();
        assert_eq!(q.local_time(&u(0)), 2);
    }

    #[test]
    fn path_probability_values() {
        let one = path_probability(&Path::origin(3), 3).unwrap();
        assert_eq!(one.as_f64(), 1.0);
        let p = Path::validate(vec![o(), u(0), o()], true).unwrap();
        let w = path_probability(&p, 3).unwrap();
        assert!((w.as_f64() - 1.0 / 36.0).abs() < 1e-15);
        let two = Point::new(&[2, 0, 0]).unwrap();
        let q = Path::validate(vec![o(), two], false).unwrap();
        assert!(path_probability(&q, 3).unwrap().is_zero());
        let off = Path::validate(vec![u(0), o()], true).unwrap();
        assert!(path_probability(&off, 3).is_err());
    }

    #[test]
    fn loop_family_constants() {
        let e1 = LoopFamily::back_and_forth(3, 0);
        assert_eq!(e1.lambdas(), &[1]);
        assert_eq!(e1.l_e(), 2);
        assert_eq!(e1.d_e(), 1);
        assert!(e1.walk_compatible());

        // Adding the unit square: its l-infinity diameter is 1, so L_E stays 2.
        let square = SimpleLoop::from_coords(&[
            &[0, 0, 0],
            &[1, 0, 0],
            &[1, 1, 0],
            &[0, 1, 0],
            &[0, 0, 0],
        ])
        .unwrap();
        let fam = LoopFamily::new(vec![e1.loops()[0].clone(), square], true).unwrap();
        assert_eq!(fam.lambdas(), &[1, 3]);
        assert_eq!(fam.l_e(), 2);
        assert_eq!(fam.d_e(), 1);
    }

    #[test]
    fn loop_family_rejects_non_simple() {
        let bad = Path::validate(vec![o(), u(0), o(), u(0), o()], true).unwrap();
        assert!(SimpleLoop::new(bad).is_err());
    }

    #[test]
    fn family_json_round_trip_and_errors() {
        let fam = LoopFamily::all_back_and_forth(3);
        let text = serde_json::to_string(&LoopFamilyFile::from(&fam)).unwrap();
        let back = LoopFamily::from_json_str(&text).unwrap();
        assert_eq!(back.count(), fam.count());
        assert_eq!(back.l_e(), fam.l_e());

        let bad = r#"{"d":3,"loops":[[[0,0,0],[1,0,0],[0,0,0],[1,0,0],[0,0,0]]]}"#;
        let err = LoopFamily::from_json_str(bad).unwrap_err();
        assert!(err.to_string().contains("loop 0"));
    }

    #[test]
    fn probability_sums_to_one_exhaustively() {
        // Sum of p(eta) over all nearest-neighbor paths of length n from 0
        // equals 1: the number of such paths is exactly (2d)^n.
        for d in [2usize, 3] {
            for n in 0..=4usize {
                let mut count: u64 = 0;
                let mut frontier = vec![Point::origin(d)];
                for _ in 0..n {
                    let mut next = Vec::new();
                    for p in frontier {
                        for axis in 0..d {
                            for positive in [true, false] {
                                next.push(p.add(&Point::unit(d, axis, positive)));
                            }
                        }
                    }
                    frontier = next;
                }
                count += frontier.len() as u64;
                assert_eq!(count, (2 * d as u64).pow(n as u32));
            }
        }
    }
}
