//! Domain types shared by the index, the query algorithms and the oracle.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ObjectId = u64;

/// Keyword sets are kept sorted so that every similarity computation visits
/// query keywords in the same order, which keeps floating point sums
/// reproducible across the index and oracle paths.
pub type KeywordSet = BTreeSet<String>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned rectangle with `min <= max` on both axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        let rect = Rect { min, max };
        rect.validate()?;
        Ok(rect)
    }

    pub const fn from_point(p: Point) -> Self {
        Rect { min: p, max: p }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.min.x, self.min.y, self.max.x, self.max.y]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.min.x > self.max.x || self.min.y > self.max.y {
            return Err(Error::invalid(format!("malformed rectangle {self:?}")));
        }
        Ok(())
    }

    /// Smallest rectangle covering every point; `None` for an empty iterator.
    pub fn bounding<I: IntoIterator<Item = Point>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Rect::from_point(first), |r, p| r.union(&Rect::from_point(p))))
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            min: Point::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Point::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        euclidean(self.width(), self.height())
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.min.x + self.width() / 2.0,
            self.min.y + self.height() / 2.0,
        )
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains_point(other.min) && self.contains_point(other.max)
    }

    /// Unnormalized minimum Euclidean distance from `p` to this rectangle;
    /// zero when `p` lies inside or on the boundary.
    pub fn min_dist(&self, p: Point) -> f64 {
        let dx = axis_gap(p.x, self.min.x, self.max.x);
        let dy = axis_gap(p.y, self.min.y, self.max.y);
        euclidean(dx, dy)
    }
}

fn axis_gap(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo - v
    } else if v > hi {
        v - hi
    } else {
        0.0
    }
}

/// The single Euclidean norm used everywhere; object and node distances must
/// round identically for the degenerate-rectangle equivalence to be exact.
pub(crate) fn euclidean(dx: f64, dy: f64) -> f64 {
    (dx * dx + dy * dy).sqrt()
}

pub fn distance(a: Point, b: Point) -> f64 {
    euclidean(a.x - b.x, a.y - b.y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatioTextualObject {
    pub id: ObjectId,
    pub location: Point,
    pub keywords: KeywordSet,
}

impl SpatioTextualObject {
    pub fn new<I, S>(id: ObjectId, location: Point, keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SpatioTextualObject {
            id,
            location,
            keywords: keywords.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryPoint {
    pub location: Point,
    pub keywords: KeywordSet,
    pub priority: f64,
}

impl QueryPoint {
    pub fn new<I, S>(location: Point, keywords: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_priority(location, keywords, 1.0)
    }

    pub fn with_priority<I, S>(location: Point, keywords: I, priority: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let q = QueryPoint {
            location,
            keywords: keywords.into_iter().map(Into::into).collect(),
            priority,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.keywords.is_empty() {
            return Err(Error::invalid("query point has no keywords"));
        }
        if self.keywords.iter().any(String::is_empty) {
            return Err(Error::invalid("query keyword is an empty string"));
        }
        if !(self.priority.is_finite() && self.priority > 0.0) {
            return Err(Error::invalid(format!(
                "query priority must be positive, got {}",
                self.priority
            )));
        }
        if !(self.location.x.is_finite() && self.location.y.is_finite()) {
            return Err(Error::invalid("query location is not finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryGroup {
    members: Vec<QueryPoint>,
}

impl QueryGroup {
    pub fn new(members: Vec<QueryPoint>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("query group must have at least one member"));
        }
        for m in &members {
            m.validate()?;
        }
        Ok(QueryGroup { members })
    }

    pub fn members(&self) -> &[QueryPoint] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Copy of the group with every priority multiplied by `factor`.
    pub fn scale_priorities(&self, factor: f64) -> Result<Self> {
        let members = self
            .members
            .iter()
            .map(|m| QueryPoint {
                priority: m.priority * factor,
                ..m.clone()
            })
            .collect();
        QueryGroup::new(members)
    }
}

/// Monotonic aggregate folded over per-member costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Sum,
    Max,
    Min,
}

impl Aggregate {
    pub const ALL: [Aggregate; 3] = [Aggregate::Sum, Aggregate::Max, Aggregate::Min];

    pub(crate) fn combine(self, acc: f64, value: f64) -> f64 {
        match self {
            Aggregate::Sum => acc + value,
            Aggregate::Max => acc.max(value),
            Aggregate::Min => acc.min(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Aggregate::Sum => "sum",
            Aggregate::Max => "max",
            Aggregate::Min => "min",
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Aggregate::Sum),
            "max" => Ok(Aggregate::Max),
            "min" => Ok(Aggregate::Min),
            other => Err(Error::invalid(format!("unknown aggregate '{other}'"))),
        }
    }
}

/// Parameters of the blended spatial/textual cost.
#[derive(Clone, Debug, PartialEq)]
pub struct CostParams {
    pub alpha: f64,
    pub aggregate: Aggregate,
    pub d_max: f64,
    pub w_max: f64,
    /// Keyword weights; absent keywords weigh 1.0.
    pub weights: HashMap<String, f64>,
}

impl CostParams {
    /// Uniform keyword weights (`w_max = 1`).
    pub fn new(alpha: f64, aggregate: Aggregate, d_max: f64) -> Result<Self> {
        Self::with_weights(alpha, aggregate, d_max, 1.0, HashMap::new())
    }

    pub fn with_weights(
        alpha: f64,
        aggregate: Aggregate,
        d_max: f64,
        w_max: f64,
        weights: HashMap<String, f64>,
    ) -> Result<Self> {
        let params = CostParams {
            alpha,
            aggregate,
            d_max,
            w_max,
            weights,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if !(self.d_max.is_finite() && self.d_max > 0.0) {
            return Err(Error::invalid(format!("d_max must be positive, got {}", self.d_max)));
        }
        if !(self.w_max.is_finite() && self.w_max > 0.0) {
            return Err(Error::invalid(format!("w_max must be positive, got {}", self.w_max)));
        }
        for (kw, &w) in &self.weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(format!("weight of '{kw}' must be positive, got {w}")));
            }
            if w > self.w_max {
                return Err(Error::invalid(format!(
                    "weight of '{kw}' ({w}) exceeds w_max ({})",
                    self.w_max
                )));
            }
        }
        Ok(())
    }

    pub fn weight(&self, keyword: &str) -> f64 {
        self.weights.get(keyword).copied().unwrap_or(1.0)
    }

    /// `y.w / w_max` for a single keyword.
    pub fn normalized_weight(&self, keyword: &str) -> f64 {
        self.weight(keyword) / self.w_max
    }
}

/// A chosen subgroup: member indices sorted ascending, plus its aggregate cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupSelection {
    pub member_indices: Vec<usize>,
    pub aggregate_cost: f64,
}

impl SubgroupSelection {
    pub fn size(&self) -> usize {
        self.member_indices.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_rejects_inverted_bounds() {
        assert!(Rect::new(Point::new(1.0, 0.0), Point::new(0.0, 1.0)).is_err());
        assert!(Rect::new(Point::new(0.0, 0.0), Point::new(0.0, f64::NAN)).is_err());
    }

    #[test]
    fn min_dist_axis_gap() {
        let r = Rect::new(Point::new(1.0, 0.0), Point::new(2.0, 1.0)).unwrap();
        assert_eq!(r.min_dist(Point::new(0.0, 0.0)), 1.0);
        assert_eq!(r.min_dist(Point::new(1.5, 0.5)), 0.0);
        assert_eq!(r.min_dist(Point::new(5.0, 5.0)), 5.0);
    }

    #[test]
    fn query_point_validation() {
        let empty: [&str; 0] = [];
        assert!(QueryPoint::new(Point::new(0.0, 0.0), empty).is_err());
        assert!(QueryPoint::with_priority(Point::new(0.0, 0.0), ["a"], 0.0).is_err());
        assert!(QueryGroup::new(vec![]).is_err());
    }

    #[test]
    fn cost_params_validation() {
        assert!(CostParams::new(1.5, Aggregate::Sum, 1.0).is_err());
        assert!(CostParams::new(0.5, Aggregate::Sum, 0.0).is_err());
        let heavy = HashMap::from([("a".to_string(), 3.0)]);
        assert!(CostParams::with_weights(0.5, Aggregate::Sum, 1.0, 2.0, heavy).is_err());
        assert_eq!("MAX".parse::<Aggregate>().unwrap(), Aggregate::Max);
    }
}
