//! Seeded synthetic objects and query groups.
//!
//! All randomness comes from ChaCha8 seeded with `seed`; locations, object
//! keywords and query groups each use their own stream, so changing one
//! never shifts the others.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{Point, QueryGroup, QueryPoint, Rect, SpatioTextualObject};

const STREAM_LOCATIONS: u64 = 1;
const STREAM_KEYWORDS: u64 = 2;
const STREAM_QUERIES: u64 = 3;

/// Centers tried before a query group gives up on finding keywords.
pub const MAX_CENTER_RETRIES: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct QueryConfig {
    pub group_size: usize,
    /// Area of the query square as a fraction of the data-space area.
    pub query_space_fraction: f64,
    pub keywords_per_query: usize,
    /// Fraction of the distinct keywords inside the square that forms the
    /// pool members draw from.
    pub keyword_set_fraction: f64,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            group_size: 10,
            query_space_fraction: 0.0001,
            keywords_per_query: 4,
            keyword_set_fraction: 0.03,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub object_count: usize,
    pub vocabulary_size: usize,
    /// Mean of the per-object keyword count.
    pub keywords_per_object: f64,
    pub data_space: Rect,
    pub query: QueryConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 1,
            object_count: 100_000,
            vocabulary_size: 783,
            keywords_per_object: 2.91,
            data_space: Rect {
                min: Point::new(0.0, 0.0),
                max: Point::new(1000.0, 1000.0),
            },
            query: QueryConfig::default(),
        }
    }
}

fn fraction_ok(f: f64) -> bool {
    f > 0.0 && f <= 1.0
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        self.data_space.validate()?;
        if self.object_count == 0 || self.vocabulary_size == 0 || self.query.group_size == 0 {
            return Err(Error::invalid("object, vocabulary and group sizes must be at least 1"));
        }
        if self.query.keywords_per_query == 0 {
            return Err(Error::invalid("keywords_per_query must be at least 1"));
        }
        if !(self.keywords_per_object.is_finite() && self.keywords_per_object >= 1.0) {
            return Err(Error::invalid(format!(
                "keywords_per_object mean must be at least 1, got {}",
                self.keywords_per_object
            )));
        }
        if !fraction_ok(self.query.query_space_fraction) || !fraction_ok(self.query.keyword_set_fraction) {
            return Err(Error::invalid("fractions must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn fmt::Display| Error::invalid(format!("bad value '{value}' for {key}: {e}"));
        match key {
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "objects" | "object_count" => self.object_count = value.parse().map_err(|e| bad(&e))?,
            "vocabulary" | "vocabulary_size" => self.vocabulary_size = value.parse().map_err(|e| bad(&e))?,
            "keywords_per_object" => self.keywords_per_object = value.parse().map_err(|e| bad(&e))?,
            "space" | "data_space" => {
                let v: Vec<f64> = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(&e))?;
                if v.len() != 4 {
                    return Err(bad(&"expected min_x,min_y,max_x,max_y"));
                }
                self.data_space = Rect::new(Point::new(v[0], v[1]), Point::new(v[2], v[3]))?;
            }
            "n" | "group_size" => self.query.group_size = value.parse().map_err(|e| bad(&e))?,
            "query_space" | "query_space_fraction" => {
                self.query.query_space_fraction = value.parse().map_err(|e| bad(&e))?
            }
            "keywords_per_query" => self.query.keywords_per_query = value.parse().map_err(|e| bad(&e))?,
            "keyword_set" | "keyword_set_fraction" => {
                self.query.keyword_set_fraction = value.parse().map_err(|e| bad(&e))?
            }
            _ => return Err(Error::invalid(format!("unknown setting '{key}'"))),
        }
        Ok(())
    }

    /// Parses `key=value` lines on top of the defaults. `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut config = GenConfig::default();
        for (key, value) in kv_pairs(text)? {
            config.set(&key, &value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Splits `key=value` lines, skipping blanks and `#` comments.
pub fn kv_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("line {}: expected key=value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Poisson rate whose zero-truncated mean equals `mean` (> 1).
fn truncated_poisson_rate(mean: f64) -> f64 {
    let truncated_mean = |l: f64| l / (1.0 - (-l).exp());
    let (mut lo, mut hi) = (1e-9, mean);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_mean(mid) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn keyword_name(index: usize) -> String {
    format!("t{index}")
}

fn uniform_point(r: &mut ChaCha8Rng, space: &Rect) -> Point {
    Point::new(
        r.random_range(space.min.x..=space.max.x),
        r.random_range(space.min.y..=space.max.y),
    )
}

/// Objects with ids `0..object_count`, uniform locations and a zero-truncated
/// Poisson number of distinct keywords (capped at the vocabulary size).
pub fn gen_objects(config: &GenConfig) -> Result<Vec<SpatioTextualObject>> {
    config.validate()?;
    let mut loc_rng = rng(config.seed, STREAM_LOCATIONS);
    let mut kw_rng = rng(config.seed, STREAM_KEYWORDS);
    let poisson = if config.keywords_per_object > 1.0 {
        let rate = truncated_poisson_rate(config.keywords_per_object);
        Some(Poisson::new(rate).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(config.object_count);
    for id in 0..config.object_count {
        let location = uniform_point(&mut loc_rng, &config.data_space);
        let count = match &poisson {
            Some(p) => loop {
                let c = p.sample(&mut kw_rng) as usize;
                if c >= 1 {
                    break c;
                }
            },
            None => 1,
        };
        let count = count.min(config.vocabulary_size);
        let mut picked = sample(&mut kw_rng, config.vocabulary_size, count).into_vec();
        picked.sort_unstable();
        out.push(SpatioTextualObject::new(
            id as u64,
            location,
            picked.into_iter().map(keyword_name),
        ));
    }
    Ok(out)
}

/// A square of the configured area (clipped to the data space) at a random center.
fn query_square(config: &GenConfig, r: &mut ChaCha8Rng) -> Rect {
    let space = &config.data_space;
    let side = (config.query.query_space_fraction * space.area()).sqrt();
    let w = side.min(space.width());
    let h = side.min(space.height());
    let cx = r.random_range(space.min.x + w / 2.0..=space.max.x - w / 2.0);
    let cy = r.random_range(space.min.y + h / 2.0..=space.max.y - h / 2.0);
    Rect {
        min: Point::new(cx - w / 2.0, cy - h / 2.0),
        max: Point::new(cx + w / 2.0, cy + h / 2.0),
    }
}

/// One group drawn from `r`: members uniform inside a random square, each with
/// distinct keywords drawn from a pool sampled among the keywords of the
/// objects inside that square.
pub fn gen_query_group<R: Rng>(
    config: &GenConfig,
    objects: &[SpatioTextualObject],
    r: &mut R,
) -> Result<QueryGroup> {
    config.validate()?;
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut local = ChaCha8Rng::seed_from_u64(r.random());
    for _ in 0..MAX_CENTER_RETRIES {
        let square = query_square(config, &mut local);
        let inside: BTreeSet<&str> = objects
            .iter()
            .filter(|o| square.contains_point(o.location))
            .flat_map(|o| o.keywords.iter().map(String::as_str))
            .collect();
        if inside.is_empty() {
            continue;
        }
        let inside: Vec<&str> = inside.into_iter().collect();
        let pool_size = ((config.query.keyword_set_fraction * inside.len() as f64).ceil() as usize)
            .clamp(1, inside.len());
        let mut pool_idx = sample(&mut local, inside.len(), pool_size).into_vec();
        pool_idx.sort_unstable();
        let pool: Vec<&str> = pool_idx.into_iter().map(|i| inside[i]).collect();
        let per_member = config.query.keywords_per_query.min(pool.len());
        let members = (0..config.query.group_size)
            .map(|_| {
                let location = uniform_point(&mut local, &square);
                let kws = sample(&mut local, pool.len(), per_member).into_iter().map(|i| pool[i]);
                QueryPoint::new(location, kws)
            })
            .collect::<Result<Vec<_>>>()?;
        return QueryGroup::new(members);
    }
    Err(Error::invalid(format!(
        "no object keywords inside any of {MAX_CENTER_RETRIES} query squares"
    )))
}

/// `count` groups from the query stream of `config.seed`.
pub fn gen_query_groups(
    config: &GenConfig,
    objects: &[SpatioTextualObject],
    count: usize,
) -> Result<Vec<QueryGroup>> {
    let mut r = rng(config.seed, STREAM_QUERIES);
    (0..count).map(|_| gen_query_group(config, objects, &mut r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(count: usize) -> GenConfig {
        GenConfig {
            object_count: count,
            vocabulary_size: 50,
            ..GenConfig::default()
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let c = small(500);
        assert_eq!(gen_objects(&c).unwrap(), gen_objects(&c).unwrap());
        let objects = gen_objects(&c).unwrap();
        let a = gen_query_groups(&c, &objects, 3).unwrap();
        let b = gen_query_groups(&c, &objects, 3).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        let other = GenConfig { seed: 2, ..c };
        assert_ne!(gen_objects(&other).unwrap(), objects);
    }

    #[test]
    fn keyword_mean_near_target() {
        let c = GenConfig {
            object_count: 60_667,
            ..GenConfig::default()
        };
        let objects = gen_objects(&c).unwrap();
        let mean = objects.iter().map(|o| o.keywords.len()).sum::<usize>() as f64 / objects.len() as f64;
        assert!((mean - 2.91).abs() / 2.91 < 0.05, "mean {mean}");
        assert!(objects.iter().all(|o| !o.keywords.is_empty()));
    }

    #[test]
    fn single_object_inside_space() {
        let c = small(1);
        let objects = gen_objects(&c).unwrap();
        assert_eq!(objects.len(), 1);
        assert!(c.data_space.contains_point(objects[0].location));
    }

    #[test]
    fn truncated_rate_solves_mean() {
        let l = truncated_poisson_rate(2.91);
        assert!((l / (1.0 - (-l).exp()) - 2.91).abs() < 1e-9);
    }

    #[test]
    fn members_stay_in_square_and_pool() {
        let c = GenConfig {
            query: QueryConfig {
                query_space_fraction: 0.01,
                ..QueryConfig::default()
            },
            ..small(5000)
        };
        let objects = gen_objects(&c).unwrap();
        let side = (0.01 * c.data_space.area()).sqrt();
        for g in gen_query_groups(&c, &objects, 20).unwrap() {
            assert_eq!(g.len(), 10);
            let xs = g.members().iter().map(|q| q.location.x);
            let ys = g.members().iter().map(|q| q.location.y);
            let spread_x = xs.clone().fold(f64::MIN, f64::max) - xs.fold(f64::MAX, f64::min);
            let spread_y = ys.clone().fold(f64::MIN, f64::max) - ys.fold(f64::MAX, f64::min);
            assert!(spread_x <= side && spread_y <= side);
            let union: BTreeSet<&String> = g.members().iter().flat_map(|q| q.keywords.iter()).collect();
            let pool_cap = ((0.03f64 * 50.0).ceil() as usize).max(4);
            assert!(union.len() <= pool_cap);
        }
    }

    #[test]
    fn whole_space_keywords_come_from_data() {
        let c = GenConfig {
            query: QueryConfig {
                query_space_fraction: 1.0,
                keyword_set_fraction: 1.0,
                ..QueryConfig::default()
            },
            ..small(300)
        };
        let objects = gen_objects(&c).unwrap();
        let all: BTreeSet<&String> = objects.iter().flat_map(|o| o.keywords.iter()).collect();
        for g in gen_query_groups(&c, &objects, 5).unwrap() {
            assert!(g.members().iter().all(|q| q.keywords.iter().all(|k| all.contains(k))));
        }
    }

    #[test]
    fn kv_config_round() {
        let c = GenConfig::from_kv("seed=7\nobjects=10 # tiny\n\nn=3\nspace=0,0,5,5\n").unwrap();
        assert_eq!((c.seed, c.object_count, c.query.group_size), (7, 10, 3));
        assert_eq!(c.data_space.max, Point::new(5.0, 5.0));
        assert!(GenConfig::from_kv("bogus=1").is_err());
        assert!(GenConfig::from_kv("query_space=0").is_err());
    }
}
