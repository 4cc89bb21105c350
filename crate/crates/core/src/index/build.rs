//! Sort-Tile-Recursive bulk loading.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{distance, Point, Rect, SpatioTextualObject};

use super::node::{ChildEntry, KeywordTable, LeafEntry, LeafInvertedFile, Node, NodeBody};
use super::page::{Encoder, PageImage, PAGE_HEADER_LEN};
use super::{IndexHeader, KeywordId, PageId, DEFAULT_FANOUT, DEFAULT_PAGE_SIZE, MIN_PAGE_SIZE};

/// Brute-force `d_max` is quadratic; larger inputs must use the bounding-box
/// diagonal.
pub const MAX_EXACT_DMAX_OBJECTS: usize = 10_000;

// Largest fixed-size entry: an interior child reference (page id + rectangle).
const LARGEST_ENTRY: usize = 4 + 32;
const NODE_PREFIX: usize = 1 + 2 + 2 + 32;

#[derive(Clone, Debug, PartialEq)]
pub struct BuildOptions {
    pub fanout: usize,
    pub page_size: usize,
    /// Use the exact maximum pairwise object distance for `d_max` instead of
    /// the bounding-box diagonal.
    pub exact_dmax: bool,
    /// Keyword weights; keywords without an entry weigh 1.0.
    pub weights: HashMap<String, f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            fanout: DEFAULT_FANOUT,
            page_size: DEFAULT_PAGE_SIZE,
            exact_dmax: false,
            weights: HashMap::new(),
        }
    }
}

impl BuildOptions {
    fn validate(&self) -> Result<()> {
        if self.fanout < 2 || self.fanout > u16::MAX as usize {
            return Err(Error::invalid(format!("fanout {} outside 2..=65535", self.fanout)));
        }
        let required = MIN_PAGE_SIZE.max(PAGE_HEADER_LEN + NODE_PREFIX + LARGEST_ENTRY);
        if self.page_size < required {
            return Err(Error::PageTooSmall {
                page_size: self.page_size,
                required,
            });
        }
        if let Some((kw, w)) = self.weights.iter().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("weight of '{kw}' must be positive, got {w}")));
        }
        Ok(())
    }
}

/// Summary of one packed subtree while the next level is assembled.
struct Packed {
    page_id: PageId,
    mbr: Rect,
    keywords: Vec<KeywordId>,
}

/// Groups items into runs of at most `capacity` using STR: sort by x, cut
/// into vertical slices of `ceil(sqrt(P)) * capacity` items, sort each slice
/// by y and chunk it. `keys` are (center, tie-breaker).
fn str_groups(keys: &[(Point, u64)], capacity: usize) -> Vec<Vec<usize>> {
    let n = keys.len();
    let leaves = n.div_ceil(capacity);
    let mut slices = (leaves as f64).sqrt().ceil() as usize;
    while slices * slices < leaves {
        slices += 1;
    }
    let slice_len = slices.max(1) * capacity;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (pa, ta) = keys[a];
        let (pb, tb) = keys[b];
        pa.x.total_cmp(&pb.x).then(pa.y.total_cmp(&pb.y)).then(ta.cmp(&tb))
    });
    let mut groups = Vec::with_capacity(leaves);
    for slice in order.chunks_mut(slice_len) {
        slice.sort_by(|&a, &b| {
            let (pa, ta) = keys[a];
            let (pb, tb) = keys[b];
            pa.y.total_cmp(&pb.y).then(pa.x.total_cmp(&pb.x)).then(ta.cmp(&tb))
        });
        groups.extend(slice.chunks(capacity).map(<[usize]>::to_vec));
    }
    groups
}

fn validate_objects(objects: &[SpatioTextualObject]) -> Result<()> {
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut ids = HashSet::with_capacity(objects.len());
    for o in objects {
        if !ids.insert(o.id) {
            return Err(Error::DuplicateId(o.id));
        }
        if !(o.location.x.is_finite() && o.location.y.is_finite()) {
            return Err(Error::invalid(format!("object {} has a non-finite location", o.id)));
        }
        if o.keywords.iter().any(|k| k.is_empty() || k.len() > u16::MAX as usize) {
            return Err(Error::invalid(format!("object {} has an empty or oversized keyword", o.id)));
        }
    }
    Ok(())
}

fn compute_dmax(objects: &[SpatioTextualObject], bbox: &Rect, exact: bool) -> Result<f64> {
    let d = if exact {
        if objects.len() > MAX_EXACT_DMAX_OBJECTS {
            return Err(Error::invalid(format!(
                "exact d_max is limited to {MAX_EXACT_DMAX_OBJECTS} objects, dataset has {}",
                objects.len()
            )));
        }
        let mut best = 0.0f64;
        for (i, a) in objects.iter().enumerate() {
            for b in &objects[i + 1..] {
                best = best.max(distance(a.location, b.location));
            }
        }
        best
    } else {
        bbox.diagonal()
    };
    // every object at one location: distances are all zero, any positive
    // normalizer works
    Ok(if d > 0.0 { d } else { 1.0 })
}

/// Builds the index image in memory. Identical inputs and options yield
/// byte-identical images.
pub fn build_index(objects: &[SpatioTextualObject], options: &BuildOptions) -> Result<Vec<u8>> {
    options.validate()?;
    validate_objects(objects)?;

    let dictionary: BTreeMap<&str, f64> = objects
        .iter()
        .flat_map(|o| o.keywords.iter())
        .map(|k| (k.as_str(), options.weights.get(k).copied().unwrap_or(1.0)))
        .collect();
    let keyword_ids: HashMap<&str, KeywordId> = dictionary
        .keys()
        .enumerate()
        .map(|(i, &k)| (k, i as KeywordId))
        .collect();
    let w_max = dictionary.values().copied().fold(0.0f64, f64::max);
    let w_max = if w_max > 0.0 { w_max } else { 1.0 };

    let bbox = Rect::bounding(objects.iter().map(|o| o.location)).expect("non-empty");
    let d_max = compute_dmax(objects, &bbox, options.exact_dmax)?;

    let mut image = PageImage::new(options.page_size);

    let object_keys: Vec<(Point, u64)> = objects.iter().map(|o| (o.location, o.id)).collect();
    let mut level: Vec<Packed> = Vec::new();
    for group in str_groups(&object_keys, options.fanout) {
        let members: Vec<&SpatioTextualObject> = group.iter().map(|&i| &objects[i]).collect();
        let per_slot: Vec<Vec<KeywordId>> = members
            .iter()
            .map(|o| o.keywords.iter().map(|k| keyword_ids[k.as_str()]).collect())
            .collect();
        let postings = KeywordTable::from_slots(per_slot.iter().map(Vec::as_slice));
        let postings_page = image.write_record(&LeafInvertedFile::encode(&postings, members.len()));
        let mbr = Rect::bounding(members.iter().map(|o| o.location)).expect("non-empty group");
        let node = Node {
            page_id: image.next_page(),
            level: 0,
            mbr,
            body: NodeBody::Leaf {
                objects: members
                    .iter()
                    .map(|o| LeafEntry {
                        id: o.id,
                        location: o.location,
                    })
                    .collect(),
                postings_page,
            },
        };
        let page_id = image.write_record(&node.encode());
        level.push(Packed {
            page_id,
            mbr,
            keywords: postings.keywords().to_vec(),
        });
    }

    let mut height = 0u16;
    while level.len() > 1 {
        height += 1;
        let keys: Vec<(Point, u64)> = level.iter().map(|p| (p.mbr.center(), p.page_id as u64)).collect();
        let mut next = Vec::new();
        for group in str_groups(&keys, options.fanout) {
            let children: Vec<&Packed> = group.iter().map(|&i| &level[i]).collect();
            let table = KeywordTable::from_slots(children.iter().map(|c| c.keywords.as_slice()));
            let mbr = children
                .iter()
                .skip(1)
                .fold(children[0].mbr, |acc, c| acc.union(&c.mbr));
            let node = Node {
                page_id: image.next_page(),
                level: height,
                mbr,
                body: NodeBody::Interior {
                    children: children
                        .iter()
                        .map(|c| ChildEntry {
                            page_id: c.page_id,
                            mbr: c.mbr,
                        })
                        .collect(),
                    keywords: table.clone(),
                },
            };
            let page_id = image.write_record(&node.encode());
            next.push(Packed {
                page_id,
                mbr,
                keywords: table.keywords().to_vec(),
            });
        }
        level = next;
    }
    let root = level.pop().expect("at least one node");
    let tree_page_count = image.page_count() - 1;

    let mut dict = Encoder::default();
    dict.u32(dictionary.len() as u32);
    for (kw, w) in &dictionary {
        dict.u16(kw.len() as u16);
        dict.bytes(kw.as_bytes());
        dict.f64(*w);
    }
    let dictionary_page = image.write_record(&dict.finish());

    let header = IndexHeader {
        page_size: options.page_size as u32,
        fanout: options.fanout as u32,
        root_page: root.page_id,
        root_level: height as u32,
        tree_page_count,
        dictionary_page,
        page_count: image.page_count(),
        object_count: objects.len() as u64,
        d_max,
        w_max,
        bbox,
        exact_dmax: options.exact_dmax,
    };
    image.set_header(&header.encode());
    Ok(image.into_bytes())
}

pub fn build_index_to_file(
    objects: &[SpatioTextualObject],
    options: &BuildOptions,
    path: &Path,
) -> Result<IndexHeader> {
    let bytes = build_index(objects, options)?;
    let header = IndexHeader::decode(&bytes)?;
    std::fs::write(path, &bytes).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(header)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn str_groups_cover_all_items_once() {
        let keys: Vec<(Point, u64)> = (0..103)
            .map(|i| (Point::new((i * 37 % 101) as f64, (i * 53 % 97) as f64), i))
            .collect();
        let groups = str_groups(&keys, 10);
        assert_eq!(groups.len(), 11);
        let mut seen: Vec<usize> = groups.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..103).collect::<Vec<_>>());
        assert!(groups.iter().all(|g| !g.is_empty() && g.len() <= 10));
    }

    #[test]
    fn rejects_bad_input() {
        let o = SpatioTextualObject::new(1, Point::new(0.0, 0.0), ["a"]);
        assert!(matches!(build_index(&[], &BuildOptions::default()), Err(Error::EmptyDataset)));
        assert!(matches!(
            build_index(&[o.clone(), o.clone()], &BuildOptions::default()),
            Err(Error::DuplicateId(1))
        ));
        let tiny = BuildOptions {
            page_size: 256,
            ..BuildOptions::default()
        };
        assert!(matches!(build_index(std::slice::from_ref(&o), &tiny), Err(Error::PageTooSmall { .. })));
        let narrow = BuildOptions {
            fanout: 1,
            ..BuildOptions::default()
        };
        assert!(build_index(&[o], &narrow).is_err());
    }

    #[test]
    fn exact_dmax_is_bounded_by_diagonal() {
        let objects: Vec<_> = [(0.0, 0.0), (3.0, 0.0), (0.0, 4.0), (1.0, 1.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| SpatioTextualObject::new(i as u64, Point::new(x, y), ["k"]))
            .collect();
        let bbox = Rect::bounding(objects.iter().map(|o| o.location)).unwrap();
        assert_eq!(compute_dmax(&objects, &bbox, true).unwrap(), 5.0);
        assert_eq!(compute_dmax(&objects, &bbox, false).unwrap(), 5.0);
        assert_eq!(compute_dmax(&objects[1..2], &Rect::from_point(objects[1].location), false).unwrap(), 1.0);
    }
}
