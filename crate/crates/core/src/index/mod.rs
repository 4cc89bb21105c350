//! Disk-paged IR-tree: an R-tree whose interior nodes carry keyword summaries
//! of their children and whose leaves point at per-leaf inverted files.
//!
//! File layout: page 0 holds the [`IndexHeader`]; pages `1..=tree_page_count`
//! hold node and inverted-file records; the keyword dictionary follows.

mod build;
mod node;
mod page;

use std::collections::HashMap;
use std::fs::File;
use std::ops::AddAssign;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Aggregate, CostParams, Point, Rect, SpatioTextualObject};

pub use build::{build_index, build_index_to_file, BuildOptions, MAX_EXACT_DMAX_OBJECTS};
pub use node::{ChildEntry, KeywordTable, LeafEntry, LeafInvertedFile, Node, NodeBody};

use page::{split_page, Decoder, Encoder};

pub type PageId = u32;
pub type KeywordId = u32;

pub const MAGIC: [u8; 8] = *b"GSKIRT\0\x01";
pub const FORMAT_VERSION: u32 = 1;
pub const MIN_PAGE_SIZE: usize = 512;
pub const DEFAULT_PAGE_SIZE: usize = 4096;
pub const DEFAULT_FANOUT: usize = 50;

const HEADER_LEN: usize = 8 + 4 * 8 + 8 * 3 + 8 * 4 + 1 + 4;

/// Fields persisted in page 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexHeader {
    pub page_size: u32,
    pub fanout: u32,
    pub root_page: PageId,
    /// Level of the root; 0 when the root is a leaf.
    pub root_level: u32,
    /// Pages `1..=tree_page_count` hold nodes and inverted files.
    pub tree_page_count: u32,
    pub dictionary_page: PageId,
    /// All pages in the file, including the header page.
    pub page_count: u32,
    pub object_count: u64,
    pub d_max: f64,
    pub w_max: f64,
    pub bbox: Rect,
    /// Whether `d_max` is the exact maximum pairwise distance rather than
    /// the bounding-box diagonal.
    pub exact_dmax: bool,
}

impl IndexHeader {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::default();
        e.bytes(&MAGIC);
        e.u32(FORMAT_VERSION);
        e.u32(self.page_size);
        e.u32(self.fanout);
        e.u32(self.root_page);
        e.u32(self.root_level);
        e.u32(self.tree_page_count);
        e.u32(self.dictionary_page);
        e.u32(self.page_count);
        e.u64(self.object_count);
        e.f64(self.d_max);
        e.f64(self.w_max);
        e.f64(self.bbox.min.x);
        e.f64(self.bbox.min.y);
        e.f64(self.bbox.max.x);
        e.f64(self.bbox.max.y);
        e.u8(self.exact_dmax as u8);
        let crc = crc32fast::hash(e.as_slice());
        e.u32(crc);
        debug_assert_eq!(e.len(), HEADER_LEN);
        e.finish()
    }

    fn decode(raw: &[u8]) -> Result<Self> {
        if raw.len() < HEADER_LEN {
            return Err(Error::corrupt("file too short for an index header"));
        }
        let mut d = Decoder::new(raw);
        if d.take(8)? != MAGIC {
            return Err(Error::corrupt("bad magic, not an IR-tree index file"));
        }
        let version = d.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let stored_crc = u32::from_le_bytes(raw[HEADER_LEN - 4..HEADER_LEN].try_into().unwrap());
        if crc32fast::hash(&raw[..HEADER_LEN - 4]) != stored_crc {
            return Err(Error::Checksum(0));
        }
        let header = IndexHeader {
            page_size: d.u32()?,
            fanout: d.u32()?,
            root_page: d.u32()?,
            root_level: d.u32()?,
            tree_page_count: d.u32()?,
            dictionary_page: d.u32()?,
            page_count: d.u32()?,
            object_count: d.u64()?,
            d_max: d.f64()?,
            w_max: d.f64()?,
            bbox: Rect {
                min: Point::new(d.f64()?, d.f64()?),
                max: Point::new(d.f64()?, d.f64()?),
            },
            exact_dmax: d.u8()? != 0,
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        let pages_ok = self.root_page >= 1
            && self.root_page <= self.tree_page_count
            && self.dictionary_page > self.tree_page_count
            && self.dictionary_page < self.page_count;
        if (self.page_size as usize) < MIN_PAGE_SIZE
            || self.fanout < 2
            || !pages_ok
            || !(self.d_max > 0.0 && self.w_max > 0.0)
            || self.bbox.validate().is_err()
        {
            return Err(Error::corrupt(format!("inconsistent index header {self:?}")));
        }
        Ok(())
    }
}

/// Per-query instrumentation. Reads are logical page reads: every page of a
/// chained record counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AccessCounters {
    pub interior_node_reads: u64,
    pub leaf_node_reads: u64,
    pub inverted_file_reads: u64,
    pub objects_scored: u64,
    /// Node entries discarded by a bound, plus entries left unvisited when a
    /// best-first search stops early.
    pub nodes_pruned: u64,
    pub nodes_enqueued: u64,
    /// Node records read (a chained record counts once).
    pub nodes_expanded: u64,
}

impl AccessCounters {
    pub fn page_accesses(&self) -> u64 {
        self.interior_node_reads + self.leaf_node_reads + self.inverted_file_reads
    }

    /// Fraction of encountered nodes that were never read.
    pub fn pruning_power(&self) -> f64 {
        let total = self.nodes_pruned + self.nodes_expanded;
        if total == 0 {
            0.0
        } else {
            self.nodes_pruned as f64 / total as f64
        }
    }
}

impl AddAssign for AccessCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.interior_node_reads += rhs.interior_node_reads;
        self.leaf_node_reads += rhs.leaf_node_reads;
        self.inverted_file_reads += rhs.inverted_file_reads;
        self.objects_scored += rhs.objects_scored;
        self.nodes_pruned += rhs.nodes_pruned;
        self.nodes_enqueued += rhs.nodes_enqueued;
        self.nodes_expanded += rhs.nodes_expanded;
    }
}

enum PageSource {
    File(File),
    Memory(Vec<u8>),
}

impl PageSource {
    fn read_at(&self, offset: u64, buf: &mut [u8]) -> std::io::Result<()> {
        match self {
            PageSource::Memory(bytes) => {
                let start = offset as usize;
                let src = bytes.get(start..start + buf.len()).ok_or_else(|| {
                    std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "read past end of index")
                })?;
                buf.copy_from_slice(src);
                Ok(())
            }
            PageSource::File(file) => read_exact_at(file, buf, offset),
        }
    }

    fn len(&self) -> std::io::Result<u64> {
        match self {
            PageSource::Memory(bytes) => Ok(bytes.len() as u64),
            PageSource::File(file) => Ok(file.metadata()?.len()),
        }
    }
}

#[cfg(unix)]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    std::os::unix::fs::FileExt::read_exact_at(file, buf, offset)
}

#[cfg(windows)]
fn read_exact_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> std::io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => return Err(std::io::ErrorKind::UnexpectedEof.into()),
            n => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
        }
    }
    Ok(())
}

/// Read-only handle on a built index. Positional reads keep it shareable
/// across threads; every query passes its own [`AccessCounters`].
pub struct IrTree {
    source: PageSource,
    header: IndexHeader,
    dictionary: Vec<String>,
    weights: Vec<f64>,
    lookup: HashMap<String, KeywordId>,
}

impl std::fmt::Debug for IrTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IrTree")
            .field("header", &self.header)
            .field("keywords", &self.dictionary.len())
            .finish()
    }
}

impl IrTree {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_source(PageSource::File(file))
    }

    /// Opens an index image held in memory, e.g. straight from [`build_index`].
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        Self::from_source(PageSource::Memory(bytes))
    }

    /// Reads the whole file into memory; counters are unaffected.
    pub fn open_in_memory(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(bytes)
    }

    fn from_source(source: PageSource) -> Result<Self> {
        let len = source.len()?;
        let mut raw = vec![0u8; HEADER_LEN];
        if len < HEADER_LEN as u64 {
            return Err(Error::corrupt("file too short for an index header"));
        }
        source.read_at(0, &mut raw)?;
        let header = IndexHeader::decode(&raw)?;
        if len != header.page_count as u64 * header.page_size as u64 {
            return Err(Error::corrupt(format!(
                "file length {len} does not match {} pages of {} bytes",
                header.page_count, header.page_size
            )));
        }
        let mut tree = IrTree {
            source,
            header,
            dictionary: Vec::new(),
            weights: Vec::new(),
            lookup: HashMap::new(),
        };
        tree.load_dictionary()?;
        Ok(tree)
    }

    fn load_dictionary(&mut self) -> Result<()> {
        let (payload, _) = self.read_record(self.header.dictionary_page)?;
        let mut d = Decoder::new(&payload);
        let count = d.u32()? as usize;
        for id in 0..count {
            let len = d.u16()? as usize;
            let kw = std::str::from_utf8(d.take(len)?)
                .map_err(|_| Error::corrupt("dictionary keyword is not UTF-8"))?
                .to_string();
            let weight = d.f64()?;
            if self.dictionary.last().is_some_and(|prev| *prev >= kw) {
                return Err(Error::corrupt("dictionary is not sorted"));
            }
            self.lookup.insert(kw.clone(), id as KeywordId);
            self.dictionary.push(kw);
            self.weights.push(weight);
        }
        Ok(())
    }

    pub fn header(&self) -> &IndexHeader {
        &self.header
    }

    pub fn keyword_id(&self, keyword: &str) -> Option<KeywordId> {
        self.lookup.get(keyword).copied()
    }

    pub fn keyword(&self, id: KeywordId) -> Option<&str> {
        self.dictionary.get(id as usize).map(String::as_str)
    }

    pub fn keyword_count(&self) -> usize {
        self.dictionary.len()
    }

    /// Cost parameters matching this index: its `d_max`, `w_max` and the
    /// keyword weights recorded at build time.
    pub fn cost_params(&self, alpha: f64, aggregate: Aggregate) -> Result<CostParams> {
        let weights = self
            .dictionary
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w != 1.0)
            .map(|(k, &w)| (k.clone(), w))
            .collect();
        CostParams::with_weights(alpha, aggregate, self.header.d_max, self.header.w_max, weights)
    }

    fn read_record(&self, first: PageId) -> Result<(Vec<u8>, u64)> {
        let page_size = self.header.page_size as usize;
        let mut raw = vec![0u8; page_size];
        let mut payload = Vec::new();
        let mut page = first;
        let mut pages = 0u64;
        loop {
            if page == 0 || page >= self.header.page_count {
                return Err(Error::PageOutOfRange {
                    page,
                    count: self.header.page_count,
                });
            }
            if pages > self.header.page_count as u64 {
                return Err(Error::corrupt(format!("page chain starting at {first} loops")));
            }
            self.source.read_at(page as u64 * page_size as u64, &mut raw)?;
            pages += 1;
            let (next, chunk) = split_page(page, &raw)?;
            payload.extend_from_slice(chunk);
            if next == 0 {
                return Ok((payload, pages));
            }
            page = next;
        }
    }

    pub fn root_page(&self) -> PageId {
        self.header.root_page
    }

    /// Reads one node; each page of its chain counts as one interior or leaf
    /// node read.
    pub fn read_node(&self, page_id: PageId, counters: &mut AccessCounters) -> Result<Node> {
        if page_id > self.header.tree_page_count {
            return Err(Error::PageOutOfRange {
                page: page_id,
                count: self.header.page_count,
            });
        }
        let (payload, pages) = self.read_record(page_id)?;
        let node = Node::decode(page_id, &payload)?;
        if node.is_leaf() {
            counters.leaf_node_reads += pages;
        } else {
            counters.interior_node_reads += pages;
        }
        counters.nodes_expanded += 1;
        Ok(node)
    }

    /// Reads the inverted file of `leaf`; each page counts as one inverted
    /// file read.
    pub fn read_postings(&self, leaf: &Node, counters: &mut AccessCounters) -> Result<LeafInvertedFile> {
        let NodeBody::Leaf {
            objects,
            postings_page,
        } = &leaf.body
        else {
            return Err(Error::invalid(format!("page {} is not a leaf", leaf.page_id)));
        };
        let (payload, pages) = self.read_record(*postings_page)?;
        let inv = LeafInvertedFile::decode(*postings_page, &payload, objects)?;
        counters.inverted_file_reads += pages;
        Ok(inv)
    }

    /// Every node, root first, breadth-first.
    pub fn nodes(&self) -> Result<Vec<Node>> {
        let mut counters = AccessCounters::default();
        let mut out = vec![self.read_node(self.root_page(), &mut counters)?];
        let mut i = 0;
        while i < out.len() {
            if let NodeBody::Interior { children, .. } = &out[i].body {
                let pages: Vec<PageId> = children.iter().map(|c| c.page_id).collect();
                for p in pages {
                    out.push(self.read_node(p, &mut counters)?);
                }
            }
            i += 1;
        }
        Ok(out)
    }

    /// Reconstructs the indexed objects (keywords recovered from the leaf
    /// inverted files), sorted by id.
    pub fn objects(&self) -> Result<Vec<SpatioTextualObject>> {
        let mut counters = AccessCounters::default();
        let mut out = Vec::with_capacity(self.header.object_count as usize);
        for node in self.nodes()? {
            let NodeBody::Leaf { objects, .. } = &node.body else {
                continue;
            };
            let inv = self.read_postings(&node, &mut counters)?;
            let mut per_slot: Vec<Vec<String>> = vec![Vec::new(); objects.len()];
            for (kw, slots) in inv.table().iter() {
                let name = self
                    .keyword(kw)
                    .ok_or_else(|| Error::corrupt(format!("keyword id {kw} not in dictionary")))?;
                for &s in slots {
                    per_slot[s as usize].push(name.to_string());
                }
            }
            for (entry, kws) in objects.iter().zip(per_slot) {
                out.push(SpatioTextualObject::new(entry.id, entry.location, kws));
            }
        }
        out.sort_by_key(|o| o.id);
        Ok(out)
    }
}
