use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ObjectId, Point, Rect};

use super::page::{Decoder, Encoder};
use super::{KeywordId, PageId};

const KIND_INTERIOR: u8 = 1;
const KIND_LEAF: u8 = 2;
const KIND_POSTINGS: u8 = 3;

/// Keyword → entry-slot lists, stored column-wise and sorted by keyword id.
///
/// Interior nodes use it as the keyword summary of each child; leaf inverted
/// files use it as postings over the leaf's object slots.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeywordTable {
    keywords: Vec<KeywordId>,
    offsets: Vec<u32>,
    slots: Vec<u16>,
}

impl KeywordTable {
    /// Builds the table from per-slot keyword lists.
    pub(crate) fn from_slots<'a, I>(per_slot: I) -> Self
    where
        I: IntoIterator<Item = &'a [KeywordId]>,
    {
        let mut pairs: Vec<(KeywordId, u16)> = per_slot
            .into_iter()
            .enumerate()
            .flat_map(|(slot, kws)| kws.iter().map(move |&k| (k, slot as u16)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut table = KeywordTable {
            keywords: Vec::new(),
            offsets: vec![0],
            slots: Vec::with_capacity(pairs.len()),
        };
        for (kw, slot) in pairs {
            if table.keywords.last() != Some(&kw) {
                if !table.keywords.is_empty() {
                    table.offsets.push(table.slots.len() as u32);
                }
                table.keywords.push(kw);
            }
            table.slots.push(slot);
        }
        if !table.keywords.is_empty() {
            table.offsets.push(table.slots.len() as u32);
        }
        table
    }

    /// Distinct keywords, ascending.
    pub fn keywords(&self) -> &[KeywordId] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Slots containing `keyword`, ascending.
    pub fn slots(&self, keyword: KeywordId) -> Option<&[u16]> {
        let i = self.keywords.binary_search(&keyword).ok()?;
        Some(self.slots_at(i))
    }

    fn slots_at(&self, i: usize) -> &[u16] {
        &self.slots[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (KeywordId, &[u16])> + '_ {
        self.keywords
            .iter()
            .enumerate()
            .map(move |(i, &k)| (k, self.slots_at(i)))
    }

    /// Keywords present at `slot`, ascending.
    pub fn keywords_of(&self, slot: u16) -> Vec<KeywordId> {
        self.iter()
            .filter(|(_, slots)| slots.binary_search(&slot).is_ok())
            .map(|(k, _)| k)
            .collect()
    }

    fn validate(&self, entry_count: usize) -> Result<()> {
        let sorted = self.keywords.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.slots.iter().all(|&s| (s as usize) < entry_count);
        if !sorted || !in_range {
            return Err(Error::corrupt("keyword table is malformed"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChildEntry {
    pub page_id: PageId,
    pub mbr: Rect,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeafEntry {
    pub id: ObjectId,
    pub location: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeBody {
    Interior {
        children: Vec<ChildEntry>,
        /// Keyword summaries of the children.
        keywords: KeywordTable,
    },
    Leaf {
        objects: Vec<LeafEntry>,
        postings_page: PageId,
    },
}

/// One IR-tree node as read from its page chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub page_id: PageId,
    /// 0 for leaves.
    pub level: u16,
    pub mbr: Rect,
    pub body: NodeBody,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.body, NodeBody::Leaf { .. })
    }

    pub fn entry_count(&self) -> usize {
        match &self.body {
            NodeBody::Interior { children, .. } => children.len(),
            NodeBody::Leaf { objects, .. } => objects.len(),
        }
    }

    /// Union of the children's keywords; `None` for leaves, whose summary
    /// lives in the inverted file.
    pub fn keyword_summary(&self) -> Option<&[KeywordId]> {
        match &self.body {
            NodeBody::Interior { keywords, .. } => Some(keywords.keywords()),
            NodeBody::Leaf { .. } => None,
        }
    }

    pub(crate) fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::default();
        let kind = if self.is_leaf() { KIND_LEAF } else { KIND_INTERIOR };
        e.u8(kind);
        e.u16(self.level);
        e.u16(self.entry_count() as u16);
        encode_rect(&mut e, &self.mbr);
        match &self.body {
            NodeBody::Interior { children, keywords } => {
                for c in children {
                    e.u32(c.page_id);
                    encode_rect(&mut e, &c.mbr);
                }
                // summaries as keyword -> bitmask over child slots
                let mask_len = children.len().div_ceil(8);
                e.u32(keywords.len() as u32);
                for (kw, slots) in keywords.iter() {
                    e.u32(kw);
                    let mut mask = vec![0u8; mask_len];
                    for &s in slots {
                        mask[s as usize / 8] |= 1 << (s % 8);
                    }
                    e.bytes(&mask);
                }
            }
            NodeBody::Leaf {
                objects,
                postings_page,
            } => {
                for o in objects {
                    e.u64(o.id);
                    e.f64(o.location.x);
                    e.f64(o.location.y);
                }
                e.u32(*postings_page);
            }
        }
        e.finish()
    }

    pub(crate) fn decode(page_id: PageId, payload: &[u8]) -> Result<Node> {
        let mut d = Decoder::new(payload);
        let kind = d.u8()?;
        let level = d.u16()?;
        let count = d.u16()? as usize;
        let mbr = decode_rect(&mut d)?;
        if count == 0 {
            return Err(Error::corrupt(format!("node at page {page_id} has no entries")));
        }
        let body = match kind {
            KIND_INTERIOR => {
                let mut children = Vec::with_capacity(count);
                for _ in 0..count {
                    let page_id = d.u32()?;
                    let mbr = decode_rect(&mut d)?;
                    children.push(ChildEntry { page_id, mbr });
                }
                let mask_len = count.div_ceil(8);
                let kw_count = d.u32()? as usize;
                let mut per_slot: Vec<Vec<KeywordId>> = vec![Vec::new(); count];
                for _ in 0..kw_count {
                    let kw = d.u32()?;
                    let mask = d.take(mask_len)?;
                    for (slot, list) in per_slot.iter_mut().enumerate() {
                        if mask[slot / 8] & (1 << (slot % 8)) != 0 {
                            list.push(kw);
                        }
                    }
                }
                let keywords = KeywordTable::from_slots(per_slot.iter().map(Vec::as_slice));
                if keywords.len() != kw_count {
                    return Err(Error::corrupt(format!("node at page {page_id} has unsorted keywords")));
                }
                NodeBody::Interior { children, keywords }
            }
            KIND_LEAF => {
                let mut objects = Vec::with_capacity(count);
                for _ in 0..count {
                    let id = d.u64()?;
                    let x = d.f64()?;
                    let y = d.f64()?;
                    objects.push(LeafEntry {
                        id,
                        location: Point::new(x, y),
                    });
                }
                NodeBody::Leaf {
                    objects,
                    postings_page: d.u32()?,
                }
            }
            other => {
                return Err(Error::corrupt(format!(
                    "page {page_id} holds record kind {other}, expected a tree node"
                )))
            }
        };
        if !d.is_empty() {
            return Err(Error::corrupt(format!("trailing bytes in node at page {page_id}")));
        }
        Ok(Node {
            page_id,
            level,
            mbr,
            body,
        })
    }
}

/// Keyword postings of one leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafInvertedFile {
    pub page_id: PageId,
    pub(crate) table: KeywordTable,
    pub(crate) object_ids: Vec<ObjectId>,
}

impl LeafInvertedFile {
    /// Postings over the leaf's entry slots.
    pub fn table(&self) -> &KeywordTable {
        &self.table
    }

    /// Ids of the leaf objects carrying `keyword`.
    pub fn postings(&self, keyword: KeywordId) -> Vec<ObjectId> {
        self.table
            .slots(keyword)
            .map(|slots| slots.iter().map(|&s| self.object_ids[s as usize]).collect())
            .unwrap_or_default()
    }

    /// The leaf's keyword summary: every keyword with a posting list.
    pub fn keywords(&self) -> &[KeywordId] {
        self.table.keywords()
    }

    pub(crate) fn encode(table: &KeywordTable, entry_count: usize) -> Vec<u8> {
        let mut e = Encoder::default();
        e.u8(KIND_POSTINGS);
        e.u16(entry_count as u16);
        e.u32(table.len() as u32);
        for (kw, slots) in table.iter() {
            e.u32(kw);
            e.u16(slots.len() as u16);
            for &s in slots {
                e.u16(s);
            }
        }
        e.finish()
    }

    pub(crate) fn decode(page_id: PageId, payload: &[u8], leaf: &[LeafEntry]) -> Result<Self> {
        let mut d = Decoder::new(payload);
        if d.u8()? != KIND_POSTINGS {
            return Err(Error::corrupt(format!("page {page_id} is not an inverted file")));
        }
        let count = d.u16()? as usize;
        if count != leaf.len() {
            return Err(Error::corrupt(format!(
                "inverted file at page {page_id} covers {count} objects, leaf has {}",
                leaf.len()
            )));
        }
        let kw_count = d.u32()? as usize;
        let mut table = KeywordTable {
            keywords: Vec::with_capacity(kw_count),
            offsets: Vec::with_capacity(kw_count + 1),
            slots: Vec::new(),
        };
        table.offsets.push(0);
        for _ in 0..kw_count {
            table.keywords.push(d.u32()?);
            let len = d.u16()? as usize;
            for _ in 0..len {
                table.slots.push(d.u16()?);
            }
            table.offsets.push(table.slots.len() as u32);
        }
        if kw_count == 0 {
            table.offsets.clear();
        }
        if !d.is_empty() {
            return Err(Error::corrupt(format!("trailing bytes in inverted file at page {page_id}")));
        }
        table.validate(count)?;
        Ok(LeafInvertedFile {
            page_id,
            table,
            object_ids: leaf.iter().map(|o| o.id).collect(),
        })
    }
}

fn encode_rect(e: &mut Encoder, r: &Rect) {
    e.f64(r.min.x);
    e.f64(r.min.y);
    e.f64(r.max.x);
    e.f64(r.max.y);
}

fn decode_rect(d: &mut Decoder<'_>) -> Result<Rect> {
    let min = Point::new(d.f64()?, d.f64()?);
    let max = Point::new(d.f64()?, d.f64()?);
    Rect::new(min, max).map_err(|_| Error::corrupt("stored rectangle is malformed"))
}
