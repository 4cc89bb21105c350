//! Fixed-size pages and the chained records stored in them.
//!
//! Every data page starts with a 12-byte header:
//!
//! ```text
//! [0..4)   crc32 of bytes [4..page_size)
//! [4..8)   next page of the same record, 0 when this is the last one
//! [8..12)  payload bytes used in this page
//! ```
//!
//! Page 0 holds the index header and never belongs to a record, so `0` is a
//! safe end-of-chain marker.

use crate::error::{Error, Result};

use super::PageId;

pub(crate) const PAGE_HEADER_LEN: usize = 12;

/// Page image under construction. Page 0 is reserved for the index header.
pub(crate) struct PageImage {
    page_size: usize,
    bytes: Vec<u8>,
}

impl PageImage {
    pub(crate) fn new(page_size: usize) -> Self {
        PageImage {
            page_size,
            bytes: vec![0; page_size],
        }
    }

    pub(crate) fn page_count(&self) -> u32 {
        (self.bytes.len() / self.page_size) as u32
    }

    pub(crate) fn next_page(&self) -> PageId {
        self.page_count()
    }

    /// Appends `payload` as a chain of consecutive pages and returns the first.
    pub(crate) fn write_record(&mut self, payload: &[u8]) -> PageId {
        let capacity = self.page_size - PAGE_HEADER_LEN;
        let first = self.next_page();
        let chunks: Vec<&[u8]> = if payload.is_empty() {
            vec![&[][..]]
        } else {
            payload.chunks(capacity).collect()
        };
        let count = chunks.len();
        for (i, chunk) in chunks.into_iter().enumerate() {
            let page_id = self.next_page();
            let next = if i + 1 < count { page_id + 1 } else { 0 };
            let mut page = vec![0u8; self.page_size];
            page[4..8].copy_from_slice(&next.to_le_bytes());
            page[8..12].copy_from_slice(&(chunk.len() as u32).to_le_bytes());
            page[PAGE_HEADER_LEN..PAGE_HEADER_LEN + chunk.len()].copy_from_slice(chunk);
            let crc = crc32fast::hash(&page[4..]);
            page[0..4].copy_from_slice(&crc.to_le_bytes());
            self.bytes.extend_from_slice(&page);
        }
        first
    }

    pub(crate) fn set_header(&mut self, header: &[u8]) {
        self.bytes[..header.len()].copy_from_slice(header);
    }

    pub(crate) fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Validates one raw page and returns `(next, payload)`.
pub(crate) fn split_page(page_id: PageId, page: &[u8]) -> Result<(PageId, &[u8])> {
    let stored = u32::from_le_bytes(page[0..4].try_into().unwrap());
    if crc32fast::hash(&page[4..]) != stored {
        return Err(Error::Checksum(page_id));
    }
    let next = u32::from_le_bytes(page[4..8].try_into().unwrap());
    let len = u32::from_le_bytes(page[8..12].try_into().unwrap()) as usize;
    if PAGE_HEADER_LEN + len > page.len() {
        return Err(Error::corrupt(format!("page {page_id} payload length {len} overflows page")));
    }
    Ok((next, &page[PAGE_HEADER_LEN..PAGE_HEADER_LEN + len]))
}

/// Little-endian byte sink.
#[derive(Default)]
pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub(crate) fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
    pub(crate) fn len(&self) -> usize {
        self.buf.len()
    }
    pub(crate) fn as_slice(&self) -> &[u8] {
        &self.buf
    }
    pub(crate) fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Little-endian reader that reports truncation as corruption.
pub(crate) struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::corrupt(format!(
                "record truncated: need {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    pub(crate) fn u16(&mut self) -> Result<u16> {
        self.array().map(u16::from_le_bytes)
    }
    pub(crate) fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }
    pub(crate) fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }
    pub(crate) fn f64(&mut self) -> Result<f64> {
        self.array().map(f64::from_le_bytes)
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_chain_across_pages() {
        let mut image = PageImage::new(64);
        let payload: Vec<u8> = (0..200u8).collect();
        let first = image.write_record(&payload);
        assert_eq!(first, 1);
        // 52 payload bytes per page
        assert_eq!(image.page_count(), 1 + 4);
        let bytes = image.into_bytes();
        let mut out = Vec::new();
        let mut page = first;
        while page != 0 {
            let raw = &bytes[page as usize * 64..(page as usize + 1) * 64];
            let (next, chunk) = split_page(page, raw).unwrap();
            out.extend_from_slice(chunk);
            page = next;
        }
        assert_eq!(out, payload);
    }

    #[test]
    fn checksum_detects_flipped_byte() {
        let mut image = PageImage::new(64);
        image.write_record(b"hello");
        let mut bytes = image.into_bytes();
        bytes[64 + 20] ^= 0xff;
        assert!(matches!(split_page(1, &bytes[64..128]), Err(Error::Checksum(1))));
    }

    #[test]
    fn decoder_reports_truncation() {
        let mut d = Decoder::new(&[1, 2, 3]);
        assert_eq!(d.u16().unwrap(), 0x0201);
        assert!(d.u32().is_err());
    }
}
