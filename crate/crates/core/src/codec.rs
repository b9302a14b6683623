//! Lossless range coding of integer symbol streams under model-derived
//! frequency tables.
//!
//! A 32-bit-state range coder with 16-bit probability precision and
//! byte-wise renormalization (carry handling as in the classic LZMA
//! encoder). Tables quantize unit-bin masses to a fixed total of 2¹⁶ by
//! largest-remainder rounding with every bucket floored at frequency 1;
//! two extra buckets catch symbols outside `[s_min, s_max]`, which are
//! escaped and followed by the raw 32-bit value, so unbounded inputs never
//! break losslessness.
//!
//! The file-level [`Bitstream`] is self-describing: its header carries the
//! model parameters, so a decoder rebuilds the exact table from the header
//! alone.

use crate::models::{EntropyModel, ModelError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probability resolution of the frequency tables.
pub const PRECISION_BITS: u32 = 16;
/// Fixed total frequency, `2^PRECISION_BITS`.
pub const TOTAL_FREQ: u32 = 1 << PRECISION_BITS;

const RENORM_TOP: u32 = 1 << 24;
/// Bytes of coder overhead: one leading carry-absorber plus five flush
/// bytes.
pub const FLUSH_OVERHEAD_BYTES: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("invalid symbol bounds: {0}")]
    InvalidBounds(&'static str),
    #[error("stream has {streams} symbols but {tables} tables")]
    TableMismatch { streams: usize, tables: usize },
    #[error("corrupt bitstream: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Integer-quantized CDF over `[s_min, s_max]` plus two tail-escape
/// buckets, in bucket order `[below, s_min ..= s_max, above]`.
///
/// `cum[i]` is the cumulative frequency through bucket `i` (the leading 0
/// is implicit), strictly increasing with `cum.last() == 2^16`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    s_min: i32,
    s_max: i32,
    cum: Vec<u32>,
}

impl FrequencyTable {
    /// Quantize a model's bin masses into coder frequencies.
    ///
    /// Bin centers follow the model's quantization offset (zero-center for
    /// single-mode families), so symbol `k` covers
    /// `[offset + k − 1/2, offset + k + 1/2)`.
    pub fn build(m: &EntropyModel<f64>, s_min: i32, s_max: i32) -> Result<Self, CodecError> {
        if s_min > 0 || s_max < 0 {
            return Err(CodecError::InvalidBounds("need s_min <= 0 <= s_max"));
        }
        m.validate()?;
        let alphabet = (s_max as i64 - s_min as i64 + 1) as usize;
        let n_buckets = alphabet + 2;
        if n_buckets as u64 > TOTAL_FREQ as u64 / 4 {
            return Err(CodecError::InvalidBounds(
                "alphabet too large for 16-bit precision",
            ));
        }

        let offset = m.quantization_offset();
        let mut masses = Vec::with_capacity(n_buckets);
        masses.push(m.cdf(offset + s_min as f64 - 0.5).max(0.0));
        for k in s_min..=s_max {
            masses.push(m.bin_mass(offset + k as f64));
        }
        masses.push((1.0 - m.cdf(offset + s_max as f64 + 0.5)).max(0.0));

        let freqs = largest_remainder(&masses);
        let mut cum = Vec::with_capacity(n_buckets);
        let mut acc = 0u32;
        for f in freqs {
            acc += f;
            cum.push(acc);
        }
        debug_assert_eq!(*cum.last().unwrap(), TOTAL_FREQ);
        Ok(Self { s_min, s_max, cum })
    }

    pub fn s_min(&self) -> i32 {
        self.s_min
    }

    pub fn s_max(&self) -> i32 {
        self.s_max
    }

    fn n_buckets(&self) -> usize {
        self.cum.len()
    }

    fn bucket_of_symbol(&self, s: i32) -> usize {
        if s < self.s_min {
            0
        } else if s > self.s_max {
            self.n_buckets() - 1
        } else {
            (s as i64 - self.s_min as i64 + 1) as usize
        }
    }

    fn span(&self, bucket: usize) -> (u32, u32) {
        let lo = if bucket == 0 { 0 } else { self.cum[bucket - 1] };
        (lo, self.cum[bucket] - lo)
    }

    /// Frequency assigned to symbol `s` (tail buckets for out-of-range).
    pub fn freq(&self, s: i32) -> u32 {
        self.span(self.bucket_of_symbol(s)).1
    }

    fn find_bucket(&self, dv: u32) -> usize {
        self.cum.partition_point(|&c| c <= dv)
    }
}

/// Largest-remainder quantization to a total of exactly [`TOTAL_FREQ`],
/// every entry at least 1. Deterministic: ties broken by index.
fn largest_remainder(masses: &[f64]) -> Vec<u32> {
    let n = masses.len();
    let mut freqs = vec![0u32; n];
    let mut remainders = vec![0.0f64; n];
    let mut total: i64 = 0;
    for i in 0..n {
        let ideal = masses[i].max(0.0) * TOTAL_FREQ as f64;
        let base = ideal.floor();
        freqs[i] = (base as u32).max(1);
        remainders[i] = ideal - base;
        total += freqs[i] as i64;
    }
    let mut order: Vec<usize> = (0..n).collect();
    if total < TOTAL_FREQ as i64 {
        order.sort_by(|&a, &b| {
            remainders[b]
                .partial_cmp(&remainders[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut deficit = TOTAL_FREQ as i64 - total;
        while deficit > 0 {
            for &i in &order {
                freqs[i] += 1;
                deficit -= 1;
                if deficit == 0 {
                    break;
                }
            }
        }
    } else if total > TOTAL_FREQ as i64 {
        order.sort_by(|&a, &b| {
            remainders[a]
                .partial_cmp(&remainders[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut excess = total - TOTAL_FREQ as i64;
        while excess > 0 {
            let mut changed = false;
            for &i in &order {
                if freqs[i] > 1 {
                    freqs[i] -= 1;
                    excess -= 1;
                    changed = true;
                    if excess == 0 {
                        break;
                    }
                }
            }
            debug_assert!(changed, "cannot shed excess below the per-bucket floor");
            if !changed {
                break;
            }
        }
    }
    freqs
}

// ---------------------------------------------------------------------
// Range coder primitives
// ---------------------------------------------------------------------

struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn encode(&mut self, cum_lo: u32, freq: u32) {
        debug_assert!(freq > 0 && cum_lo + freq <= TOTAL_FREQ);
        let r = self.range >> PRECISION_BITS;
        self.low += r as u64 * cum_lo as u64;
        self.range = r * freq;
        while self.range < RENORM_TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Encode one raw byte with a uniform 8-bit model.
    fn encode_byte(&mut self, b: u8) {
        self.encode(b as u32 * 256, 256);
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    fn new(buf: &'a [u8]) -> Self {
        // The leading byte only absorbs encoder carries; its 2^32 weight is
        // congruent to 0 in the 32-bit window, so it is skipped.
        let mut d = Self {
            code: 0,
            range: u32::MAX,
            buf,
            pos: 1,
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte() as u32;
        }
        d
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.buf.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    fn renorm(&mut self) {
        while self.range < RENORM_TOP {
            self.code = (self.code << 8) | self.next_byte() as u32;
            self.range <<= 8;
        }
    }

    fn decode(&mut self, table: &FrequencyTable) -> usize {
        let r = self.range >> PRECISION_BITS;
        let dv = (self.code / r).min(TOTAL_FREQ - 1);
        let bucket = table.find_bucket(dv);
        let (cum_lo, freq) = table.span(bucket);
        self.code = self.code.wrapping_sub(r * cum_lo);
        self.range = r * freq;
        self.renorm();
        bucket
    }

    fn decode_byte(&mut self) -> u8 {
        let r = self.range >> PRECISION_BITS;
        let dv = (self.code / r).min(TOTAL_FREQ - 1);
        let byte = (dv >> 8) as u8;
        self.code = self.code.wrapping_sub(r * (byte as u32 * 256));
        self.range = r * 256;
        self.renorm();
        byte
    }
}

// ---------------------------------------------------------------------
// Stream encode / decode
// ---------------------------------------------------------------------

fn table_for(
    tables: &[FrequencyTable],
    i: usize,
    count: usize,
) -> Result<&FrequencyTable, CodecError> {
    match tables.len() {
        1 => Ok(&tables[0]),
        n if n == count => Ok(&tables[i]),
        n => Err(CodecError::TableMismatch {
            streams: count,
            tables: n,
        }),
    }
}

/// Encode a symbol stream. `tables` holds either one shared table or one
/// table per symbol. An empty stream encodes to an empty payload.
pub fn encode(symbols: &[i32], tables: &[FrequencyTable]) -> Result<Vec<u8>, CodecError> {
    if symbols.is_empty() {
        return Ok(Vec::new());
    }
    if tables.is_empty() {
        return Err(CodecError::TableMismatch {
            streams: symbols.len(),
            tables: 0,
        });
    }
    let mut enc = RangeEncoder::new();
    for (i, &s) in symbols.iter().enumerate() {
        let table = table_for(tables, i, symbols.len())?;
        let bucket = table.bucket_of_symbol(s);
        let (cum_lo, freq) = table.span(bucket);
        enc.encode(cum_lo, freq);
        if s < table.s_min || s > table.s_max {
            for b in s.to_le_bytes() {
                enc.encode_byte(b);
            }
        }
    }
    Ok(enc.finish())
}

/// Decode `count` symbols from a payload produced by [`encode`] with the
/// same tables.
pub fn decode(
    payload: &[u8],
    tables: &[FrequencyTable],
    count: usize,
) -> Result<Vec<i32>, CodecError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if tables.is_empty() {
        return Err(CodecError::TableMismatch {
            streams: count,
            tables: 0,
        });
    }
    if payload.len() < FLUSH_OVERHEAD_BYTES - 1 {
        return Err(CodecError::Corrupt("payload shorter than coder flush"));
    }
    let mut dec = RangeDecoder::new(payload);
    let mut symbols = Vec::with_capacity(count);
    for i in 0..count {
        let table = table_for(tables, i, count)?;
        let bucket = dec.decode(table);
        let s = if bucket == 0 || bucket == table.n_buckets() - 1 {
            let mut raw = [0u8; 4];
            for b in &mut raw {
                *b = dec.decode_byte();
            }
            i32::from_le_bytes(raw)
        } else {
            table.s_min + (bucket as i64 - 1) as i32
        };
        symbols.push(s);
    }
    Ok(symbols)
}

/// Ideal table-quantized code length in bits: `Σ −log₂(freqᵢ/2¹⁶)`, plus
/// 32 bits for each escaped symbol.
pub fn ideal_table_bits(symbols: &[i32], tables: &[FrequencyTable]) -> Result<f64, CodecError> {
    let mut bits = 0.0;
    for (i, &s) in symbols.iter().enumerate() {
        let table = table_for(tables, i, symbols.len())?;
        bits -= (table.freq(s) as f64 / TOTAL_FREQ as f64).log2();
        if s < table.s_min || s > table.s_max {
            bits += 32.0;
        }
    }
    Ok(bits)
}

// ---------------------------------------------------------------------
// Self-describing bitstream container
// ---------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"GGMC";
const VERSION: u8 = 1;

/// A coded stream plus everything needed to decode it.
///
/// Byte layout (little-endian): magic `"GGMC"`, version u8 = 1, family tag
/// u8, symbol count u32, s_min i32, s_max i32, parameter block length u32,
/// JSON parameter block, payload length u32, payload, CRC32 u32 over all
/// preceding bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bitstream {
    pub model: EntropyModel<f64>,
    pub s_min: i32,
    pub s_max: i32,
    pub count: u32,
    pub payload: Vec<u8>,
}

impl Bitstream {
    /// Encode `symbols` under `model` with one shared table.
    pub fn encode_stream(
        model: EntropyModel<f64>,
        symbols: &[i32],
        s_min: i32,
        s_max: i32,
    ) -> Result<Self, CodecError> {
        let table = FrequencyTable::build(&model, s_min, s_max)?;
        let payload = encode(symbols, std::slice::from_ref(&table))?;
        Ok(Self {
            model,
            s_min,
            s_max,
            count: symbols.len() as u32,
            payload,
        })
    }

    /// Rebuild the table from the header and decode the payload. The
    /// result always holds exactly `count` symbols.
    pub fn decode_stream(&self) -> Result<Vec<i32>, CodecError> {
        let table = FrequencyTable::build(&self.model, self.s_min, self.s_max)?;
        let symbols = decode(
            &self.payload,
            std::slice::from_ref(&table),
            self.count as usize,
        )?;
        debug_assert_eq!(symbols.len(), self.count as usize);
        Ok(symbols)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let params = serde_json::to_vec(&self.model).expect("model serializes");
        let mut out = Vec::with_capacity(27 + params.len() + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.model.family_tag());
        out.extend_from_slice(&self.count.to_le_bytes());
        out.extend_from_slice(&self.s_min.to_le_bytes());
        out.extend_from_slice(&self.s_max.to_le_bytes());
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        out.extend_from_slice(&params);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < 26 {
            return Err(CodecError::Corrupt("truncated header"));
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(CodecError::Corrupt("checksum mismatch"));
        }
        if &body[0..4] != MAGIC {
            return Err(CodecError::Corrupt("bad magic"));
        }
        if body[4] != VERSION {
            return Err(CodecError::Corrupt("unsupported version"));
        }
        let family_tag = body[5];
        let mut pos = 6usize;
        let mut take = |n: usize| -> Result<&[u8], CodecError> {
            let slice = body
                .get(pos..pos + n)
                .ok_or(CodecError::Corrupt("truncated field"))?;
            pos += n;
            Ok(slice)
        };
        let count = u32::from_le_bytes(take(4)?.try_into().unwrap());
        let s_min = i32::from_le_bytes(take(4)?.try_into().unwrap());
        let s_max = i32::from_le_bytes(take(4)?.try_into().unwrap());
        let params_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let params = take(params_len)?;
        let model: EntropyModel<f64> = serde_json::from_slice(params)
            .map_err(|_| CodecError::Corrupt("unparseable parameter block"))?;
        if model.family_tag() != family_tag {
            return Err(CodecError::Corrupt("family tag disagrees with parameters"));
        }
        let payload_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let payload = take(payload_len)?.to_vec();
        if pos != body.len() {
            return Err(CodecError::Corrupt("trailing bytes"));
        }
        Ok(Self {
            model,
            s_min,
            s_max,
            count,
            payload,
        })
    }
}
