//! Fixed-length byte-string keys: comparison, generation, file I/O.
//!
//! A [`KeyBuffer`] is a dense `n * key_len` byte array. Keys are compared
//! bytewise lexicographically over their full length (memcmp semantics).
//! All keys within one buffer share the same length.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Magic bytes of the binary key-file format.
pub const KEYFILE_MAGIC: &[u8; 4] = b"OVSK";
/// Current key-file format version.
pub const KEYFILE_VERSION: u16 = 1;

/// Bytewise lexicographic comparison of two equal-length keys.
///
/// Length mismatch is a usage error and panics.
#[inline]
pub fn compare(a: &[u8], b: &[u8]) -> Ordering {
    assert_eq!(a.len(), b.len(), "key length mismatch");
    a.cmp(b)
}

/// Dense array of `n` fixed-length keys.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyBuffer {
    data: Vec<u8>,
    key_len: usize,
}

impl KeyBuffer {
    /// Wraps raw bytes; `data.len()` must be a multiple of `key_len`.
    pub fn from_bytes(data: Vec<u8>, key_len: usize) -> Result<Self> {
        if key_len == 0 {
            return Err(Error::InvalidParameter("key length must be >= 1".into()));
        }
        if data.len() % key_len != 0 {
            return Err(Error::Format(format!(
                "buffer of {} bytes is not a multiple of key length {}",
                data.len(),
                key_len
            )));
        }
        Ok(Self { data, key_len })
    }

    pub fn empty(key_len: usize) -> Self {
        Self { data: Vec::new(), key_len }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.key_len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn key_len(&self) -> usize {
        self.key_len
    }

    /// The `i`-th key.
    #[inline]
    pub fn key(&self, i: usize) -> &[u8] {
        &self.data[i * self.key_len..(i + 1) * self.key_len]
    }

    #[inline]
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    /// Compares the keys at positions `i` and `j`.
    #[inline]
    pub fn cmp_keys(&self, i: usize, j: usize) -> Ordering {
        self.key(i).cmp(self.key(j))
    }

    /// Gathers the keys named by `order` into a fresh buffer.
    pub fn gather(&self, order: &[u32]) -> KeyBuffer {
        let mut data = Vec::with_capacity(order.len() * self.key_len);
        for &i in order {
            data.extend_from_slice(self.key(i as usize));
        }
        KeyBuffer { data, key_len: self.key_len }
    }

    /// Order-independent 64-bit multiset hash of all keys.
    ///
    /// Equal multisets of keys hash equal regardless of order; used by the
    /// permutation checks in verification.
    pub fn multiset_hash(&self) -> u64 {
        let mut acc = 0u64;
        for i in 0..self.len() {
            acc = acc.wrapping_add(fnv1a(self.key(i)));
        }
        acc
    }

    /// True iff keys are nondecreasing; otherwise the first offending index.
    pub fn first_descent(&self) -> Option<usize> {
        (1..self.len()).find(|&i| self.cmp_keys(i - 1, i) == Ordering::Greater)
    }
}

impl std::fmt::Debug for KeyBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KeyBuffer {{ n: {}, key_len: {} }}", self.len(), self.key_len)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Input distributions for benchmark generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// Every byte i.i.d. uniform on [0, 255].
    UniformBytes,
    /// Keys drawn uniformly from `d` random distinct-ish values.
    FewDistinct(u32),
    /// Uniform keys, then sorted ascending.
    Sorted,
    /// Uniform keys, then sorted descending.
    ReverseSorted,
    /// One random key repeated n times.
    Constant,
}

/// Reproducible generation request.
#[derive(Clone, Copy, Debug)]
pub struct KeyGenSpec {
    pub n: usize,
    pub key_len: usize,
    pub distribution: Distribution,
    pub seed: u64,
}

/// Generates a buffer per the spec; identical (spec, seed) pairs produce
/// bit-identical buffers.
pub fn generate(spec: &KeyGenSpec) -> Result<KeyBuffer> {
    if spec.key_len == 0 {
        return Err(Error::InvalidParameter("key length must be >= 1".into()));
    }
    let bytes = spec
        .n
        .checked_mul(spec.key_len)
        .ok_or_else(|| Error::Capacity("n * key_len overflows".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = vec![0u8; bytes];
    match spec.distribution {
        Distribution::UniformBytes => rng.fill_bytes(&mut data),
        Distribution::FewDistinct(d) => {
            if d == 0 {
                return Err(Error::InvalidParameter("few-distinct requires d >= 1".into()));
            }
            let mut pool = vec![0u8; d as usize * spec.key_len];
            rng.fill_bytes(&mut pool);
            for i in 0..spec.n {
                let pick = rng.gen_range(0..d) as usize;
                data[i * spec.key_len..(i + 1) * spec.key_len]
                    .copy_from_slice(&pool[pick * spec.key_len..(pick + 1) * spec.key_len]);
            }
        }
        Distribution::Sorted | Distribution::ReverseSorted => {
            rng.fill_bytes(&mut data);
            let mut buf = KeyBuffer { data, key_len: spec.key_len };
            let mut order: Vec<u32> = (0..spec.n as u32).collect();
            order.sort_unstable_by(|&a, &b| buf.cmp_keys(a as usize, b as usize));
            if spec.distribution == Distribution::ReverseSorted {
                order.reverse();
            }
            buf = buf.gather(&order);
            return Ok(buf);
        }
        Distribution::Constant => {
            let mut one = vec![0u8; spec.key_len];
            rng.fill_bytes(&mut one);
            for chunk in data.chunks_exact_mut(spec.key_len) {
                chunk.copy_from_slice(&one);
            }
        }
    }
    Ok(KeyBuffer { data, key_len: spec.key_len })
}

/// Boundaries of the baseline split of `n` keys into `p` contiguous
/// sequences: the first `n % p` sequences hold `ceil(n/p)` keys, the rest
/// `floor(n/p)`. Returns `p + 1` offsets.
pub fn split_boundaries(n: usize, p: usize) -> Vec<usize> {
    assert!(p >= 1);
    let base = n / p;
    let extra = n % p;
    let mut bounds = Vec::with_capacity(p + 1);
    let mut off = 0;
    bounds.push(0);
    for k in 0..p {
        off += base + usize::from(k < extra);
        bounds.push(off);
    }
    bounds
}

/// Writes `buf` in the binary key-file format:
/// 16-byte header (magic "OVSK", version u16, key_len u16, n u64, all
/// little-endian) followed by `n * key_len` raw key bytes.
pub fn write_keyfile(buf: &KeyBuffer, path: &Path) -> Result<()> {
    if buf.key_len() > u16::MAX as usize {
        return Err(Error::Format(format!("key length {} exceeds format limit", buf.key_len())));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(KEYFILE_MAGIC)?;
    w.write_all(&KEYFILE_VERSION.to_le_bytes())?;
    w.write_all(&(buf.key_len() as u16).to_le_bytes())?;
    w.write_all(&(buf.len() as u64).to_le_bytes())?;
    w.write_all(buf.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Reads a key file written by [`write_keyfile`].
pub fn read_keyfile(path: &Path) -> Result<KeyBuffer> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &header[0..4] != KEYFILE_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != KEYFILE_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let key_len = u16::from_le_bytes([header[6], header[7]]) as usize;
    if key_len == 0 {
        return Err(Error::Format("key length 0".into()));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() != n * key_len {
        return Err(Error::Format(format!(
            "payload of {} bytes, expected {} ({} keys of {} bytes)",
            data.len(),
            n * key_len,
            n,
            key_len
        )));
    }
    KeyBuffer::from_bytes(data, key_len)
}
