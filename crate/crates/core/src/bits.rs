//! Exact-length bit strings.
//!
//! Carrier type between weight encoding, the substitution phase, and the
//! randomness tests. Bits are stored packed; the length is tracked exactly so
//! there is no padding ambiguity. Byte conversions are little-endian at the
//! bit level: bit `i` of the string is bit `i % 8` of byte `i / 8`.

#[derive(Clone, PartialEq, Eq, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> BitString {
        BitString::default()
    }

    pub fn with_capacity(bits: usize) -> BitString {
        BitString {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    /// Parses a string of ASCII `0`/`1` characters; other characters are ignored.
    pub fn from_ascii(s: &str) -> BitString {
        let mut bits = BitString::new();
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => {}
            }
        }
        bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        let word = self.len / 64;
        if word == self.words.len() {
            self.words.push(0);
        }
        if bit {
            self.words[word] |= 1u64 << (self.len % 64);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, least-significant first.
    pub fn push_low_bits(&mut self, value: u64, width: u32) {
        for i in 0..width {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for bit in other.iter() {
            self.push(bit);
        }
    }

    pub fn ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Copies `len` bits starting at `start` into a new string.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = BitString::with_capacity(len);
        for i in start..start + len {
            out.push(self.get(i));
        }
        out
    }

    /// Packs into bytes LSB-first; the final partial byte is zero-padded.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for (i, word) in self.words.iter().enumerate() {
            for (j, byte) in word.to_le_bytes().iter().enumerate() {
                let idx = i * 8 + j;
                if idx < bytes.len() {
                    bytes[idx] = *byte;
                }
            }
        }
        if self.len % 8 != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= (1u8 << (self.len % 8)) - 1;
            }
        }
        bytes
    }

    /// Unpacks `len` bits from LSB-first bytes.
    pub fn from_le_bytes(bytes: &[u8], len: usize) -> BitString {
        assert!(len <= bytes.len() * 8, "length exceeds available bytes");
        let mut bits = BitString::with_capacity(len);
        for i in 0..len {
            bits.push((bytes[i / 8] >> (i % 8)) & 1 == 1);
        }
        bits
    }

    /// One byte per bit (`0` or `1`), in order. Convenient for the test battery.
    pub fn to_bit_bytes(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let preview: String = self.iter().take(32).map(|b| if b { '1' } else { '0' }).collect();
        if self.len > 32 {
            write!(f, "BitString[{}]({preview}..)", self.len)
        } else {
            write!(f, "BitString[{}]({preview})", self.len)
        }
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        let mut bits = BitString::new();
        for b in iter {
            bits.push(b);
        }
        bits
    }
}
