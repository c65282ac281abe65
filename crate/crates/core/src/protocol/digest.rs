/// Public hash used to detect tampering with the ciphertext.
pub trait MessageDigest {
    fn digest(&self, bits: &[u8]) -> u64;
}

/// Bitwise multiply-xor digest with the 64-bit FNV offset basis and prime.
///
/// `state ← 0xcbf29ce484222325`, then per bit `state ← (state ⊕ b) · 0x100000001b3 mod 2^64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TestDigest;

impl TestDigest {
    pub const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    pub const PRIME: u64 = 0x0000_0100_0000_01b3;
}

impl MessageDigest for TestDigest {
    fn digest(&self, bits: &[u8]) -> u64 {
        bits.iter().fold(Self::OFFSET, |state, &b| {
            (state ^ u64::from(b)).wrapping_mul(Self::PRIME)
        })
    }
}

pub fn test_digest(bits: &[u8]) -> u64 {
    TestDigest.digest(bits)
}

/// Low `width` bits of `value`, most significant first.
pub fn digest_bits(value: u64, width: u32) -> Vec<u8> {
    (0..width).rev().map(|i| ((value >> i) & 1) as u8).collect()
}

/// Inverse of [`digest_bits`].
pub fn bits_to_u64(bits: &[u8]) -> u64 {
    bits.iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1))
}

/// `value` truncated to its low `width` bits.
pub fn truncate(value: u64, width: u32) -> u64 {
    if width >= 64 {
        value
    } else {
        value & ((1u64 << width) - 1)
    }
}
