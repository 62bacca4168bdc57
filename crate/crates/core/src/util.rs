//! Small shared helpers: checksums, memory guard, byte formatting.

use crate::error::{Error, Result};

/// FNV-1a, used for stream derivation and verification checksums.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Running FNV-1a hasher for checksumming large outputs without staging a
/// byte buffer.
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(0xCBF2_9CE4_8422_2325)
    }

    #[inline]
    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }

    pub fn update_u32s(&mut self, vals: &[u32]) {
        for v in vals {
            self.update(&v.to_le_bytes());
        }
    }

    pub fn update_u64s(&mut self, vals: &[u64]) {
        for v in vals {
            self.update(&v.to_le_bytes());
        }
    }

    pub fn update_f32s(&mut self, vals: &[f32]) {
        for v in vals {
            self.update(&v.to_bits().to_le_bytes());
        }
    }

    pub fn update_f64s(&mut self, vals: &[f64]) {
        for v in vals {
            self.update(&v.to_bits().to_le_bytes());
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

pub fn checksum_f32s(vals: &[f32]) -> u64 {
    let mut h = Fnv1a::new();
    h.update_f32s(vals);
    h.finish()
}

pub fn checksum_f64s(vals: &[f64]) -> u64 {
    let mut h = Fnv1a::new();
    h.update_f64s(vals);
    h.finish()
}

pub fn checksum_u32s(vals: &[u32]) -> u64 {
    let mut h = Fnv1a::new();
    h.update_u32s(vals);
    h.finish()
}

pub fn checksum_u64s(vals: &[u64]) -> u64 {
    let mut h = Fnv1a::new();
    h.update_u64s(vals);
    h.finish()
}

/// Best-effort estimate of memory currently available for allocation.
pub fn available_memory_bytes() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("MemAvailable:") {
            let kb: u64 = rest.trim().trim_end_matches(" kB").trim().parse().ok()?;
            return Some(kb * 1024);
        }
    }
    None
}

/// Rejects problem sizes that plainly cannot be allocated, so oversize
/// parameters fail with a clear error instead of an abort.
pub fn ensure_memory(required: u64) -> Result<()> {
    if let Some(available) = available_memory_bytes() {
        // Leave headroom for the rest of the process.
        if required > available.saturating_sub(available / 10) {
            return Err(Error::ResourceExhausted {
                required,
                available,
            });
        }
    }
    Ok(())
}

/// `16384 -> "16kib"`, used for per-sweep-point metric names (fixed width so
/// lexicographic metric ordering matches size ordering).
pub fn size_label(bytes: usize) -> String {
    if bytes.is_multiple_of(1024 * 1024) {
        format!("{:05}mib", bytes / (1024 * 1024))
    } else if bytes.is_multiple_of(1024) {
        format!("{:05}kib", bytes / 1024)
    } else {
        format!("{:08}b", bytes)
    }
}

/// Serializes timing-sensitive tests so they do not contend with each other.
#[cfg(test)]
pub(crate) fn timing_test_guard() -> std::sync::MutexGuard<'static, ()> {
    static GATE: std::sync::Mutex<()> = std::sync::Mutex::new(());
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_known_vector() {
        // Published FNV-1a test vector.
        assert_eq!(fnv1a64(b""), 0xCBF2_9CE4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xAF63_DC4C_8601_EC8C);
    }

    #[test]
    fn incremental_hash_matches_one_shot() {
        let mut h = Fnv1a::new();
        h.update(b"hello ");
        h.update(b"world");
        assert_eq!(h.finish(), fnv1a64(b"hello world"));
    }

    #[test]
    fn oversize_request_is_rejected() {
        let err = ensure_memory(u64::MAX).unwrap_err();
        assert!(matches!(err, Error::ResourceExhausted { .. }));
    }

    #[test]
    fn size_labels_sort_with_size() {
        let labels: Vec<String> = [1024, 16 * 1024, 1024 * 1024, 64 * 1024 * 1024]
            .iter()
            .map(|&b| size_label(b))
            .collect();
        // kib before mib lexicographically, zero padding orders within a unit
        assert_eq!(labels[0], "00001kib");
        assert!(labels[0] < labels[1]);
        assert!(labels[2] < labels[3]);
    }
}
