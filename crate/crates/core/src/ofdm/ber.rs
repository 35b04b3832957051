use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerCount {
    pub errors: u64,
    pub total: u64,
    pub rate: f64,
}

impl BerCount {
    pub fn merge(self, other: BerCount) -> BerCount {
        let errors = self.errors + other.errors;
        let total = self.total + other.total;
        BerCount {
            errors,
            total,
            rate: if total == 0 { 0.0 } else { errors as f64 / total as f64 },
        }
    }
}

pub fn ber(a: &[u8], b: &[u8]) -> Result<BerCount> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let errors = a.iter().zip(b).filter(|(x, y)| (**x & 1) != (**y & 1)).count() as u64;
    let total = a.len() as u64;
    Ok(BerCount {
        errors,
        total,
        rate: if total == 0 { 0.0 } else { errors as f64 / total as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let a = [0u8, 1, 0, 1, 1, 0, 0, 1];
        assert_eq!(ber(&a, &a).unwrap().errors, 0);
        let c: alloc::vec::Vec<u8> = a.iter().map(|b| 1 - b).collect();
        assert_eq!(ber(&a, &c).unwrap().rate, 1.0);
        let mut h = a;
        for b in h.iter_mut().take(4) {
            *b ^= 1;
        }
        assert_eq!(ber(&a, &h).unwrap().rate, 0.5);
        assert!(ber(&a, &a[..3]).is_err());
    }
}
