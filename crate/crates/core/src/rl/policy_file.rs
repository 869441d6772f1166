//! Versioned binary policy files.
//!
//! Layout (little endian):
//!
//! ```text
//! magic     8 bytes  "ORBQPOL\0"
//! version   u32
//! config    32 bytes SHA-256 of the run configuration that produced the policy
//! hyper     u32 length + UTF-8 JSON of the hyperparameters
//! layers    u32 count, then one u32 width per layer
//! params    u64 count, then f64 values
//! ```

use super::network::PolicyParams;
use super::RlHyperParams;
use crate::error::{Error, Result};

pub const POLICY_MAGIC: &[u8; 8] = b"ORBQPOL\0";
pub const POLICY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    pub config_hash: [u8; 32],
    pub params: PolicyParams,
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::PolicyFormat("truncated file".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

impl PolicyFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let hyper = serde_json::to_vec(&self.params.hyper).expect("hyperparameters serialize");
        let p = &self.params;
        let mut out = Vec::with_capacity(64 + hyper.len() + 8 * p.params.len());
        out.extend_from_slice(POLICY_MAGIC);
        out.extend_from_slice(&POLICY_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.config_hash);
        out.extend_from_slice(&(hyper.len() as u32).to_le_bytes());
        out.extend_from_slice(&hyper);
        out.extend_from_slice(&(p.widths.len() as u32).to_le_bytes());
        for &w in &p.widths {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
        out.extend_from_slice(&(p.params.len() as u64).to_le_bytes());
        for v in &p.params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };
        if r.take(8)? != POLICY_MAGIC {
            return Err(Error::PolicyFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != POLICY_FORMAT_VERSION {
            return Err(Error::PolicyFormat(format!(
                "unsupported version {version}"
            )));
        }
        let config_hash: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let hyper_len = r.u32()? as usize;
        let hyper: RlHyperParams = serde_json::from_slice(r.take(hyper_len)?)
            .map_err(|e| Error::PolicyFormat(format!("hyperparameters: {e}")))?;
        let layers = r.u32()? as usize;
        let widths = (0..layers)
            .map(|_| r.u32().map(|w| w as usize))
            .collect::<Result<Vec<_>>>()?;
        let expected = PolicyParams::layer_widths(&hyper);
        if widths != expected {
            return Err(Error::PolicyFormat(format!(
                "layer widths {widths:?} do not match {expected:?}"
            )));
        }
        let count = r.u64()? as usize;
        let want: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if count != want {
            return Err(Error::PolicyFormat(format!(
                "expected {want} parameters, found {count}"
            )));
        }
        let params = (0..count)
            .map(|_| {
                r.take(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            })
            .collect::<Result<Vec<_>>>()?;
        if !r.buf.is_empty() {
            return Err(Error::PolicyFormat("trailing bytes".into()));
        }
        Ok(Self {
            config_hash,
            params: PolicyParams {
                widths,
                params,
                hyper,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), lr in 0.0f64..1.0, h in 1usize..8) {
            let hyper = RlHyperParams { learning_rate: lr, hidden: vec![h, h + 1], ..Default::default() };
            let mut params = PolicyParams::init(&hyper, &mut ChaCha8Rng::seed_from_u64(seed));
            params.params[0] = -0.0;
            let file = PolicyFile { config_hash: [seed as u8; 32], params };
            let back = PolicyFile::from_bytes(&file.to_bytes()).unwrap();
            prop_assert_eq!(back.config_hash, file.config_hash);
            prop_assert_eq!(&back.params.hyper, &file.params.hyper);
            let a: Vec<u64> = file.params.params.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.params.params.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_corruption() {
        let file = PolicyFile {
            config_hash: [0; 32],
            params: PolicyParams::zeros(&RlHyperParams::default()),
        };
        let bytes = file.to_bytes();
        assert!(PolicyFile::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(PolicyFile::from_bytes(&bad).is_err());
        let mut bad = bytes;
        bad[8] = 9;
        assert!(matches!(
            PolicyFile::from_bytes(&bad),
            Err(Error::PolicyFormat(_))
        ));
    }
}
