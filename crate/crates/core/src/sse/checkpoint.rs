//! Versioned binary chain checkpoints. Resuming reproduces the exact
//! continuation: the generator state (seed, stream, word position) is
//! stored alongside the configuration.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Op, SseConfig};
use crate::error::{Error, Result};
use crate::model::Boundary;

const MAGIC: &[u8; 8] = b"NHSSECKP";
const VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u128(w: &mut impl Write, v: u128) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_u128(r: &mut impl Read) -> Result<u128> {
    let mut b = [0u8; 16];
    r.read_exact(&mut b)?;
    Ok(u128::from_le_bytes(b))
}

impl SseConfig {
    pub fn save_checkpoint(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        put_u32(w, VERSION)?;
        put_u64(w, self.n_sites as u64)?;
        put_u64(w, self.n_bonds as u64)?;
        w.write_all(&[match self.boundary {
            Boundary::Open => 0,
            Boundary::Periodic => 1,
            Boundary::Antiperiodic => 2,
        }])?;
        // alpha, bit-packed.
        let mut bytes = vec![0u8; self.n_sites.div_ceil(8)];
        for (i, &up) in self.alpha.iter().enumerate() {
            if up {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&bytes)?;
        put_u64(w, self.ops.len() as u64)?;
        for op in &self.ops {
            put_u32(w, op.raw())?;
        }
        put_u64(w, self.n as u64)?;
        put_u64(w, self.n_left as u64)?;
        put_u64(w, self.n_right as u64)?;
        put_u64(w, self.seed)?;
        w.write_all(&self.rng.get_seed())?;
        put_u64(w, self.rng.get_stream())?;
        put_u128(w, self.rng.get_word_pos())?;
        Ok(())
    }

    pub fn load_checkpoint(r: &mut impl Read) -> Result<SseConfig> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = get_u32(r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version} (expected {VERSION})"
            )));
        }
        let n_sites = get_u64(r)? as usize;
        let n_bonds = get_u64(r)? as usize;
        let mut bbyte = [0u8; 1];
        r.read_exact(&mut bbyte)?;
        let boundary = match bbyte[0] {
            0 => Boundary::Open,
            1 => Boundary::Periodic,
            2 => Boundary::Antiperiodic,
            other => return Err(Error::Checkpoint(format!("bad boundary tag {other}"))),
        };
        let mut bytes = vec![0u8; n_sites.div_ceil(8)];
        r.read_exact(&mut bytes)?;
        let alpha: Vec<bool> = (0..n_sites).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
        let m = get_u64(r)? as usize;
        let mut ops = Vec::with_capacity(m);
        for _ in 0..m {
            ops.push(Op::from_raw(get_u32(r)?));
        }
        let n = get_u64(r)? as usize;
        let n_left = get_u64(r)? as i64;
        let n_right = get_u64(r)? as i64;
        let seed = get_u64(r)?;
        let mut rng_seed = [0u8; 32];
        r.read_exact(&mut rng_seed)?;
        let stream = get_u64(r)?;
        let word_pos = get_u128(r)?;
        let mut rng = ChaCha8Rng::from_seed(rng_seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);

        let cfg = SseConfig {
            n_sites,
            n_bonds,
            boundary,
            alpha,
            ops,
            n,
            n_left,
            n_right,
            rng,
            seed,
            workspace: Default::default(),
        };
        cfg.check_periodicity()
            .map_err(|e| Error::Checkpoint(format!("inconsistent checkpoint: {e}")))?;
        Ok(cfg)
    }
}
